"""Answer scripts: non-interactive replay of a consultation.

One directive per line:

    answer <attribute> <value> [confidence]
    volunteer <attribute> <value> [confidence]
    unknown
    irrelevant

``#`` starts a comment.  When the script runs out before the session ends,
remaining directed questions are answered ``unknown`` and volunteer prompts
are declined, so every replay terminates.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import ASK, AWAITING, IRRELEVANT, Session, UNKNOWN, VOLUNTEER


class ScriptError(ValueError):
    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Directive:
    line: int
    kind: str  # "answer" | "volunteer" | "unknown" | "irrelevant"
    attribute: str | None = None
    value: str | None = None
    confidence: float = 1.0


def parse_script(text: str) -> list[Directive]:
    directives: list[Directive] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind in (UNKNOWN, IRRELEVANT):
            if len(parts) != 1:
                raise ScriptError(f"{kind} takes no arguments", lineno)
            directives.append(Directive(lineno, kind))
        elif kind in ("answer", "volunteer"):
            if len(parts) not in (3, 4):
                raise ScriptError(
                    f"{kind} takes: attribute value [confidence]", lineno
                )
            confidence = 1.0
            if len(parts) == 4:
                try:
                    confidence = float(parts[3])
                except ValueError:
                    raise ScriptError(
                        f"bad confidence {parts[3]!r}", lineno
                    ) from None
            directives.append(
                Directive(lineno, kind, parts[1], parts[2], confidence)
            )
        else:
            raise ScriptError(f"unknown directive {kind!r}", lineno)
    return directives


def run_script(session: Session, directives: list[Directive]) -> Session:
    """Apply directives in order, then drain the session to completion."""
    for d in directives:
        if session.status != AWAITING:
            raise ScriptError(
                f"session already {session.status}; directive ignored", d.line
            )
        pending = session.pending
        try:
            if d.kind == "volunteer":
                session.volunteer([(d.attribute, d.value, d.confidence)])
            elif d.kind == "answer":
                if pending is None or pending.kind != ASK:
                    raise ScriptError(
                        "answer given but no directed question is pending", d.line
                    )
                if pending.attribute != d.attribute:
                    raise ScriptError(
                        f"answer names {d.attribute!r} but the pending question "
                        f"asks about {pending.attribute!r}",
                        d.line,
                    )
                session.submit_answer(d.attribute, d.value, d.confidence)
            elif d.kind == UNKNOWN:
                if pending is None:
                    raise ScriptError("nothing is pending", d.line)
                if pending.kind == VOLUNTEER:
                    session.volunteer([])
                else:
                    session.submit_answer(pending.attribute, UNKNOWN)
            elif d.kind == IRRELEVANT:
                if pending is None or pending.kind != ASK:
                    raise ScriptError(
                        "irrelevant given but no directed question is pending",
                        d.line,
                    )
                session.submit_answer(pending.attribute, IRRELEVANT)
        except ScriptError:
            raise
        except ValueError as e:
            raise ScriptError(str(e), d.line) from e
    drain(session)
    return session


def drain(session: Session) -> None:
    """Answer every remaining prompt with unknown / a declined volunteer."""
    while session.status == AWAITING:
        pending = session.pending
        if pending is None:  # pragma: no cover - engine always sets one
            break
        if pending.kind == VOLUNTEER:
            session.volunteer([])
        else:
            session.submit_answer(pending.attribute, UNKNOWN)
