"""Interactive rule authoring.

The editor collects LHS evidence pairs, RHS conclusion subsets, a 1-10
ranking per conclusion, and a 1-10 relevance for the whole pattern, then
appends the rule in rankings form (masses are normalized at compile time).
Conclusions entered with a leading ``not`` are complemented against their
frame immediately.  Bad input re-prompts; it never raises.
"""

from __future__ import annotations

from typing import Callable

from .evidence import HypSubset, negate_subset
from .kb import (
    EvidencePattern,
    KnowledgeBase,
    RANK_FORM,
    Rule,
)


def _normalize(token: str) -> str:
    return "_".join(token.strip().split())


def _next_rule_id(kb: KnowledgeBase) -> str:
    existing = {r.id for r in kb.rules}
    n = 1
    while f"r-ed{n}" in existing:
        n += 1
    return f"r-ed{n}"


def editor_session(
    kb: KnowledgeBase,
    read: Callable[[str], str] = input,
    write: Callable[[str], None] = print,
) -> KnowledgeBase:
    """Prompt for one rule and return the knowledge base with it appended."""

    def ask(prompt: str) -> str:
        try:
            return read(prompt)
        except EOFError:
            return ""

    def ask_pairs() -> list[EvidencePattern]:
        patterns: list[EvidencePattern] = []
        write(
            "LHS evidence, one 'attribute, value' pair per line "
            "(blank line to finish; prefix the value with 'not ' to negate):"
        )
        while True:
            line = ask("lhs> ").strip()
            if not line:
                if patterns:
                    return patterns
                write("at least one evidence pair is required")
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                write("expected: attribute, value")
                continue
            attr = _normalize(parts[0])
            value_text = parts[1]
            negated = value_text.lower().startswith("not ")
            if negated:
                value_text = value_text[4:]
            value = _normalize(value_text)
            decl = kb.attributes.get(attr)
            if decl is None:
                write(f"unknown attribute {attr!r}")
                continue
            if value not in decl.values:
                write(f"{value!r} is not a value of {attr!r}")
                continue
            patterns.append(EvidencePattern(attr, value, negated))

    def ask_conclusions() -> list[HypSubset]:
        subsets: list[HypSubset] = []
        write(
            "RHS conclusions, one per line as 'attribute, value, value...' "
            "(blank line to finish; prefix the attribute with 'not ' to negate):"
        )
        while True:
            line = ask("rhs> ").strip()
            if not line:
                if subsets:
                    return subsets
                write("at least one conclusion is required")
                continue
            negated = line.lower().startswith("not ")
            if negated:
                line = line[4:]
            parts = [_normalize(p) for p in line.split(",")]
            if len(parts) < 2:
                write("expected: attribute, value[, value...]")
                continue
            attr, values = parts[0], parts[1:]
            decl = kb.attributes.get(attr)
            if decl is None:
                write(f"unknown attribute {attr!r}")
                continue
            if subsets and subsets[0].frame.attribute != attr:
                write(
                    "a rule concludes a single attribute; "
                    f"this one already concludes {subsets[0].frame.attribute!r}"
                )
                continue
            frame = kb.frame_of(attr)
            try:
                subset = frame.subset(values)
                if negated:
                    subset = negate_subset(frame, subset)
            except ValueError as e:
                write(str(e))
                continue
            subsets.append(subset)

    def ask_int(prompt: str, lo: int, hi: int) -> int:
        while True:
            raw = ask(prompt).strip()
            try:
                n = int(raw)
            except ValueError:
                write(f"enter an integer between {lo} and {hi}")
                continue
            if not lo <= n <= hi:
                write(f"enter an integer between {lo} and {hi}")
                continue
            return n

    def ask_rankings(count: int) -> list[int]:
        while True:
            raw = ask(f"rank the {count} conclusion(s), 1-10, space separated> ")
            parts = raw.split()
            if len(parts) != count:
                write(f"expected {count} ranking(s)")
                continue
            try:
                ranks = [int(p) for p in parts]
            except ValueError:
                write("rankings must be integers")
                continue
            if any(not 1 <= r <= 10 for r in ranks):
                write("rankings must lie between 1 and 10")
                continue
            return ranks

    def ask_partition() -> str:
        default = kb.start_partition
        while True:
            raw = _normalize(ask(f"partition [{default}]> ")) or default
            if raw in kb.partitions:
                return raw
            write(f"unknown partition {raw!r}; declared: {', '.join(kb.partitions)}")

    lhs = ask_pairs()
    conclusions = ask_conclusions()
    rankings = ask_rankings(len(conclusions))
    relevance = ask_int(
        "relevance of this evidence toward a conclusion, 1-10> ", 1, 10
    )
    partition = ask_partition()
    rule = Rule(
        id=_next_rule_id(kb),
        partition=partition,
        lhs=tuple(lhs),
        conclusions=tuple(zip(conclusions, rankings)),
        form=RANK_FORM,
        relevance=relevance,
    )
    write(f"added rule {rule.id}")
    return kb.with_rule(rule)
