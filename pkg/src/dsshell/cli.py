"""Command-line surface: validate, compile, batch, consult, serve.

Exit codes: 0 success, 1 bad knowledge base or script, 2 missing files or
unusable listen address.  The exit threshold resolves in order: --threshold
flag, DSSHELL_THRESHOLD environment variable, the kb's declared value.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .editor import editor_session
from .engine import (
    ASK,
    AWAITING,
    ExitPolicy,
    IRRELEVANT,
    Session,
    UNKNOWN,
    report_text,
)
from .kb import KbError, KnowledgeBase, error_diagnostics, parse_kb, serialize_kb, validate_kb
from .network import compile_network, emit_graph
from .script import ScriptError, drain, parse_script, run_script
from . import server as server_mod

OK, FAIL, IOERR = 0, 1, 2


def _load_kb(path: str) -> KnowledgeBase:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise SystemExit2(f"cannot read {path}: {e}") from e
    return parse_kb(text)


class SystemExit2(Exception):
    """File-level failure, distinct from knowledge-base content errors."""


def _resolve_threshold(args, kb: KnowledgeBase) -> float | None:
    if getattr(args, "threshold", None) is not None:
        return args.threshold
    env = os.environ.get("DSSHELL_THRESHOLD")
    if env:
        try:
            return float(env)
        except ValueError:
            raise SystemExit2(f"bad DSSHELL_THRESHOLD {env!r}") from None
    return None


def _session(args, kb: KnowledgeBase) -> Session:
    threshold = _resolve_threshold(args, kb)
    policy = ExitPolicy(threshold=threshold) if threshold is not None else None
    return Session(kb, policy=policy)


def cmd_validate(args) -> int:
    try:
        kb = _load_kb(args.kb)
    except KbError as e:
        print(f"error[parse]: {e}", file=sys.stderr)
        return FAIL
    diagnostics = validate_kb(kb)
    for d in diagnostics:
        print(str(d), file=sys.stderr if d.severity == "error" else sys.stdout)
    errors = error_diagnostics(diagnostics)
    if errors:
        print(f"{len(errors)} error(s)", file=sys.stderr)
        return FAIL
    print(f"{args.kb}: ok ({len(kb.rules)} rules, {len(kb.partitions)} partitions)")
    return OK


def cmd_compile(args) -> int:
    try:
        kb = _load_kb(args.kb)
    except KbError as e:
        print(f"error[parse]: {e}", file=sys.stderr)
        return FAIL
    errors = error_diagnostics(validate_kb(kb))
    if errors:
        for d in errors:
            print(str(d), file=sys.stderr)
        return FAIL
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    suffix = "dot" if args.format == "dot" else "json"
    stem = Path(args.kb).stem
    for partition in kb.partitions:
        net = compile_network(kb, partition)
        text = emit_graph(net, args.format)
        target = out_dir / f"{stem}.{partition}.{suffix}"
        target.write_text(text, encoding="utf-8")
        print(f"wrote {target}")
    return OK


def _emit_report(session: Session, fmt: str, out=None) -> None:
    out = out if out is not None else sys.stdout
    report = session.report()
    if fmt == "json":
        out.write(json.dumps(report, separators=(",", ":")) + "\n")
    else:
        out.write(report_text(report))


def cmd_batch(args) -> int:
    try:
        kb = _load_kb(args.kb)
        script_text = Path(args.script).read_text(encoding="utf-8")
    except (OSError, SystemExit2) as e:
        print(f"error: {e}", file=sys.stderr)
        return IOERR
    except KbError as e:
        print(f"error[parse]: {e}", file=sys.stderr)
        return FAIL
    try:
        directives = parse_script(script_text)
        session = run_script(_session(args, kb), directives)
    except ScriptError as e:
        print(f"error[script]: {e}", file=sys.stderr)
        return FAIL
    _emit_report(session, args.format)
    return OK


def cmd_consult(args) -> int:
    try:
        kb = _load_kb(args.kb)
    except KbError as e:
        print(f"error[parse]: {e}", file=sys.stderr)
        return FAIL
    session = _session(args, kb)
    print(f"consultation on {args.kb} "
          f"(answers: value [confidence], unknown, irrelevant, show, quit)")
    while session.status == AWAITING:
        q = session.pending
        if q is None:
            break
        if q.kind == ASK:
            print(f"\n{q.text}")
            print(f"  values: {', '.join(q.values)}")
            prompt = f"{q.attribute}> "
        else:
            print(f"\n{q.text}")
            print("  enter: attribute value [confidence], blank line to continue")
            prompt = "volunteer> "
        try:
            line = input(prompt).strip()
        except EOFError:
            drain(session)
            break
        if not line:
            if q.kind != ASK:
                session.volunteer([])
            continue
        words = line.split()
        try:
            if words[0] == "quit":
                break
            if words[0] == "show":
                _emit_report(session, "text")
                continue
            if q.kind != ASK or words[0] == "volunteer":
                if words[0] == "volunteer":
                    words = words[1:]
                if len(words) not in (2, 3):
                    print("expected: attribute value [confidence]")
                    continue
                conf = float(words[2]) if len(words) == 3 else 1.0
                session.volunteer([(words[0], words[1], conf)])
            elif words[0] in (UNKNOWN, IRRELEVANT):
                session.submit_answer(q.attribute, words[0])
            else:
                conf = float(words[1]) if len(words) > 1 else 1.0
                session.submit_answer(q.attribute, words[0], conf)
        except (ValueError, RuntimeError) as e:
            print(f"  ! {e}")
    print()  # keep the report off the last prompt's line
    _emit_report(session, args.format)
    return OK


def cmd_serve(args) -> int:
    try:
        kb = _load_kb(args.kb)
    except KbError as e:
        print(f"error[parse]: {e}", file=sys.stderr)
        return FAIL
    host, _, port_text = args.listen.rpartition(":")
    host = host or "127.0.0.1"
    try:
        port = int(port_text)
    except ValueError:
        print(f"error: bad listen address {args.listen!r}", file=sys.stderr)
        return IOERR
    threshold = _resolve_threshold(args, kb)
    try:
        httpd = server_mod.make_server(kb, host, port, threshold)
    except OSError as e:
        print(f"error: cannot listen on {args.listen}: {e}", file=sys.stderr)
        return IOERR
    actual = httpd.server_address
    print(f"serving {args.kb} on http://{actual[0]}:{actual[1]}", flush=True)
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
    return OK


def cmd_edit(args) -> int:
    try:
        kb = _load_kb(args.kb)
    except KbError as e:
        print(f"error[parse]: {e}", file=sys.stderr)
        return FAIL
    kb = editor_session(kb)
    Path(args.kb).write_text(serialize_kb(kb), encoding="utf-8")
    print(f"updated {args.kb}")
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsshell",
        description="Diagnostic expert-system shell with Dempster-Shafer "
        "evidence combination.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a knowledge base")
    p.add_argument("kb")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compile", help="emit each partition's rule network")
    p.add_argument("kb")
    p.add_argument("--format", choices=["dot", "json"], default="dot")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("batch", help="replay an answer script")
    p.add_argument("kb")
    p.add_argument("script")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("consult", help="interactive terminal consultation")
    p.add_argument("kb")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_consult)

    p = sub.add_parser("serve", help="run the HTTP+JSON session service")
    p.add_argument("kb")
    p.add_argument("--listen", default="127.0.0.1:8737")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("edit", help="append a rule via the interactive editor")
    p.add_argument("kb")
    p.set_defaults(func=cmd_edit)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit2 as e:
        print(f"error: {e}", file=sys.stderr)
        return IOERR


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
