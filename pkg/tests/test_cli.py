"""Command-line surface tests: validate, compile, batch, consult."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from dsshell import demo_kb_path
from dsshell.cli import main
from dsshell.script import ScriptError, parse_script

DEMO = demo_kb_path()

BROKEN_KB = """
(frame goal (x y))
(attribute q askable "?" (a b))
(partition p)
(rule dup :partition p :lhs ((q a)) :rhs-mass (((goal x) 0.5)))
(rule dup :partition p :lhs ((q b)) :rhs-mass (((goal y) 0.5)))
"""


def run_cli(argv, stdin_text=None):
    proc = subprocess.run(
        [sys.executable, "-m", "dsshell.cli", *argv],
        capture_output=True,
        text=True,
        input=stdin_text,
        timeout=60,
    )
    return proc


# --- validate -------------------------------------------------------------------


def test_validate_demo_ok(capsys):
    assert main(["validate", DEMO]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_duplicate_rule_id_lists_both_locations(tmp_path, capsys):
    bad = tmp_path / "bad.kb"
    bad.write_text(BROKEN_KB, encoding="utf-8")
    assert main(["validate", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "duplicate rule id" in err
    assert "6:1" in err  # the redefinition
    assert "line 5" in err  # the original


def test_validate_missing_file():
    assert main(["validate", "/nonexistent/nope.kb"]) == 2


def test_validate_semantic_error(tmp_path, capsys):
    bad = tmp_path / "bad.kb"
    bad.write_text(
        "(frame dangling (x y))\n(frame goal (p q))\n"
        "(attribute a askable \"?\" (v w))\n(partition p1)\n"
        "(rule r :partition p1 :lhs ((a v)) :rhs-mass (((goal p) 0.5)))",
        encoding="utf-8",
    )
    assert main(["validate", str(bad)]) == 1
    assert "dangling" in capsys.readouterr().err


# --- compile -------------------------------------------------------------------


def test_compile_writes_deterministic_dot(tmp_path, capsys):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["compile", DEMO, "--out-dir", str(out_a)]) == 0
    assert main(["compile", DEMO, "--out-dir", str(out_b)]) == 0
    file_a = out_a / "play_site.site_analysis.dot"
    file_b = out_b / "play_site.site_analysis.dot"
    assert file_a.read_bytes() == file_b.read_bytes()
    assert '"level:beds_deepen"' in file_a.read_text()


def test_compile_json_format(tmp_path):
    assert main(["compile", DEMO, "--format", "json", "--out-dir", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "play_site.site_analysis.json").read_text())
    assert payload["partition"] == "site_analysis"


def test_compile_invalid_kb_writes_nothing(tmp_path):
    bad = tmp_path / "bad.kb"
    bad.write_text(
        "(frame lonely (x y))\n(partition p)\n", encoding="utf-8"
    )  # verifiable attribute without a concluding rule
    out = tmp_path / "out"
    assert main(["compile", str(bad), "--out-dir", str(out)]) == 1
    assert not out.exists() or not list(out.iterdir())


# --- batch ----------------------------------------------------------------------


def test_batch_worked_example(tmp_path, capsys, worked_script):
    script = tmp_path / "answers.txt"
    script.write_text(worked_script, encoding="utf-8")
    assert main(["batch", DEMO, str(script), "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    site = report["frames"]["site_of_play"]
    by_subset = {tuple(r["subset"]): r["mass"] for r in site["masses"]}
    assert by_subset[("margin",)] == pytest.approx(0.745, abs=1e-3)
    assert report["conclusions"][0]["value"] == "margin"
    assert report["status"] == "concluded"


def test_batch_table_after_dist_answer(tmp_path, capsys):
    script = tmp_path / "answers.txt"
    script.write_text(
        "volunteer initial_signs margin_trend\nanswer dist less_equal_200\n",
        encoding="utf-8",
    )
    assert main(["batch", DEMO, str(script), "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    by_subset = {
        tuple(r["subset"]): r["mass"]
        for r in report["frames"]["site_of_play"]["masses"]
    }
    assert by_subset[("shelf", "margin")] == pytest.approx(0.576, abs=1e-3)
    assert by_subset[("margin",)] == pytest.approx(0.272, abs=1e-3)
    assert by_subset[("shelf",)] == pytest.approx(0.109, abs=1e-3)
    assert by_subset[("craton",)] == pytest.approx(0.022, abs=1e-3)


def test_batch_empty_script_exhausts(tmp_path, capsys):
    script = tmp_path / "empty.txt"
    script.write_text("# nothing\n", encoding="utf-8")
    assert main(["batch", DEMO, str(script), "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["status"] == "exhausted"
    for frame in report["frames"].values():
        assert frame["ignorance"] == 1.0


def test_batch_mismatched_answer_reports_line(tmp_path, capsys):
    script = tmp_path / "bad.txt"
    script.write_text(
        "volunteer initial_signs margin_trend\nanswer move seaward\n",
        encoding="utf-8",
    )
    assert main(["batch", DEMO, str(script)]) == 1
    err = capsys.readouterr().err
    assert "line 2" in err


def test_batch_missing_script_file(capsys):
    assert main(["batch", DEMO, "/nonexistent/script.txt"]) == 2


def test_batch_deterministic_bytes(tmp_path, worked_script):
    script = tmp_path / "answers.txt"
    script.write_text(worked_script, encoding="utf-8")
    outs = [
        run_cli(["batch", DEMO, str(script), "--format", "json"]).stdout
        for _ in range(2)
    ]
    assert outs[0] == outs[1]


def test_batch_threshold_flag(tmp_path, capsys):
    script = tmp_path / "answers.txt"
    script.write_text("volunteer initial_signs margin_trend\n", encoding="utf-8")
    assert main(["batch", DEMO, str(script), "--format", "json", "--threshold", "0.2"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["status"] == "concluded"
    assert report["conclusions"][0]["met_threshold"] is True


def test_threshold_env_override(tmp_path, worked_script, monkeypatch, capsys):
    monkeypatch.setenv("DSSHELL_THRESHOLD", "0.99")
    script = tmp_path / "answers.txt"
    script.write_text(worked_script, encoding="utf-8")
    assert main(["batch", DEMO, str(script), "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["threshold"] == 0.99
    # 0.973 no longer crosses; beds_deepen propagates sub-threshold
    prop = next(e for e in report["trace"] if e["kind"] == "propagate")
    assert prop["sub_threshold"] is True


# --- script parsing ---------------------------------------------------------------


def test_parse_script_directives():
    ds = parse_script(
        "# comment\nanswer dist less_equal_200 0.9\nvolunteer move seaward\n"
        "unknown\nirrelevant\n"
    )
    kinds = [d.kind for d in ds]
    assert kinds == ["answer", "volunteer", "unknown", "irrelevant"]
    assert ds[0].confidence == 0.9
    assert ds[1].confidence == 1.0


def test_parse_script_rejects_garbage():
    with pytest.raises(ScriptError):
        parse_script("frobnicate everything\n")
    with pytest.raises(ScriptError):
        parse_script("answer dist\n")


# --- consult (stdin-driven) ---------------------------------------------------------


def consult_feed(worked_script):
    """Translate the batch script into interactive consult keystrokes."""
    lines = []
    for raw in worked_script.strip().splitlines():
        parts = raw.split()
        if parts[0] == "volunteer":
            lines.append(" ".join(["volunteer", *parts[1:]]))
        else:  # answer <attr> <value> [conf] -> value [conf]
            lines.append(" ".join(parts[2:]))
    return "\n".join(lines) + "\n"


def test_consult_equals_batch(tmp_path, worked_script):
    script = tmp_path / "answers.txt"
    script.write_text(worked_script, encoding="utf-8")
    batch = run_cli(["batch", DEMO, str(script), "--format", "json"])
    assert batch.returncode == 0

    feed = consult_feed(worked_script)
    consult = run_cli(["consult", DEMO, "--format", "json"], stdin_text=feed)
    assert consult.returncode == 0
    consult_report = json.loads(consult.stdout.strip().splitlines()[-1])
    batch_report = json.loads(batch.stdout)
    assert consult_report == batch_report


def test_consult_show_and_quit():
    out = run_cli(["consult", DEMO], stdin_text="show\nquit\n")
    assert out.returncode == 0
    assert "consultation report" in out.stdout
    # 'show' printed a belief table before the question repeated
    assert out.stdout.count("=== consultation report ===") >= 2


def test_consult_bad_value_reprompts():
    out = run_cli(
        ["consult", DEMO],
        stdin_text="volunteer initial_signs margin_trend\nbogus_value\nquit\n",
    )
    assert out.returncode == 0
    assert "!" in out.stdout  # error surfaced, session kept going


# --- serve failure paths -----------------------------------------------------------


def test_serve_port_busy_exits_2():
    import socket

    blocker = socket.socket()
    blocker.bind(("127.0.0.1", 0))
    blocker.listen(1)
    port = blocker.getsockname()[1]
    try:
        assert main(["serve", DEMO, "--listen", f"127.0.0.1:{port}"]) == 2
    finally:
        blocker.close()


def test_serve_bad_listen_address():
    assert main(["serve", DEMO, "--listen", "nonsense"]) == 2


# --- edit ------------------------------------------------------------------------


def test_edit_appends_rule_and_rewrites_file(tmp_path):
    kb_file = tmp_path / "ops.kb"
    kb_file.write_text(
        "(frame cause (a_cause b_cause))\n"
        '(attribute sign askable "Observed sign?" (up down))\n'
        "(partition ops)\n",
        encoding="utf-8",
    )
    feed = "sign, up\n\ncause, a_cause\n\n7\n9\n\n"
    out = run_cli(["edit", str(kb_file)], stdin_text=feed)
    assert out.returncode == 0
    from dsshell.kb import parse_kb as reparse

    kb = reparse(kb_file.read_text(encoding="utf-8"))
    assert len(kb.rules) == 1
    assert kb.rules[0].id == "r-ed1"
    assert kb.rules[0].relevance == 9
