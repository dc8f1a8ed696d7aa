"""Command-line surface, exercised through real subprocesses."""

import json
import subprocess
import sys

BASE = [sys.executable, "-m", "exeplan"]


def run_cli(args, stdin=None):
    return subprocess.run(
        BASE + args, input=stdin, capture_output=True, text=True, timeout=120
    )


def model_args(cli_assets):
    return ["--model", str(cli_assets["model"]), "--planner", str(cli_assets["planner"])]


def test_gen_corpus_is_deterministic(tmp_path):
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for p in (p1, p2):
        proc = run_cli(["gen-corpus", "--out", str(p), "--n-docs", "30", "--seed", "3"])
        assert proc.returncode == 0, proc.stderr
    assert p1.read_bytes() == p2.read_bytes()
    assert len(p1.read_text().splitlines()) == 30


def test_compile_prints_canonical_plan_json(cli_assets):
    proc = run_cli(["compile", "--text", "Drill a hole at the center."] + model_args(cli_assets))
    assert proc.returncode == 0, proc.stderr
    obj = json.loads(proc.stdout)
    assert obj["version"] == 1
    assert obj["task_type"] == "drill"
    assert [s["formula"] for s in obj["steps"]] == ["DrillHole"]
    assert obj["steps"][0]["location"] == "center"
    canonical = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    assert proc.stdout.strip() == canonical


def test_compile_failure_exits_one(cli_assets):
    proc = run_cli(["compile", "--text", "hello there"] + model_args(cli_assets))
    assert proc.returncode == 1
    assert "FAILED NO_SUBGOALS" in proc.stdout + proc.stderr


def test_compile_below_threshold_exits_one(cli_assets):
    proc = run_cli(
        ["compile", "--text", "Drill a hole at the center.", "--threshold", "1e9"]
        + model_args(cli_assets)
    )
    assert proc.returncode == 1
    assert "BELOW_THRESHOLD" in proc.stdout + proc.stderr


def test_usage_errors_exit_two(cli_assets):
    proc = run_cli(["no-such-command"])
    assert proc.returncode == 2
    assert proc.stderr
    proc = run_cli(["gen-corpus"])  # missing required --out
    assert proc.returncode == 2
    proc = run_cli(["compile", "--text", "Drill a hole.", "--mode", "eager"] + model_args(cli_assets))
    assert proc.returncode == 2


def test_eval_reports_both_modes(cli_assets):
    corpus = ["--corpus", str(cli_assets["corpus"])]
    lit = run_cli(["eval", "--mode", "literal"] + corpus + model_args(cli_assets))
    assert lit.returncode == 0, lit.stderr
    assert "detection average precision" in lit.stdout
    exe = run_cli(["eval", "--mode", "exeplan", "--json"] + corpus + model_args(cli_assets))
    assert exe.returncode == 0, exe.stderr
    payload = json.loads(exe.stdout)

    def proportion(text):
        for line in text.splitlines():
            if line.startswith("executable proportion"):
                return float(line.split()[-1])
        raise AssertionError("proportion line missing")

    assert payload["plans"]["executable_proportion"] >= proportion(lit.stdout)


def test_repl_chains_world_state(cli_assets):
    proc = run_cli(
        ["repl"] + model_args(cli_assets),
        stdin="drill a hole at the center\ninstall a screw at the center\n\nquit\n",
    )
    assert proc.returncode == 0, proc.stderr
    out = proc.stdout
    assert out.count("status: EXECUTABLE") == 2
    assert "session closed after 2 turns" in out


def test_repl_reports_failure_items(cli_assets):
    proc = run_cli(
        ["repl"] + model_args(cli_assets),
        stdin="install a screw at the center\nquit\n",
    )
    assert proc.returncode == 0
    assert "FAILED MES_INCOMPLETE" in proc.stdout
    assert "InstallScrew.precon:a-hole-exists" in proc.stdout


def test_repl_json_mode_prints_plan_documents(cli_assets):
    proc = run_cli(
        ["repl", "--json"] + model_args(cli_assets),
        stdin="drill a hole at the center\nquit\n",
    )
    assert proc.returncode == 0
    plan_lines = [l for l in proc.stdout.splitlines() if l.startswith("{")]
    assert len(plan_lines) == 1
    obj = json.loads(plan_lines[0])
    assert obj["task_type"] == "drill"
