import json

import numpy as np
import pytest

from degree_engine.cli import build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


def test_degree_worked_system(capsys):
    code, data = run_json(capsys, "degree", "-m", "x1^2 - 2*x2^2; x1*x2", "-b", "[-3,3]x[-3,3]", "-y", "1,0")
    assert code == 0
    assert data["schema"] == "degree-engine/1"
    assert data["degree"] == 2
    assert sorted(r["index"] for r in data["root_set"]["roots"]) == [1, 1]


def test_degree_scalar_examples(capsys):
    code, data = run_json(capsys, "degree", "-m", "x1", "-b", "[-1,1]", "-y", "0")
    assert code == 0 and data["degree"] == 1
    code, data = run_json(capsys, "degree", "-m", "x1", "-b", "[-1,1]", "-y", "5")
    assert code == 0 and data["degree"] == 0 and data["root_set"]["roots"] == []
    assert data["boundary_gap"] == pytest.approx(4.0)


def test_degree_from_map_file(capsys, tmp_path):
    path = tmp_path / "f.map"
    path.write_text("# worked system\nx1^2 - 2*x2^2\nx1*x2\n")
    code, data = run_json(capsys, "degree", "-M", str(path), "-b", "[-3,3]x[-3,3]", "-y", "1,0")
    assert code == 0 and data["degree"] == 2


def test_table_format(capsys):
    code, out, _ = run(capsys, "degree", "-m", "x1", "-b", "[-1,1]", "--format", "table")
    assert code == 0
    assert any(line.split()[:2] == ["degree", "1"] for line in out.splitlines())


def test_exit_codes(capsys):
    assert run(capsys, "degree", "-m", "x1", "-b", "[-1,1]", "-y", "1")[0] == 2
    code, data = run_json(capsys, "degree", "-m", "x1", "-b", "[-1,1]", "-y", "1")
    assert data["error"] in ("NotAdmissible", "BoundaryHit")
    # a dedup radius as large as the box merges the two roots, which the winding number catches
    code, data = run_json(capsys, "degree", "-m", "x1^2 - 2*x2^2; x1*x2", "-b", "[-3,3]x[-3,3]", "-y", "1,0",
                          "--tol", "dedup_rel=10")
    assert code == 3 and data["error"] == "OracleDisagreement"
    assert run(capsys, "degree", "-m", "x1 +", "-b", "[-1,1]")[0] == 1
    assert run(capsys, "degree", "-m", "x1", "-b", "[-1,1]x[0,1]")[0] == 1
    assert run(capsys, "degree", "-m", "x1", "-b", "[-1,1]", "--tol", "nonsense=1")[0] == 1
    assert run(capsys, "degree", "-M", "/nonexistent/map", "-b", "[-1,1]")[0] == 1
    assert run(capsys, "nontrivial", "-m", "x1; x2", "-b", "[-1,1]x[-1,1]")[0] == 4


@pytest.mark.parametrize("argv", [
    ["degree", "-m", "x1", "-b", "[-1,1]", "--bogus"],
    ["degree", "-m", "x1"],
    ["frobnicate"],
    ["trace", "-b", "[-1,1]"],
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 1
    capsys.readouterr()


def test_help_lists_every_flag():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, p in sub.choices.items():
        text = p.format_help()
        for action in p._actions:
            for flag in action.option_strings:
                assert flag in text, (name, flag)
        for flag in ("--seed", "--density", "--tol", "--no-oracle", "--format"):
            assert flag in text, (name, flag)


def test_verify_axioms(capsys):
    code, data = run_json(capsys, "verify-axioms", "--only", "normalization")
    assert code == 0 and data["ok"]
    assert data["results"]["normalization"]["failed"] == 0
    code, data = run_json(capsys, "verify-axioms", "--only", "additivity", "--count", "20", "--inject-fault")
    assert code == 4 and not data["ok"]
    assert data["results"]["additivity"]["failed"] > 0


def test_verify_axioms_default_corpus(capsys):
    code, data = run_json(capsys, "verify-axioms")
    assert code == 0
    assert all(t["failed"] == 0 and t["passed"] > 0 for t in data["results"].values())


def test_bifurcate(capsys):
    code, data = run_json(capsys, "bifurcate", "-m",
                          "x1 - lambda*sin(x1 + x1^2 - x2^2); 2*x1 + x2 + 1 - cos(x1*x2) - 1 + cos(0)",
                          "-a", "0", "-b", "2")
    assert code == 0
    assert any(b["lo"] <= 1.0 <= b["hi"] and b["hi"] - b["lo"] <= 1e-8 for b in data["brackets"])


def test_fixed_point(capsys):
    code, data = run_json(capsys, "fixed-point", "-m", "cos(x1)", "-b", "[-2,2]")
    assert code == 0
    x = data["point"][0]
    assert abs(x - np.cos(x)) < 1e-12


def test_solve(capsys):
    code, data = run_json(capsys, "solve", "-m", "x1 + x2; x2",
                          "-H", "lambda*(x1^3 + sin(x1*x2)); lambda*(2*cos(x1*x2) + x2^5)",
                          "-b", "[-3.5,3.5]x[-2.5,2.5]")
    assert code == 0 and data["residual"] < 1e-9


def test_trace(capsys, tmp_path):
    path = tmp_path / "arcs.csv"
    code, data = run_json(capsys, "trace", "-H", "x1^2 - (1 - lambda)", "-b", "[-2,2]", "--check",
                          "--csv", str(path))
    assert code == 0
    assert [c["kind"] for c in data["components"]] == ["arc"]
    ends = sorted((e["face"], round(e["x"][0], 9), e["sign"]) for e in data["endpoints"])
    assert ends == [(0, -1.0, -1), (0, 1.0, 1)]
    assert data["pairing_check"]["ok"]
    assert path.read_text().startswith("component,kind,step,x1,lambda\n")


def test_reports_echo_seed_and_config(capsys):
    for argv in (["degree", "-m", "x1", "-b", "[-1,1]", "--seed", "9"],
                 ["trace", "-H", "x1 - lambda", "-b", "[-2,2]", "--seed", "9"],
                 ["verify-axioms", "--only", "normalization", "--seed", "9"]):
        _, data = run_json(capsys, *argv)
        assert data["seed"] == 9 and data["config"]["seed"] == 9


def test_byte_identical_output(capsys):
    argv = ["degree", "-m", "x1^2 - x2^2; 2*x1*x2", "-b", "[-2,2]x[-2,2]", "--seed", "5"]
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv)[1]
    assert first == second
    assert json.loads(first)["sigma"] > 0


def test_thread_count_does_not_change_output(capsys, monkeypatch):
    argv = ["trace", "-H", "x1^3 - 3*x1*x2^2; 3*x1^2*x2 - x2^3", "--alpha", "0.5 - 0.8*lambda; 0.2 + 0.5*lambda",
            "-b", "[-2,2]x[-2,2]"]
    monkeypatch.setenv("DEGREE_ENGINE_THREADS", "1")
    one = run(capsys, *argv)[1]
    monkeypatch.setenv("DEGREE_ENGINE_THREADS", "4")
    four = run(capsys, *argv)[1]
    assert one == four
