import json

import pytest

from localforge.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def workdir(tmp_path):
    run("generate", "cycle", "--n", 60, "-o", tmp_path / "c60.json")
    run("generate", "cycle", "--n", 200, "-o", tmp_path / "c200.json")
    run("generate", "cycle", "--n", 4, "-o", tmp_path / "c4.json")
    run("generate", "cycle", "--n", 5, "-o", tmp_path / "c5.json")
    run("generate", "tree", "--branching", 3, "--depth", 5, "-o", tmp_path / "tree.json")
    return tmp_path


def test_generate_and_manifest(workdir):
    data = json.loads((workdir / "c60.json").read_text())
    assert data["n"] == 60
    man = json.loads((workdir / "c60.json.manifest.json").read_text())
    assert man["command"] == ["generate"] and man["status"] == 0
    assert str(workdir / "c60.json") in man["outputs"]


def test_unknown_kind_and_bad_arguments(workdir, capsys):
    assert run("generate", "moebius") == 3
    assert run("run", "mis", workdir / "missing.json") == 3
    assert run("run", "partition", workdir / "c60.json", "--eps", "-1") == 3
    assert run("run", "mis", workdir / "c60.json", "--threads", 0) == 3


def test_naive_distance(workdir, capsys):
    assert run("compare", "naive-distance", workdir / "c4.json", workdir / "c5.json") == 0
    assert json.loads(capsys.readouterr().out)["distance"] == "1/2"


def test_awalk(capsys):
    assert run("compare", "awalk", "--words", "0,1,0;1,0,1", "--n", 6) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["nA"] == 2 and rep["exists"] is True


def test_partition_run_then_verify(workdir):
    out = workdir / "part.json"
    assert run("run", "partition", workdir / "c60.json", "--method", "hyperfinite", "--eps", "1/5", "--K", 20, "-o", out) == 0
    assert run("verify", "partition", workdir / "c60.json", out) == 0


def test_tampered_partition_exits_3(workdir):
    out = workdir / "part.json"
    run("run", "hyperfinite", workdir / "c60.json", "--eps", "1/5", "--K", 20, "-o", out)
    data = json.loads(out.read_text())
    cls = data["partition"]["classOf"]
    cls[0], cls[30] = cls[30], cls[0]
    out.write_text(json.dumps(data))
    assert run("verify", "partition", workdir / "c60.json", out) == 3


def test_matching_run_and_verify(workdir):
    out = workdir / "m.json"
    assert run("run", "matching", workdir / "c60.json", "--T", 3, "-o", out) == 0
    data = json.loads(out.read_text())
    assert len(data["edges"]) == 30
    assert run("verify", "matching", workdir / "c60.json", out) == 0


def test_mis_and_tree(workdir):
    assert run("run", "mis", workdir / "c60.json", "-o", workdir / "mis.json") == 0
    assert json.loads((workdir / "mis.json").read_text())["verification"]["pass"]
    assert run("run", "tree-fractional", workdir / "tree.json", "--l", 4, "-o", workdir / "tf.json") == 0


def test_spectrum_csv(workdir):
    out = workdir / "spec.csv"
    assert run("spectrum", "full", workdir / "c4.json", "--csv", "-o", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "index,eigenvalue" and len(lines) == 5
    assert run("spectrum", "estimate", workdir / "c60.json", "--s", 4, "--t", 1, "-o", workdir / "est.json") == 0


def test_runs_are_byte_identical(workdir):
    a, b = workdir / "a.json", workdir / "b.json"
    args = ("run", "strong-family", workdir / "c200.json", "--levels", 2, "--samples", 3, "--seed", 5)
    assert run(*args, "-o", a) == 0
    assert run(*args, "--threads", 4, "-o", b) == 0
    assert a.read_bytes() == b.read_bytes()


def test_report_replay(workdir):
    out = workdir / "m.json"
    run("run", "matching", workdir / "c60.json", "--T", 2, "-o", out)
    assert run("report", f"{out}.manifest.json", "--replay", "-o", workdir / "rep.json") == 0
    assert json.loads((workdir / "rep.json").read_text())["replay"]["pass"]
