import csv
import json
import subprocess
import sys

import pytest

from breakseg.cli import main
from breakseg.signals import Signal, TrueModel


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return path
    return write


def test_simulate_writes_reproducible_files(tmp_path, capsys):
    args = ["simulate", "--P", 7000, "--spacing", 1000, "--d", 700, "--seed", 1]
    assert run(args + ["--out-dir", tmp_path / "a"], capsys)[0] == 0
    assert run(args + ["--out-dir", tmp_path / "b"], capsys)[0] == 0
    for name in ("signal.csv", "signal.truth.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    lines = (tmp_path / "a" / "signal.csv").read_text().splitlines()
    assert lines[0] == "# seed=1" and lines[1].startswith("# params=")
    sig = Signal.from_csv(tmp_path / "a" / "signal.csv")
    assert sig.d == 700
    truth = json.loads((tmp_path / "a" / "signal.truth.json").read_text())
    assert truth["seed"] == 1 and truth["breaks"] == [1000, 2000, 3000, 4000, 5000, 6000]
    assert TrueModel.from_json(tmp_path / "a" / "signal.truth.json").breaks == truth["breaks"]


@pytest.mark.parametrize("extra", [["--d", 0], ["--d", 8000], ["--d", 10, "--sd", "0"],
                                   ["--d", 10, "--seed", "x"]])
def test_simulate_validation(tmp_path, capsys, extra):
    args = ["simulate", "--P", 7000, "--spacing", 1000, "--seed", 1, "--out-dir", tmp_path]
    code, _, err = run(args + extra, capsys)
    assert code == 2 and "error" in err


def test_error_exact(files, capsys):
    B = files("B.csv", "4\n14\n")
    code, out, _ = run(["error", "exact", "--breaks", B, "--guesses", files("G.csv", "7\n"),
                        "--positions", 22], capsys)
    assert code == 0
    assert json.loads(out) == {"fp": 0, "fn": 1, "imprecision": 0.6, "total": 1.6}
    code, out, _ = run(["error", "exact", "--breaks", B, "--guesses", files("E.csv", ""),
                        "--positions", 22], capsys)
    assert code == 0 and json.loads(out)["total"] == 2


def test_error_exact_duplicates_warn(files, capsys, caplog):
    B = files("B.csv", "4\n14\n")
    code, out, _ = run(["error", "exact", "--breaks", B, "--guesses", files("G.csv", "# guesses\n7\n\n7\n"),
                          "--positions", 22], capsys)
    assert code == 0 and json.loads(out)["total"] == 1.6
    assert "duplicate" in caplog.text and "G.csv:4:" in caplog.text


@pytest.mark.parametrize("text,line", [("7\n30\n", 2), ("7\nseven\n", 2), ("\n\n0\n", 3)])
def test_error_exact_rejects_guess_file(files, capsys, text, line):
    code, _, err = run(["error", "exact", "--breaks", files("B.csv", "4\n14\n"),
                        "--guesses", files("G.csv", text), "--positions", 22], capsys)
    assert code == 2
    assert f"G.csv:{line}:" in err


def test_error_exact_rejects_bad_breaks(files, capsys):
    code, _, err = run(["error", "exact", "--breaks", files("B.csv", "14\n4\n"),
                        "--guesses", files("G.csv", "7\n"), "--positions", 22], capsys)
    assert code == 2
    code, _, _ = run(["error", "exact", "--breaks", files("B.csv", "4\n14\n"),
                      "--guesses", "missing.csv", "--positions", 22], capsys)
    assert code == 2


ANNOTATIONS = "lower,upper,min_breaks,max_breaks\n5,10,0,0\n20,30,1,1\n40,70,1,\n80,99,0,0\n"


def test_error_annotation(files, capsys):
    A = files("A.csv", ANNOTATIONS)
    G = files("G.csv", "7\n25\n50\n")
    code, out, _ = run(["error", "annotation", "--annotations", A, "--guesses", G, "--zero-one"], capsys)
    assert code == 0
    assert json.loads(out) == {"fp": 1, "fn": 0, "total": 1, "zero_one": 1}
    code, out, _ = run(["error", "annotation", "--annotations", files("U.csv", "lower,upper,min_breaks,max_breaks\n20,30,1,1\n"),
                        "--guesses", files("H.csv", "3\n25\n"), "--with-negatives", 100], capsys)
    assert code == 0 and json.loads(out)["total"] == 1


def test_error_annotation_rejects(files, capsys):
    G = files("G.csv", "7\n")
    assert run(["error", "annotation", "--annotations", files("A.csv", "lo,hi\n1,2\n"),
                "--guesses", G], capsys)[0] == 2
    assert run(["error", "annotation", "--annotations", files("A2.csv", ANNOTATIONS),
                "--guesses", files("H.csv", "150\n"), "--with-negatives", 100], capsys)[0] == 2


def test_segment(files, capsys):
    path = files("s.csv", "# demo\nposition,value\n1,0\n2,0\n3,10\n4,10\n")
    code, out, _ = run(["segment", "--input", path, "--kmax", 2], capsys)
    assert code == 0
    models = json.loads(out)
    assert [m["k"] for m in models] == [1, 2]
    assert models[1] == {"k": 2, "changes": [2], "means": [0.0, 10.0], "sse": 0.0,
                         "sigma2": 0.0, "breaks": [2]}
    code, out, _ = run(["segment", "--input", path, "--flsa", 1.0], capsys)
    fit = json.loads(out)
    assert code == 0 and fit["lambda2"] == 1.0 and fit["breaks"] == [2]
    assert fit["smoothed"] == pytest.approx([0.5, 0.5, 9.5, 9.5])


def test_segment_rejects(files, capsys):
    assert run(["segment", "--input", files("bad.csv", "x,y\n1,2\n"), "--kmax", 2], capsys)[0] == 2
    assert run(["segment", "--input", files("s.csv", "position,value\n1,0\n"), "--flsa", -1], capsys)[0] == 2
    assert run(["segment", "--input", files("t.csv", "position,value\n1,0\n")], capsys)[0] == 2


def test_sweep_small_grid(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("BREAKSEG_THREADS", "1")
    out = tmp_path / "r.csv"
    code, stdout, _ = run(["sweep", "--experiment", "length", "--out", out, "--seed", 3,
                           "--replicates", 1, "--alpha-grid", "0", "--beta-grid=-1:0:0.5",
                           "--curves-dir", tmp_path / "curves"], capsys)
    assert code == 0
    assert "argmin" in stdout and "beta=" in stdout
    lines = out.read_text().splitlines()
    assert lines[0] == "# seed=3"
    rows = list(csv.DictReader(l for l in lines if not l.startswith("#")))
    assert [float(r["beta"]) for r in rows] == [-1.0, -0.5, 0.0]
    assert set(rows[0]) == {"alpha", "beta", "train_error", "test_error", "sd_test"}
    curves = sorted((tmp_path / "curves").iterdir())
    assert len(curves) == 3 * 8
    body = [l for l in curves[0].read_text().splitlines() if not l.startswith("#")]
    assert body[0] == "lambda_lo,lambda_hi,k,error"
    assert body[-1].split(",")[1] == "inf"


@pytest.mark.parametrize("argv", [
    ["sweep", "--experiment", "nope", "--out", "r.csv"],
    ["sweep", "--experiment", "flsa", "--out", "r.csv", "--beta-grid", "1"],
    ["sweep", "--experiment", "density", "--out", "/nonexistent/dir/r.csv"],
    ["sweep", "--experiment", "density", "--out", "r.csv", "--alpha-grid", "a,b"],
    ["sweep", "--experiment", "density", "--out", "r.csv", "--seed", "-4"],
    ["bogus"],
])
def test_sweep_usage_errors(tmp_path, capsys, monkeypatch, argv):
    monkeypatch.chdir(tmp_path)
    assert run(argv, capsys)[0] == 2


def test_help_documents_every_flag():
    for cmd, flags in [
        (["simulate"], ["--P", "--spacing", "--d", "--seed", "--means", "--sd", "--scheme", "--out-dir", "--name"]),
        (["error", "exact"], ["--breaks", "--guesses", "--positions"]),
        (["error", "annotation"], ["--annotations", "--guesses", "--zero-one", "--with-negatives"]),
        (["segment"], ["--input", "--kmax", "--flsa"]),
        (["sweep"], ["--experiment", "--out", "--seed", "--alpha-grid", "--beta-grid", "--replicates",
                     "--variance-term", "--curves-dir"]),
    ]:
        proc = subprocess.run([sys.executable, "-m", "breakseg.cli", *cmd, "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        for flag in flags:
            assert flag in proc.stdout, (cmd, flag)
    top = subprocess.run([sys.executable, "-m", "breakseg.cli", "--help"], capture_output=True, text=True)
    assert "BREAKSEG_THREADS" in top.stdout


def test_subprocess_exit_codes(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "breakseg.cli", "simulate", "--P", "7000", "--spacing",
                           "1000", "--d", "0", "--seed", "1", "--out-dir", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert not any(tmp_path.iterdir())
