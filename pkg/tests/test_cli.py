import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ptdiff.cli import main


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def load(path):
    return json.loads(path.read_text())


def without_timestamp(obj):
    obj = dict(obj)
    obj.pop("timestamp", None)
    return obj


@pytest.fixture
def parabola(tmp_path):
    return write_json(tmp_path / "parabola.json", {"kind": "graph", "n": 2, "terms": {"2": 1.0}, "samples": 10000})


@pytest.fixture
def origin(tmp_path):
    p = tmp_path / "origin.csv"
    p.write_text("0,0\n")
    return str(p)


def test_generate_parabola(tmp_path, parabola):
    out = tmp_path / "gen"
    assert main(["generate", "--config", parabola, "--out", str(out)]) == 0
    rows = list(csv.reader((out / "set.csv").open()))
    assert rows[0] == ["x0", "x1"] and len(rows) == 10001
    man = load(out / "manifest.json")
    assert man["count"] == 10000
    assert man["ground_truth"]["jet"]["coeffs"]["2"] == [1.0]
    # derivatives (0, 0, 2)
    d = man["ground_truth"]["derivatives"]
    assert d[0] == [0.0] and d[1] == [[0.0]] and d[2] == [[[2.0]]]
    pts = np.fromfile(out / "set.bin", dtype="<f8").reshape(-1, 2)
    assert np.allclose(pts[:, 1], pts[:, 0] ** 2)


def test_generate_fat_cantor(tmp_path):
    cfg = write_json(tmp_path / "c.json", {"kind": "fat_cantor", "depth": 12, "samples": 100})
    assert main(["generate", "--config", cfg, "--out", str(tmp_path / "c")]) == 0
    man = load(tmp_path / "c" / "manifest.json")
    assert man["measure"] > 0 and man["gap_count"] == 2 ** 12 - 1


def test_generate_ellipse(tmp_path):
    cfg = write_json(tmp_path / "e.json", {"kind": "convex_boundary", "body": "ellipse", "axes": [2, 1],
                                           "samples": 5000})
    assert main(["generate", "--config", cfg, "--out", str(tmp_path / "e")]) == 0
    pts = np.loadtxt(tmp_path / "e" / "set.csv", delimiter=",", skiprows=1)
    assert len(pts) == 5000
    assert np.abs((pts[:, 0] / 2) ** 2 + pts[:, 1] ** 2 - 1).max() <= 1e-9


def test_analyze_parabola_cloud(tmp_path, parabola, origin):
    gen = tmp_path / "gen"
    main(["generate", "--config", parabola, "--out", str(gen)])
    out = tmp_path / "an"
    assert main(["analyze", "--set", str(gen / "manifest.json"), "--points", origin, "--order", "2",
                 "--out", str(out)]) == 0
    rep = load(out / "classification.json")
    assert rep["results"][0]["verdicts"]["pointwise"] is True
    # the effective config is echoed with defaults resolved
    assert rep["config"]["verdict"]["factor"] == 1.2 and "seed" in rep["config"]
    with (out / "decay.csv").open() as fh:
        header = next(csv.reader(fh))
    assert header == ["point_id", "stage", "r", "value", "error", "normalized"]


def test_analyze_square_corner(tmp_path):
    cfg = write_json(tmp_path / "sq.json", {"kind": "convex_boundary", "body": "square", "samples": 0})
    pts = tmp_path / "p.csv"
    pts.write_text("0,0\n0.5,0\n")
    out = tmp_path / "an"
    assert main(["analyze", "--set", cfg, "--points", str(pts), "--order", "1", "--out", str(out)]) == 0
    res = load(out / "classification.json")["results"]
    assert res[0]["verdicts"]["pointwise"] is False
    assert res[1]["verdicts"]["pointwise"] is True


def test_analyze_empty_points(tmp_path, parabola):
    pts = tmp_path / "empty.csv"
    pts.write_text("")
    out = tmp_path / "an"
    assert main(["analyze", "--set", parabola, "--points", str(pts), "--out", str(out)]) == 0
    assert load(out / "classification.json")["results"] == []
    assert (out / "decay.csv").read_text().strip() == "point_id,stage,r,value,error,normalized"


def test_analyze_is_deterministic(tmp_path, parabola, origin):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        main(["analyze", "--set", parabola, "--points", origin, "--order", "2", "--out", str(out)])
        outs.append(out)
    assert without_timestamp(load(outs[0] / "classification.json")) == \
        without_timestamp(load(outs[1] / "classification.json"))
    assert (outs[0] / "decay.csv").read_bytes() == (outs[1] / "decay.csv").read_bytes()


def test_blowup_quadratic_plus_cubic(tmp_path):
    cfg = write_json(tmp_path / "g.json", {"kind": "graph", "n": 2, "terms": {"2": 1.0, "3": 1.0}, "samples": 0})
    out = tmp_path / "b"
    assert main(["blowup", "--set", cfg, "--point", "0,0", "--order", "3", "--out", str(out)]) == 0
    res = load(out / "blowup.json")["result"]
    assert res["status"] == "ok" and [s["passed"] for s in res["stages"]] == [True] * 3
    assert res["stages"][1]["jet"]["coeffs"]["2"][0] == pytest.approx(1.0, abs=1e-3)
    assert res["stages"][2]["jet"]["coeffs"]["3"][0] == pytest.approx(1.0, abs=1e-2)
    assert (out / "fields.csv").read_text().startswith("stage,s,grid_index,x0,x1,dist_set,dist_graph")


def test_blowup_rough_power(tmp_path):
    cfg = write_json(tmp_path / "g.json", {"kind": "graph", "n": 2, "power": 2.5, "samples": 0})
    out = tmp_path / "b"
    assert main(["blowup", "--set", cfg, "--point", "0,0", "--order", "3", "--out", str(out)]) == 0
    res = load(out / "blowup.json")["result"]
    assert res["halted_at"] == 3 and res["stages"][-1]["passed"] is False


def test_blowup_line(tmp_path):
    cfg = write_json(tmp_path / "l.json", {"kind": "line", "n": 2, "samples": 0})
    out = tmp_path / "b"
    assert main(["blowup", "--set", cfg, "--point", "0.3,0", "--order", "5", "--out", str(out)]) == 0
    res = load(out / "blowup.json")["result"]
    assert len(res["stages"]) == 5 and all(s["passed"] for s in res["stages"])
    assert all(abs(v[0]) <= 1e-9 for s in res["stages"] for v in s["jet"]["coeffs"].values())


def test_selftest_zero_budget(capsys):
    assert main(["selftest", "--budget", "0"]) == 3
    lines = capsys.readouterr().out.strip().splitlines()
    crit = [ln for ln in lines if ln.startswith("criterion")]
    assert len(crit) == 10
    assert all("INCONCLUSIVE: insufficient budget" in ln for ln in crit)


def test_selftest_is_deterministic(capsys):
    outs = []
    for _ in range(2):
        main(["selftest", "--only", "2,5,8", "--seed", "7"])
        outs.append(capsys.readouterr().out.encode())
    assert outs[0] == outs[1]
    assert outs[0].count(b"[PASS]") == 3


def test_bad_input_exit_code(tmp_path, capsys):
    cfg = write_json(tmp_path / "bad.json", {"kind": "nonsense"})
    assert main(["generate", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert main(["analyze", "--set", cfg]) == 2
    full = write_json(tmp_path / "full.json", {"kind": "graph", "n": 2, "m": 2})
    assert main(["generate", "--config", full, "--out", str(tmp_path / "y")]) == 2
    assert "graphs need m < n" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ptdiff", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("generate", "analyze", "blowup", "selftest"):
        assert cmd in res.stdout
