import csv
import io
import json
import math
import subprocess
import sys

import pytest

from modelset_fb import cli
from modelset_fb.cps import model_set_points, preset

DENS_FIB = (1 + math.sqrt(5)) / 2 / math.sqrt(5)


def run(tmp_path, command, config, *extra):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return cli.main([command, str(path), *extra])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_generate_matches_library(tmp_path):
    out = tmp_path / "pts.csv"
    assert run(tmp_path, "generate", {"preset": "fibonacci", "R": 5, "output": str(out)}) == 0
    rows = read_csv(out)
    assert rows[0] == ["lambda_1", "star_1", "n_1", "n_2"]
    fib = preset("fibonacci")
    assert len(rows) - 1 == len(model_set_points(fib, fib.default_window, 5))
    assert rows[1][0] == "%.17g" % float(rows[1][0])


def test_generate_two_dimensional_header(tmp_path):
    out = tmp_path / "ab.csv"
    assert run(tmp_path, "generate", {"preset": "ammann_beenker", "R": 2, "output": str(out)}) == 0
    assert read_csv(out)[0] == ["lambda_1", "lambda_2", "star_1", "star_2", "n_1", "n_2", "n_3", "n_4"]


def test_generate_empty_is_header_only(tmp_path):
    out = tmp_path / "pts.csv"
    cfg = {"preset": "fibonacci", "R": 1.0, "window": {"type": "box", "center": [1000], "sides": [0.001]},
           "output": str(out)}
    assert run(tmp_path, "generate", cfg) == 0
    assert read_csv(out) == [["lambda_1", "star_1", "n_1", "n_2"]]


@pytest.mark.parametrize(
    "config",
    [
        {"preset": "fibonacci", "R": 5, "window": {"type": "box"}},
        {"preset": "fibonacci", "cps": {"basis": [[1, 0], [0, 1]], "d": 1}, "R": 5},
        {"R": 5},
        {"preset": "fibonacci", "R": -1},
        {"preset": "fibonacci", "R": 5, "bogus": 1},
        {"preset": "nonexistent", "R": 5},
        {"preset": "fibonacci"},
        {"preset": "fibonacci", "R_list": [10, 5]},
        {"cps": {"basis": [[1, 1], [0, 1]], "d": 1}, "window": {"type": "box", "center": [0], "sides": [1]}, "R": 5},
        {"cps": {"basis": [[1, 1.5], [1, -0.5]], "d": 1}, "R": 5},
        {"preset": "fibonacci", "R": 5, "window": {"type": "box", "center": [0, 0], "sides": [1, 1]}},
    ],
)
def test_config_errors_exit_2_without_output(tmp_path, config, capsys):
    out = tmp_path / "out.csv"
    config = dict(config, output=str(out))
    assert run(tmp_path, "generate", config) == 2
    assert not out.exists()
    assert "error" in capsys.readouterr().err


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert cli.main(["generate", str(path)]) == 2
    assert cli.main(["generate", str(tmp_path / "missing.json")]) == 2


def test_resource_cap_exit_3(tmp_path, capsys):
    assert run(tmp_path, "generate", {"preset": "fibonacci", "R": 1e12}) == 3
    assert "resource cap" in capsys.readouterr().err


def test_inline_cps(tmp_path):
    out = tmp_path / "pts.csv"
    tau = (1 + math.sqrt(5)) / 2
    cfg = {"cps": {"basis": [[1, tau], [1, 1 - tau]], "d": 1},
           "window": {"type": "box", "center": [0], "sides": [tau]}, "R": 10, "output": str(out)}
    assert run(tmp_path, "generate", cfg) == 0
    fib = preset("fibonacci")
    assert len(read_csv(out)) - 1 == len(model_set_points(fib, fib.default_window, 10))


def test_spectrum_defaults_and_threshold(tmp_path):
    out = tmp_path / "spec.csv"
    assert run(tmp_path, "spectrum", {"preset": "fibonacci", "output": str(out)}) == 0
    rows = read_csv(out)
    assert rows[0] == ["m_1", "m_2", "theta_1", "theta_star_1", "re_amp", "im_amp", "intensity"]
    assert float(rows[1][2]) == 0 and float(rows[1][-1]) == pytest.approx(DENS_FIB**2)
    assert run(tmp_path, "spectrum", {"preset": "fibonacci", "I_min": 0.999 * DENS_FIB**2, "output": str(out)}) == 0
    assert len(read_csv(out)) == 2
    assert run(tmp_path, "spectrum", {"preset": "fibonacci", "I_min": 1.01 * DENS_FIB**2, "output": str(out)}) == 0
    assert len(read_csv(out)) == 1


def test_spectrum_self_consistent(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    I_min = 2e-3
    assert run(tmp_path, "spectrum", {"preset": "fibonacci", "I_min": I_min, "output": str(a)}) == 0
    assert run(tmp_path, "spectrum", {"preset": "fibonacci", "I_min": I_min / 2, "output": str(b)}) == 0
    rows_a = read_csv(a)[1:]
    rows_b = [r for r in read_csv(b)[1:] if float(r[-1]) >= I_min]
    assert rows_a == rows_b


def test_spectrum_svg_deterministic(tmp_path):
    paths = []
    for i in range(2):
        svg = tmp_path / f"s{i}.svg"
        cfg = {"preset": "ammann_beenker", "I_min": 0.05, "K_phys": 3, "output": str(tmp_path / "x.csv"),
               "svg": str(svg)}
        assert run(tmp_path, "spectrum", cfg) == 0
        paths.append(svg.read_bytes())
    assert paths[0] == paths[1]
    assert paths[0].startswith(b"<svg") and paths[0].count(b"<circle") > 10


def test_converge(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    cfg = {"preset": "fibonacci", "R_list": [100, 1000], "output": str(out), "max_final_error": 0.01}
    assert run(tmp_path, "converge", cfg) == 0
    rows = read_csv(out)
    assert rows[0] == ["R", "re_aR", "im_aR", "re_limit", "im_limit", "abs_err", "points"]
    assert len(rows) == 3
    assert run(tmp_path, "converge", dict(cfg, max_final_error=1e-9)) == 1
    assert "exceeds" in capsys.readouterr().err
    assert run(tmp_path, "converge", {"preset": "fibonacci", "R_list": [50], "output": str(out)}) == 0
    assert len(read_csv(out)) == 2
    assert run(tmp_path, "converge", {"preset": "fibonacci", "t": [0.5], "R_list": [50, 100], "output": str(out)}) == 0
    assert all(float(r[3]) == 0 and float(r[4]) == 0 for r in read_csv(out)[1:])
    assert run(tmp_path, "converge", {"preset": "fibonacci", "m": [1, 0], "R_list": [100], "output": str(out)}) == 0
    assert float(read_csv(out)[1][3]) == pytest.approx(-0.1005779385613298)


def test_converge_needs_radii(tmp_path):
    assert run(tmp_path, "converge", {"preset": "fibonacci"}) == 2
    assert run(tmp_path, "converge", {"preset": "fibonacci", "t": [0.1], "m": [1, 0], "R_list": [5]}) == 2


FAST_VERIFY = {"preset": "fibonacci", "R_pair": [50], "R_sweep": [50, 100], "psf": {"n_points": 2}}


def test_verify_passes(tmp_path):
    out = tmp_path / "report.json"
    assert run(tmp_path, "verify", dict(FAST_VERIFY, output=str(out))) == 0
    report = json.loads(out.read_text())
    assert report["schema"] == "psf-report/1"
    assert report["pass"] is True
    assert [c["name"] for c in report["checks"]] == [
        "psf_identity", "direct_vs_reciprocal", "tail_bound_ratio", "mollifier_gap"]
    assert all(c["pass"] is True for c in report["checks"])


def test_verify_tiny_truncation_fails(tmp_path, capsys):
    out = tmp_path / "report.json"
    cfg = dict(FAST_VERIFY, truncation={"physical": 0.5, "internal": 0.5}, output=str(out))
    assert run(tmp_path, "verify", cfg) == 1
    report = json.loads(out.read_text())
    bad = [c for c in report["checks"] if c["pass"] is False]
    assert [c["name"] for c in bad] == ["direct_vs_reciprocal"]
    assert bad[0]["radii"][0]["tail_within_limit"] is False
    assert "direct_vs_reciprocal" in capsys.readouterr().err


def test_verify_hypothesis_violation_is_skipped(tmp_path):
    out = tmp_path / "report.json"
    cfg = dict(FAST_VERIFY, window={"type": "box", "center": [0], "sides": [0.1]}, output=str(out))
    run(tmp_path, "verify", cfg)
    checks = {c["name"]: c for c in json.loads(out.read_text())["checks"]}
    assert checks["tail_bound_ratio"]["status"] == "skipped"
    assert "HypothesisViolated" in checks["tail_bound_ratio"]["reason"]


def test_verify_polygon_window_skips_mollified_checks(tmp_path):
    out = tmp_path / "report.json"
    cfg = {"preset": "ammann_beenker", "psf": {"n_points": 1}, "output": str(out)}
    assert run(tmp_path, "verify", cfg) == 0
    checks = json.loads(out.read_text())["checks"]
    assert [c["status"] for c in checks] == ["pass", "skipped", "skipped", "skipped"]


def test_decompose(tmp_path):
    out = tmp_path / "dec.csv"
    cfg = {"preset": "fibonacci", "window": {"type": "preset", "name": "octagon"}, "levels": [3, 5]}
    assert run(tmp_path, "decompose", cfg) == 2  # octagon is 2-D, Fibonacci internal space is 1-D
    cfg = {"preset": "ammann_beenker", "window": {"type": "preset", "name": "octagon"}, "levels": [3, 5],
           "output": str(out)}
    assert run(tmp_path, "decompose", cfg) == 0
    rows = read_csv(out)
    assert rows[0] == ["level", "n_inner", "n_boundary", "vol_inner", "vol_boundary"]
    assert float(rows[2][3]) <= 2 * math.sqrt(2) <= float(rows[2][3]) + float(rows[2][4])


def test_threads_flag(tmp_path, monkeypatch):
    monkeypatch.delenv("MODELSET_FB_THREADS", raising=False)
    outs = []
    for threads in ("1", "4"):
        out = tmp_path / f"c{threads}.csv"
        cfg = {"preset": "fibonacci", "t": [0.3], "R_list": [1e5], "output": str(out)}
        assert run(tmp_path, "converge", cfg, "--threads", threads) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert run(tmp_path, "converge", {"preset": "fibonacci", "R_list": [5]}, "--threads", "0") == 2


def test_module_entry_point_reads_stdin():
    proc = subprocess.run(
        [sys.executable, "-m", "modelset_fb", "generate"],
        input=json.dumps({"preset": "fibonacci", "R": 2}), capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    rows = list(csv.reader(io.StringIO(proc.stdout)))
    assert rows[0][0] == "lambda_1" and len(rows) > 1
