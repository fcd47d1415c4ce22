import math
import warnings

import numpy as np
import pytest

from modelset_fb import cps as cps_mod
from modelset_fb.cps import (
    count_in_internal_region,
    make_cps,
    model_set_points,
    physical_part,
    points_in_strip,
    preset,
    star_map,
)
from modelset_fb.errors import ConfigError, DensenessSuspect, ProjectionNotInjective
from modelset_fb.lattice import make_lattice
from modelset_fb.window import AlignedBoxWindow, interval

from conftest import TAU
from oracles import count_model_set


def test_presets_validate(fib, silver, ab):
    for c, k, d in [(fib, 2, 1), (silver, 2, 1), (ab, 4, 2)]:
        assert (c.k, c.d, c.m) == (k, d, k - d)
        assert c.report.injective_lattice and c.report.injective_dual
        assert c.report.denseness_ok
        assert "N_check = 50" in c.report.summary()
    assert fib.density == pytest.approx(1 / math.sqrt(5))
    assert ab.density == pytest.approx(0.25)
    with pytest.raises(ConfigError):
        preset("penrose")


def test_projection_not_injective():
    with pytest.raises(ProjectionNotInjective, match="lattice point"):
        make_cps(make_lattice([[1, 1], [0, 1]]), 1)
    # physical part n1 + sqrt2 n2 is injective, but the dual has physical row (1, 0)
    with pytest.raises(ProjectionNotInjective, match="dual"):
        make_cps(make_lattice([[1, math.sqrt(2)], [0, 1]]), 1)
    with pytest.raises(ValueError):
        make_cps(make_lattice(np.eye(2)), 2)


def test_denseness_warning(monkeypatch):
    monkeypatch.setattr(cps_mod, "DENSENESS_LEVEL", 14)
    with pytest.warns(DensenessSuspect):
        make_cps(make_lattice(cps_mod.fibonacci_basis()), 1)


def test_star_map_and_physical_part(fib):
    assert star_map(fib, [1, 0]) == pytest.approx([1.0])
    assert star_map(fib, [0, 1]) == pytest.approx([1 - TAU])
    assert physical_part(fib, [1, 1]) == pytest.approx([1 + TAU])
    assert star_map(fib, [[1, 0], [0, 1]]).shape == (2, 1)


def test_fibonacci_gaps_are_two_tiles(fib):
    pts = model_set_points(fib, fib.default_window, 200)
    gaps = np.diff(np.sort(pts.physical[:, 0]))
    assert np.all(np.isclose(gaps, 1.0) | np.isclose(gaps, TAU))
    assert np.all(np.abs(pts.internal[:, 0]) <= TAU / 2)


@pytest.mark.parametrize("name,R", [("fibonacci", 40.0), ("silver_mean", 30.0)])
def test_model_set_count_matches_naive_scan(name, R):
    c = preset(name)
    W = c.default_window
    lo, hi = W.bounding_box.lower, W.bounding_box.upper
    assert len(model_set_points(c, W, R)) == count_model_set(c.lattice.basis, 1, lo, hi, R, 80)


def test_empty_model_set(fib):
    far = AlignedBoxWindow([1e3], [1e-3])
    assert len(model_set_points(fib, far, 1.0)) == 0
    assert count_model_set(fib.lattice.basis, 1, far.bounding_box.lower, far.bounding_box.upper, 1.0, 1000) == 0
    with pytest.raises(ValueError):
        points_in_strip(fib, far, 0.0)


def test_density_of_model_set(fib, silver):
    for c in (fib, silver):
        W = c.default_window
        n = len(model_set_points(c, W, 5000))
        assert n / 10000 == pytest.approx(c.density * W.volume, rel=2e-3)


def test_equidistribution_small_window(fib):
    A = interval(0.0, 0.1)
    n = count_in_internal_region(fib, A, 500)
    assert n == pytest.approx(fib.density * 0.1 * 1000, rel=0.15)


def test_ammann_beenker_eightfold_symmetry(ab):
    pts = model_set_points(ab, ab.default_window, 8.0)
    ring = pts.physical[np.max(np.abs(pts.physical), axis=1) <= 5.0]
    c, s = math.cos(math.pi / 4), math.sin(math.pi / 4)
    rotated = ring @ np.array([[c, s], [-s, c]])
    all_pts = {tuple(np.round(p, 9)) for p in pts.physical}
    assert all(tuple(np.round(p, 9)) in all_pts for p in rotated)
    assert len(ring) > 50


def test_ammann_beenker_edge_length(ab):
    pts = model_set_points(ab, ab.default_window, 6.0).physical
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    d[d == 0] = np.inf
    assert d.min() == pytest.approx(2 * math.sin(math.pi / 8), rel=1e-9)
