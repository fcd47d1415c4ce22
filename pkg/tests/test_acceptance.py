"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from modelset_fb.cps import count_in_internal_region, preset
from modelset_fb.fourier_bohr import convergence_sweep, fb_coefficient_finite, fb_coefficient_limit
from modelset_fb.lattice import dual_lattice, make_lattice
from modelset_fb.psf import (
    SummableTestFunction,
    direct_mollified_sum,
    epsilon_R_compute,
    mollifier_gap_sweep,
    psf_identity_check,
    reciprocal_mollified_sum,
    tail_bound_report,
)
from modelset_fb.window import AlignedBoxWindow, GeneralWindow, MollifierParams, ft_indicator_box, interval, octagon

from conftest import TAU
from oracles import box_ft_quad, polygon_ft_quad

DENS_LAMBDA = TAU / math.sqrt(5)


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def test_c01_dual_lattice_algebra(criterion):
    rng = np.random.default_rng(1)
    worst_pair = worst_dens = 0.0
    with Timer() as tm:
        for i in range(20):
            k = (2, 3, 4)[i % 3]
            A = rng.normal(size=(k, k))
            L = make_lattice(A)
            D = dual_lattice(L)
            worst_pair = max(worst_pair, float(np.max(np.abs(D.basis.T @ L.basis - np.eye(k)))))
            worst_dens = max(worst_dens, abs(L.density * D.density - 1))
    ok = worst_pair <= 1e-12 and worst_dens <= 1e-12 and tm.elapsed < 1
    criterion(1, ok, f"max|A*^T A - I| = {worst_pair:.2e}, max|dens*dens - 1| = {worst_dens:.2e}, {tm.elapsed:.2f} s")
    assert ok


def test_c02_psf_identity(criterion, fib):
    rng = np.random.default_rng(2)
    f = SummableTestFunction.triangle(2)
    lattices = {"Z^2": make_lattice(np.eye(2)), "2Z x Z": make_lattice(np.diag([2.0, 1.0])), "Fibonacci": fib.lattice}
    worst = -np.inf
    with Timer() as tm:
        for L in lattices.values():
            for y in rng.uniform(-1, 1, size=(10, 2)):
                c = psf_identity_check(L, f, y)
                worst = max(worst, c.gap - (c.tail_bound + 1e-9))
    ok = worst <= 0 and tm.elapsed < 10
    criterion(2, ok, f"max(gap - tail - 1e-9) = {worst:.2e} over 30 points, {tm.elapsed:.2f} s")
    assert ok


def test_c03_box_ft_quadrature(criterion):
    rng = np.random.default_rng(3)
    worst = 0.0
    with Timer() as tm:
        for _ in range(100):
            dim = int(rng.integers(1, 4))
            W = AlignedBoxWindow(rng.uniform(-2, 2, dim), rng.uniform(0.05, 3, dim))
            y = rng.uniform(-5, 5, dim)
            worst = max(worst, abs(ft_indicator_box(W, y) - box_ft_quad(W.center, W.sides, y)))
    ok = worst <= 1e-8 and tm.elapsed < 5
    criterion(3, ok, f"max deviation {worst:.2e} over 100 (W, y), {tm.elapsed:.2f} s")
    assert ok


def test_c04_density_limit(criterion, fib):
    with Timer() as tm:
        fb = fb_coefficient_finite(fib, fib.default_window, 0.0, 1e4)
    err = abs(fb.value - DENS_LAMBDA)
    ok = err <= 0.01 * DENS_LAMBDA and tm.elapsed < 30
    criterion(4, ok, f"|a_R(0) - tau/sqrt5| = {err:.2e} (limit {0.01 * DENS_LAMBDA:.2e}), {tm.elapsed:.2f} s")
    assert ok


def _naive_sum(fib, t, R):
    """Brute force: scan integer coordinates, keep model-set points, fsum the phases."""
    n = np.arange(-int(2 * R) - 5, int(2 * R) + 6)
    n1, n2 = np.meshgrid(n, n, indexing="ij")
    x = n1 + TAU * n2
    star = n1 + (1 - TAU) * n2
    sel = (np.abs(x) <= R) & (np.abs(star) <= TAU / 2)
    xs = x[sel]
    re = math.fsum(np.cos(2 * np.pi * t * xs))
    im = math.fsum(-np.sin(2 * np.pi * t * xs))
    return complex(re, im) / (2 * R)


def test_c05_bragg_peak(criterion, fib):
    W = fib.default_window
    theta_star = TAU / math.sqrt(5)
    u = math.pi * TAU * theta_star
    target = TAU * math.sin(u) / u / math.sqrt(5)
    with Timer() as tm:
        rows = convergence_sweep(fib, W, None, [1e2, 1e3, 1e4], m=[1, 0])
        t = rows[0].a_limit
        theta = fib.dual_points([1, 0])[0][0, 0]
        brute = _naive_sum(fib, theta, 100.0)
    errs = [r.abs_err for r in rows]
    steps = sum(b <= a for a, b in zip(errs, errs[1:]))
    ok = (
        abs(rows[0].a_limit - target) <= 1e-13
        and abs(brute - rows[0].a_R) <= 1e-12
        and errs[-1] <= 0.02 * DENS_LAMBDA
        and steps == 2
        and tm.elapsed < 60
    )
    criterion(5, ok, f"a(t) = {target:.10f}; errors {', '.join(f'{e:.2e}' for e in errs)}; "
                     f"non-increasing steps {steps}/2; {tm.elapsed:.2f} s")
    assert ok and t == rows[-1].a_limit


def test_c06_off_module(criterion, fib):
    with Timer() as tm:
        rows = convergence_sweep(fib, fib.default_window, [0.5], [1e2, 1e3, 1e4])
    vals = [abs(r.a_R) for r in rows]
    steps = sum(b < a for a, b in zip(vals, vals[1:]))
    ok = all(r.a_limit == 0 for r in rows) and vals[-1] <= 0.05 and steps == 2 and tm.elapsed < 60
    criterion(6, ok, f"|a_R(0.5)| = {', '.join(f'{v:.2e}' for v in vals)}; decreasing steps {steps}/2; "
                     f"{tm.elapsed:.2f} s")
    assert ok


def test_c07_mollified_psf(criterion, fib):
    W = fib.default_window
    t = fib.dual_points([1, 0])[0][0]
    details, ok = [], True
    with Timer() as tm:
        for R in (50.0, 200.0):
            S = math.sqrt(R)
            p = MollifierParams(R, S, epsilon_R_compute(fib, t, S))
            direct = direct_mollified_sum(fib, W, t, p)
            rec = reciprocal_mollified_sum(fib, W, t, p)
            gap = abs(direct - rec.value)
            allowed = rec.tail_bound + 1e-8 * (2 * R)
            ok &= gap <= allowed
            details.append(f"R={R:g}: gap {gap:.2e} <= {allowed:.2e}")
    ok &= tm.elapsed < 60
    criterion(7, ok, "; ".join(details) + f"; {tm.elapsed:.2f} s")
    assert ok


def test_c08_tail_ratio(criterion, fib):
    W = AlignedBoxWindow.cube([0.0], TAU)
    with Timer() as tm:
        ratios = []
        for R in (50.0, 100.0, 200.0, 400.0):
            S = math.sqrt(R)
            rep = tail_bound_report(fib, W, 0.0, MollifierParams(R, S, epsilon_R_compute(fib, 0.0, S)))
            ratios.append(rep.ratio)
    med = float(np.median(ratios))
    ok = max(ratios) <= 2 * med and tm.elapsed < 120
    criterion(8, ok, f"ratios {', '.join(f'{r:.3e}' for r in ratios)}; max/median = {max(ratios) / med:.3f}; "
                     f"{tm.elapsed:.2f} s")
    assert ok


def test_c09_mollifier_gap(criterion, fib):
    with Timer() as tm:
        rows = mollifier_gap_sweep(fib, fib.default_window, 0.0, [50, 100, 200, 400])
    gaps = [r.normalized_gap for r in rows]
    ok = gaps[-1] < gaps[0] and tm.elapsed < 120
    criterion(9, ok, f"normalized gaps {', '.join(f'{g:.3e}' for g in gaps)}; {tm.elapsed:.2f} s")
    assert ok


def test_c10_equidistribution(criterion, fib):
    R, vol = 2000.0, 0.1
    with Timer() as tm:
        n = count_in_internal_region(fib, interval(0.0, vol), R)
    expected = fib.density * vol * 2 * R
    lemma = 4 * fib.density * vol * R
    ok = abs(n - expected) <= 0.1 * expected and n < lemma and tm.elapsed < 10
    criterion(10, ok, f"count {n} vs expected {expected:.1f}, lemma bound {lemma:.1f}; {tm.elapsed:.2f} s")
    assert ok


def test_c11_dyadic_decomposition(criterion):
    W = octagon(1.0)
    area = 2 * math.sqrt(2)
    with Timer() as tm:
        decs = [W.decompose(n) for n in range(3, 9)]
    inner = [d.vol_inner for d in decs]
    bd = [d.vol_boundary for d in decs]
    ok = (
        all(b >= a for a, b in zip(inner, inner[1:]))
        and all(b <= a for a, b in zip(bd, bd[1:]))
        and bd[-1] <= 0.05
        and all(i <= area <= i + b for i, b in zip(inner, bd))
        and tm.elapsed < 30
    )
    criterion(11, ok, f"vol(I) {inner[0]:.4f} -> {inner[-1]:.4f}, vol(D) {bd[0]:.4f} -> {bd[-1]:.4f}; "
                      f"{tm.elapsed:.2f} s")
    assert ok


def test_c12_general_window_ft(criterion):
    rng = np.random.default_rng(12)
    exact = octagon(1.0)
    G = GeneralWindow.wrap(exact)
    level = 8
    worst = -np.inf
    with Timer() as tm:
        dec = G.decompose(level)
        for y in rng.uniform(-2, 2, size=(10, 2)):
            worst = max(worst, abs(dec.inner_ft(y) - polygon_ft_quad(exact.vertices, y)) - (dec.vol_boundary + 1e-6))
    ok = worst <= 0 and tm.elapsed < 30
    criterion(12, ok, f"max(|dyadic - quadrature| - vol(D^(8)) - 1e-6) = {worst:.3e}; {tm.elapsed:.2f} s")
    assert ok


def _cli(command, config):
    proc = subprocess.run(
        [sys.executable, "-m", "modelset_fb", command], input=json.dumps(config).encode(),
        capture_output=True, check=False,
    )
    return proc.returncode, proc.stdout


def test_c13_determinism(criterion, tmp_path):
    with Timer() as tm:
        verify = [_cli("verify", {"preset": "fibonacci"}) for _ in range(3)]
        svg = tmp_path / "s.svg"
        spec = []
        for _ in range(3):
            code, out = _cli("spectrum", {"preset": "ammann_beenker", "I_min": 1e-2, "svg": str(svg)})
            spec.append((code, out + svg.read_bytes()))
    ok = (
        all(v == verify[0] for v in verify)
        and all(s == spec[0] for s in spec)
        and verify[0][0] == 0
        and spec[0][0] == 0
        and tm.elapsed < 60
    )
    criterion(13, ok, f"verify {len(verify[0][1])} bytes x3, spectrum {len(spec[0][1])} bytes x3 identical; "
                      f"{tm.elapsed:.2f} s")
    assert ok
