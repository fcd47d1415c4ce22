"""Finite Fourier-Bohr sums, their limits, the Fourier module and spectra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cps import CutProjectScheme, model_set_points
from .errors import AmbiguousMatch
from .lattice import DEFAULT_MAX_CANDIDATES, PointBatch, SupNormBox, enumerate_in_region, make_lattice
from .summation import chunked_sum, unit_phase
from .window import AlignedBoxWindow, PolygonWindow, Window, ft_indicator_general

MODULE_TOL = 1e-9
# relative amplitude below which a module point is treated as unobservable
DEFAULT_REL_AMPLITUDE = 1e-4
GENERAL_FT_TOL = 1e-4


def dual_of(cps: CutProjectScheme):
    dual = getattr(cps, "_dual_lattice", None)
    if dual is None:
        dual = make_lattice(cps.lattice.dual_basis)
        cps._dual_lattice = dual
    return dual


def dual_points_in_box(
    cps: CutProjectScheme,
    phys_center,
    phys_half,
    int_half,
    int_center=None,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> PointBatch:
    """Dual lattice points with ``|theta - phys_center| <= phys_half`` and ``|theta*| <= int_half``."""
    d, m = cps.d, cps.m
    center = np.concatenate(
        [np.broadcast_to(np.asarray(phys_center, float), (d,)),
         np.zeros(m) if int_center is None else np.broadcast_to(np.asarray(int_center, float), (m,))]
    )
    half = np.concatenate(
        [np.broadcast_to(np.asarray(phys_half, float), (d,)),
         np.broadcast_to(np.asarray(int_half, float), (m,))]
    )
    return enumerate_in_region(dual_of(cps), SupNormBox(center, half), max_candidates)


def internal_cutoff(W: Window, rel_amplitude: float) -> np.ndarray:
    """Per-axis ``K`` with ``|1^_W(y)| < rel_amplitude * vol(W)`` whenever ``|y_i| > K_i`` for some i."""
    if isinstance(W, AlignedBoxWindow):
        return 1.0 / (np.pi * rel_amplitude * W.sides)
    if isinstance(W, PolygonWindow):
        return np.full(2, W.perimeter / (2 * np.pi * rel_amplitude * W.volume))
    raise ValueError(
        f"{type(W).__name__} has no decay estimate; pass an explicit internal cutoff K_star"
    )


@dataclass
class FBValue:
    t: np.ndarray
    R: float
    value: complex
    point_count: int


def fb_coefficient_finite(
    cps: CutProjectScheme,
    W: Window,
    t,
    R: float,
    threads: int | None = None,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> FBValue:
    """``a_R(t) = (2R)^-d sum_{lambda in Lambda_R} e(-t.lambda)`` with compensated summation."""
    t = np.broadcast_to(np.asarray(t, dtype=float), (cps.d,)).copy()
    pts = model_set_points(cps, W, R, max_candidates)
    phase = np.zeros(len(pts))
    for j in range(cps.d):
        phase += t[j] * pts.physical[:, j]
    total = chunked_sum(len(phase), lambda s: unit_phase(-phase[s]), threads)
    return FBValue(t, float(R), total / (2.0 * R) ** cps.d, len(pts))


def is_in_fourier_module(
    cps: CutProjectScheme,
    t,
    tol: float = MODULE_TOL,
    K_star=None,
    W: Window | None = None,
) -> np.ndarray | None:
    """Dual coordinates ``m`` with ``|pi(A* m) - t| <= tol`` and ``|pi_int(A* m)| <= K_star``.

    ``None`` means no dual point with small internal part lies within
    ``tol`` of ``t``.  Without ``K_star`` the cutoff comes from the decay of
    ``1^_W`` (``W`` defaults to the scheme's window).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if K_star is None:
        W = W if W is not None else cps.default_window
        K_star = internal_cutoff(W, DEFAULT_REL_AMPLITUDE)
    hits = dual_points_in_box(cps, t, tol, K_star)
    if len(hits) > 1:
        raise AmbiguousMatch(
            f"{len(hits)} module points within {tol} of t; reduce tol or K_star"
        )
    return hits.coords[0].copy() if len(hits) else None


def window_transform(W: Window, y, tol: float = GENERAL_FT_TOL) -> tuple[complex, float]:
    """``(1^_W(y), error bar)``: exact for boxes and polygons, dyadic otherwise."""
    if W.exact_ft:
        return complex(W.ft(y)), 0.0
    res = ft_indicator_general(W, y, tol)
    return res.value, res.error


@dataclass
class FBLimit:
    value: complex
    error: float
    m: np.ndarray | None

    def __complex__(self):
        return complex(self.value)


def fb_coefficient_limit(
    cps: CutProjectScheme,
    W: Window,
    t=None,
    m=None,
    tol: float = MODULE_TOL,
    K_star=None,
    ft_tol: float = GENERAL_FT_TOL,
) -> FBLimit:
    """``dens(L) 1^_W(-t*)`` if ``t`` lies in the Fourier module, else 0.

    Pass exact dual coordinates ``m`` or a frequency ``t``; the latter is
    located with :func:`is_in_fourier_module`.
    """
    if m is None:
        if t is None:
            raise ValueError("give either t or m")
        m = is_in_fourier_module(cps, t, tol, K_star, W)
        if m is None:
            return FBLimit(0j, 0.0, None)
    m = np.asarray(m, dtype=np.int64)
    _, star = cps.dual_points(m)
    value, err = window_transform(W, -star[0], ft_tol)
    return FBLimit(cps.density * value, cps.density * err, m)


@dataclass
class FourierModulePoint:
    m: tuple[int, ...]
    theta: np.ndarray
    theta_star: np.ndarray
    amplitude: complex

    @property
    def intensity(self) -> float:
        return self.amplitude.real**2 + self.amplitude.imag**2


def spectrum(
    cps: CutProjectScheme,
    W: Window,
    K_phys: float,
    I_min: float,
    K_star=None,
    ft_tol: float = GENERAL_FT_TOL,
) -> list[FourierModulePoint]:
    """Bragg peaks with ``|theta| <= K_phys`` and intensity at least ``I_min``.

    Sorted by decreasing intensity, ties by lexicographic ``m``.  The
    internal cutoff follows from ``|a| <= dens(L) * bound(1^_W)(theta*)``
    unless ``K_star`` is given.
    """
    if K_phys <= 0 or I_min <= 0:
        raise ValueError("K_phys and I_min must be positive")
    vol = W.volume if W.volume is not None else W.bounding_box.volume
    if K_star is None:
        rel = min(1.0, np.sqrt(I_min) / (cps.density * vol))
        K_star = internal_cutoff(W, rel) * (1 + 1e-9)
    pts = dual_points_in_box(cps, np.zeros(cps.d), K_phys, K_star)
    theta, star = cps.split(pts.points)
    if W.exact_ft:
        amp = cps.density * np.asarray(W.ft(-star)).reshape(-1)
    else:
        amp = np.array([cps.density * window_transform(W, -s, ft_tol)[0] for s in star])
    inten = amp.real**2 + amp.imag**2
    keep = np.flatnonzero(inten >= I_min)
    keys = tuple(pts.coords[keep].T[::-1]) + (-inten[keep],)
    order = keep[np.lexsort(keys)]
    return [
        FourierModulePoint(tuple(int(v) for v in pts.coords[i]), theta[i], star[i], complex(amp[i]))
        for i in order
    ]


@dataclass
class SweepRow:
    R: float
    a_R: complex
    a_limit: complex
    abs_err: float
    points: int


def convergence_sweep(
    cps: CutProjectScheme,
    W: Window,
    t,
    R_list,
    m=None,
    threads: int | None = None,
    tol: float = MODULE_TOL,
) -> list[SweepRow]:
    """Finite sums along increasing radii next to the limit coefficient."""
    R_list = [float(R) for R in R_list]
    if any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ValueError("R_list must be strictly increasing")
    if m is not None:
        theta, _ = cps.dual_points(np.asarray(m))
        t = theta[0]
    limit = fb_coefficient_limit(cps, W, t=t, m=m, tol=tol).value
    rows = []
    for R in R_list:
        fb = fb_coefficient_finite(cps, W, t, R, threads)
        rows.append(SweepRow(R, fb.value, limit, abs(fb.value - limit), fb.point_count))
    return rows
