"""Poisson summation checks, mollified sums on both sides of the identity,
the eps_R search and tail estimates.

Truncated dual sums come with a rigorous bound on everything left out.  The
bound splits each axis into a core interval and geometric shells, counts
dual points in each product cell by a volume argument (a cell of side
lengths ``l_j`` holds at most ``dens(L*) prod (l_j + H_j)`` points, ``H_j``
being the width of the fundamental parallelepiped along axis ``j``) and
multiplies by the largest value of a separable, radially non-increasing
envelope on the cell.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import BSpline

from .cps import CutProjectScheme
from .errors import Condition1Violated, HypothesisViolated, TailNotSummable
from .fourier_bohr import dual_of, dual_points_in_box, fb_coefficient_finite
from .lattice import (
    DEFAULT_MAX_CANDIDATES,
    Lattice,
    SupNormBox,
    enumerate_in_region,
    iter_region,
    make_lattice,
)
from .summation import StreamSum, unit_phase
from .window import AlignedBoxWindow, MollifierParams, mollified_window_ft, sinc

REPORT_SCHEMA = "psf-report/1"
DEFAULT_K_STAR_CAP = 1e3
DEFAULT_REL_TAIL = 1e-6
DEFAULT_POINT_BUDGET = 4_000_000
PSF_POINT_BUDGET = 200_000
SHELL_RATIO = 1.05
SHELL_REACH = 1e8
ZERO_STAR_TOL = 1e-9


# envelopes and the shell bound


@dataclass(frozen=True)
class Envelope:
    """Non-increasing ``g(r) = prod_i min(a_i, b_i / r)`` for ``r >= 0``.

    Each factor dominates one sinc-type factor of a transform; ``g(r) <= c r^-q``
    with ``c = prod b_i`` and ``q`` the number of factors.
    """

    caps: tuple[float, ...]
    rates: tuple[float, ...]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.ones_like(r)
        with np.errstate(divide="ignore"):
            for a, b in zip(self.caps, self.rates):
                out = out * np.minimum(a, np.where(r > 0, b / np.where(r > 0, r, 1.0), np.inf))
        return out

    @property
    def power(self) -> int:
        return len(self.rates)

    @property
    def coefficient(self) -> float:
        return float(np.prod(self.rates))

    @property
    def knee(self) -> float:
        """Radius below which ``g`` is constant."""
        return min(b / a for a, b in zip(self.caps, self.rates))


def sinc_envelope(width: float) -> tuple[float, float]:
    """``|width * sinc(pi width x)| <= min(width, 1/(pi |x|))``."""
    return float(width), 1.0 / math.pi


def smoothing_envelope(s: float) -> tuple[float, float]:
    """``|sinc(2 pi s x)| <= min(1, 1/(2 pi s |x|))``."""
    return 1.0, 1.0 / (2 * math.pi * s)


def parallelepiped_widths(L: Lattice) -> np.ndarray:
    return np.abs(L.basis).sum(axis=1)


def _shell_edges(start: float, stop: float) -> np.ndarray:
    """Geometric edges ``start, start r, ...`` with the last one clipped to ``stop``."""
    if stop <= start:
        return np.array([stop])
    n = int(math.ceil(math.log(stop / start) / math.log(SHELL_RATIO)))
    edges = start * SHELL_RATIO ** np.arange(n + 1)
    edges[-1] = stop
    return edges


def _axis_sums(X: float, H: float, g: Envelope) -> tuple[float, float]:
    """Cell bounds for one axis: inside ``[-X, X]`` and outside it (both sides).

    The inside is a central cell of half width about ``H`` plus geometric
    shells; each cell contributes ``(length + H) * g(inner edge)``.
    """
    c0 = min(X, max(H / 2, g.knee))
    inner = (2 * c0 + H) * float(g(0.0))
    edges = _shell_edges(c0, X)
    if len(edges) > 1:
        inner += 2 * float(np.sum((np.diff(edges) + H) * g(edges[:-1])))
    q, c = g.power, g.coefficient
    if q < 2:
        raise TailNotSummable("envelope decays too slowly for a summable tail")
    r = SHELL_RATIO
    n = int(math.ceil(math.log(SHELL_REACH) / math.log(r)))
    x = X * r ** np.arange(n)
    shells = float(np.sum((x * (r - 1) + H) * g(x)))
    xa = X * r**n
    rest = c * (r - 1) * xa ** (1 - q) / (1 - r ** (1 - q)) + c * H * xa ** (-q) / (1 - r ** (-q))
    return inner, 2 * (shells + rest)


def separable_tail_bound(dual: Lattice, half_widths, envelopes) -> float:
    """Bound on ``sum g_1(|xi_1|)...g_k(|xi_k|)`` over dual points outside the core box.

    ``xi`` is measured from the box center (any translate of the lattice
    obeys the same count).  The product over axes of ``inside + outside``
    minus the product of the inside terms is expanded telescopically to
    avoid cancellation.
    """
    H = parallelepiped_widths(dual)
    cores, tails = zip(*(_axis_sums(float(X), float(h), g) for X, h, g in zip(half_widths, H, envelopes)))
    total = 0.0
    for j in range(len(cores)):
        total += tails[j] * np.prod(cores[:j]) * np.prod([c + t for c, t in zip(cores[j + 1 :], tails[j + 1 :])])
    return dual.density * float(total)


def estimated_points(dual: Lattice, half_widths) -> float:
    H = parallelepiped_widths(dual)
    return dual.density * float(np.prod(2 * np.asarray(half_widths) + H))


def grow_truncation(dual, start, envelopes, target, budget=DEFAULT_POINT_BUDGET):
    """Double axis truncations greedily until the tail bound meets ``target``.

    Each step doubles the axis with the largest tail reduction per extra
    point.  Returns ``(half_widths, tail, budget_bound)``.
    """
    X = np.array(start, dtype=float)
    tail = separable_tail_bound(dual, X, envelopes)
    while tail > target:
        best = None
        for j in range(len(X)):
            Y = X.copy()
            Y[j] *= 2
            if estimated_points(dual, Y) > budget:
                continue
            gain = (tail - separable_tail_bound(dual, Y, envelopes)) / estimated_points(dual, Y)
            if best is None or gain > best[0]:
                best = (gain, Y)
        if best is None:
            return X, tail, True
        X = best[1]
        tail = separable_tail_bound(dual, X, envelopes)
    return X, tail, False


# plain Poisson summation


@dataclass
class SummableTestFunction:
    """Tensor product of ``p``-fold self-convolutions of centred boxes.

    Along axis ``i`` the factor is ``1_[-w/2, w/2]`` convolved with itself
    ``p`` times (triangles for ``p = 2``), supported on ``[-p w/2, p w/2]``
    with transform ``(w sinc(pi w xi))^p``.
    """

    widths: np.ndarray
    order: int = 2
    _spline: BSpline = field(init=False, repr=False)

    def __post_init__(self):
        self.widths = np.atleast_1d(np.asarray(self.widths, dtype=float))
        if self.order < 2:
            raise TailNotSummable(f"order {self.order} < 2: dual sum of |f^| diverges")
        if not np.all(self.widths > 0):
            raise ValueError("widths must be positive")
        self._spline = BSpline.basis_element(np.arange(self.order + 1) - self.order / 2, extrapolate=False)

    @classmethod
    def triangle(cls, dim: int, width: float = 1.0) -> "SummableTestFunction":
        return cls(np.full(dim, float(width)), 2)

    @property
    def dim(self) -> int:
        return len(self.widths)

    @property
    def support_half_widths(self) -> np.ndarray:
        return self.order * self.widths / 2

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        w, p = self.widths, self.order
        u = x / w
        vals = np.nan_to_num(self._spline(np.clip(u, -p / 2, p / 2).ravel()).reshape(u.shape))
        vals = np.where(np.abs(u) < p / 2, vals, 0.0)
        return np.prod(w ** (p - 1) * vals, axis=1)

    def ft(self, xi) -> np.ndarray:
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        return np.prod((self.widths * sinc(np.pi * self.widths * xi)) ** self.order, axis=1)

    def envelopes(self) -> list[Envelope]:
        return [
            Envelope((w,) * self.order, (1 / math.pi,) * self.order) for w in self.widths
        ]


@dataclass
class PSFCheck:
    y: np.ndarray
    lhs: float
    rhs: complex
    gap: float
    tail_bound: float
    truncation: np.ndarray
    n_direct: int
    n_dual: int

    @property
    def passed(self) -> bool:
        return self.gap <= self.tail_bound + 1e-9


def psf_identity_check(
    L: Lattice,
    f: SummableTestFunction,
    y,
    dual_truncation=None,
    budget: float = PSF_POINT_BUDGET,
) -> PSFCheck:
    """Compare ``sum_l f(y + l)`` with ``dens(L) sum_xi f^(xi) e(xi.y)``.

    ``dual_truncation`` is a sup-norm radius (scalar or per axis) for the
    dual sum; by default it is grown until the tail bound is below 1e-9 or
    the point budget is used up.  The reported tail bound covers every
    omitted dual point.
    """
    k = L.dim
    if f.dim != k:
        raise ValueError("test function and lattice differ in dimension")
    y = np.broadcast_to(np.asarray(y, dtype=float), (k,)).copy()
    dual = make_lattice(L.dual_basis)
    env = f.envelopes()
    if dual_truncation is None:
        start = np.full(k, 4.0 / float(np.min(f.widths)))
        X, _, _ = grow_truncation(dual, start, env, 1e-9 / L.density, budget)
    else:
        X = np.broadcast_to(np.asarray(dual_truncation, dtype=float), (k,)).copy()
    tail = L.density * separable_tail_bound(dual, X, env)

    near = enumerate_in_region(L, SupNormBox(-y, f.support_half_widths))
    lhs = float(np.sum(f(near.points + y))) if len(near) else 0.0

    acc = StreamSum()
    for batch in iter_region(dual, SupNormBox(np.zeros(k), X)):
        xi = batch.points
        phase = np.zeros(len(xi))
        for j in range(k):
            phase += xi[:, j] * y[j]
        acc.add(f.ft(xi) * unit_phase(phase))
    rhs = L.density * acc.total()
    return PSFCheck(y, lhs, rhs, abs(lhs - rhs), tail, X, len(near), acc.count)


# mollified sums


def plateau(x, half: float, s: float) -> np.ndarray:
    """``|[x - s, x + s] & [-half, half]| / (2 s)``: one normalised box-box convolution."""
    x = np.asarray(x, dtype=float)
    overlap = np.minimum(half, x + s) - np.maximum(-half, x - s)
    return np.clip(overlap, 0.0, None) / (2 * s)


def F_R_eval(cps: CutProjectScheme, W: AlignedBoxWindow, params: MollifierParams, x, y):
    """Mollified strip-times-window weight at physical ``x`` and internal ``y``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    phys = np.prod(plateau(x, params.R, params.S_R), axis=1)
    internal = np.prod(plateau(y - W.center, W.sides / 2, params.eps_R), axis=1)
    out = phys * internal
    return float(out[0]) if out.size == 1 else out


def phi_hat(y, params: MollifierParams) -> np.ndarray:
    """``prod 2R sinc(2 pi R y_i) sinc(2 pi S_R y_i)``."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    R, S = params.R, params.S_R
    return np.prod(2 * R * sinc(2 * np.pi * R * y) * sinc(2 * np.pi * S * y), axis=1)


def product_bound(shifted, star, params: MollifierParams, eta: float) -> np.ndarray:
    """Pointwise majorant of ``|phi^_R(theta + t) psi^_R(theta*)|`` for a cube of side ``eta``.

    ``prod min(2R, 1/|x_i|) min(1, 1/(S_R |x_i|)) * prod min(eta, 1/|y_i|) min(1, 1/(eps_R |y_i|))``
    with ``x = theta + t`` and ``y = theta*``.
    """
    x = np.abs(np.atleast_2d(shifted))
    y = np.abs(np.atleast_2d(star))
    with np.errstate(divide="ignore"):
        px = np.minimum(2 * params.R, 1 / x) * np.minimum(1.0, 1 / (params.S_R * x))
        py = np.minimum(eta, 1 / y) * np.minimum(1.0, 1 / (params.eps_R * y))
    return np.prod(px, axis=1) * np.prod(py, axis=1)


def _check_cube(cps: CutProjectScheme, W) -> AlignedBoxWindow:
    if not isinstance(W, AlignedBoxWindow):
        raise TypeError("mollified sums need an axis-aligned box window")
    if W.dim != cps.m:
        raise ValueError("window dimension differs from the internal dimension")
    return W


def direct_mollified_sum(
    cps: CutProjectScheme,
    W: AlignedBoxWindow,
    t,
    params: MollifierParams,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> complex:
    """``sum_{lambda in L} e(-t.lambda) F_R(lambda, lambda*)`` over the support of ``F_R``."""
    W = _check_cube(cps, W)
    t = np.broadcast_to(np.asarray(t, dtype=float), (cps.d,))
    box = SupNormBox(
        np.concatenate([np.zeros(cps.d), W.center]),
        np.concatenate([np.full(cps.d, params.R + params.S_R), W.sides / 2 + params.eps_R]),
    )
    acc = StreamSum()
    for batch in iter_region(cps.lattice, box, max_candidates):
        x, star = cps.split(batch.points)
        weight = F_R_eval(cps, W, params, x, star)
        phase = np.zeros(len(x))
        for j in range(cps.d):
            phase += t[j] * x[:, j]
        acc.add(np.atleast_1d(weight) * unit_phase(-phase))
    return acc.total()


def mollified_envelopes(d: int, W: AlignedBoxWindow, params: MollifierParams) -> list[Envelope]:
    """Per-axis envelopes of ``phi^_R`` (first ``d`` axes) and ``psi^_R``."""
    phys = Envelope(*zip(sinc_envelope(2 * params.R), smoothing_envelope(params.S_R)))
    internal = [
        Envelope(*zip(sinc_envelope(u), smoothing_envelope(params.eps_R))) for u in W.sides
    ]
    return [phys] * d + internal


@dataclass
class DualTruncation:
    """Sup-norm half widths for ``theta + t`` (physical) and ``theta*`` (internal)."""

    physical: np.ndarray
    internal: np.ndarray

    @property
    def half_widths(self) -> np.ndarray:
        return np.concatenate([self.physical, self.internal])

    @classmethod
    def uniform(cls, cps: CutProjectScheme, physical: float, internal: float) -> "DualTruncation":
        return cls(np.full(cps.d, float(physical)), np.full(cps.m, float(internal)))


def auto_truncation(
    cps: CutProjectScheme,
    W: AlignedBoxWindow,
    params: MollifierParams,
    rel_tail: float = DEFAULT_REL_TAIL,
    budget: float = DEFAULT_POINT_BUDGET,
) -> tuple[DualTruncation, bool]:
    """Smallest doubling-grown truncation whose tail bound is ``rel_tail`` of the main scale.

    The main scale is ``dens(L) (2R)^d vol(W)``.  Returns the truncation and
    whether the point budget stopped the growth first.
    """
    env = mollified_envelopes(cps.d, W, params)
    target = rel_tail * (2 * params.R) ** cps.d * W.volume
    start = np.concatenate(
        [np.full(cps.d, 4.0 / params.S_R), np.full(cps.m, 4.0 / params.eps_R)]
    )
    X, _, capped = grow_truncation(dual_of(cps), start, env, target, budget)
    return DualTruncation(X[: cps.d], X[cps.d :]), capped


@dataclass
class ReciprocalSum:
    value: complex
    tail_bound: float
    main_term: complex
    n_terms: int
    truncation: DualTruncation
    abs_sum: float = 0.0


def _resolve_trunc(cps, W, params, trunc) -> DualTruncation:
    if trunc is None:
        return auto_truncation(cps, W, params)[0]
    if isinstance(trunc, DualTruncation):
        return trunc
    trunc = np.broadcast_to(np.asarray(trunc, dtype=float), (cps.k,))
    return DualTruncation(trunc[: cps.d].copy(), trunc[cps.d :].copy())


def reciprocal_mollified_sum(
    cps: CutProjectScheme,
    W: AlignedBoxWindow,
    t,
    params: MollifierParams,
    trunc=None,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> ReciprocalSum:
    """``dens(L) sum phi^_R(theta + t) psi^_R(theta*)`` over the truncated dual lattice.

    ``trunc`` is a :class:`DualTruncation`, a scalar or per-axis radius, or
    ``None`` for :func:`auto_truncation`.  ``abs_sum`` on the result is the
    sum of ``|phi^ psi^|`` over the enumerated points other than ``theta = -t``.
    """
    W = _check_cube(cps, W)
    t = np.broadcast_to(np.asarray(t, dtype=float), (cps.d,)).copy()
    trunc = _resolve_trunc(cps, W, params, trunc)
    dual = dual_of(cps)
    box = SupNormBox(np.concatenate([-t, np.zeros(cps.m)]), trunc.half_widths)
    acc = StreamSum()
    off = StreamSum()
    main = 0j
    zero_tol = 1e-12 * (1.0 + float(np.max(np.abs(t))))
    for batch in iter_region(dual, box, max_candidates):
        theta, star = cps.split(batch.points)
        terms = phi_hat(theta + t, params) * np.atleast_1d(mollified_window_ft(W, params.eps_R, star))
        at_main = np.max(np.abs(theta + t), axis=1) <= zero_tol
        if at_main.any():
            main += complex(terms[at_main].sum())
        acc.add(terms)
        off.add(np.abs(terms[~at_main]))
    env = mollified_envelopes(cps.d, W, params)
    tail = cps.density * separable_tail_bound(dual, trunc.half_widths, env)
    return ReciprocalSum(
        cps.density * acc.total(),
        tail,
        cps.density * main,
        acc.count,
        trunc,
        off.total().real,
    )


# eps_R and the tail estimate


@dataclass
class EpsilonSearch:
    value: float
    S_R: float
    cap: float
    capped: bool
    minima: dict

    def describe(self) -> str:
        if self.capped:
            return f"no qualifying dual point with |theta*| <= {self.cap}; 1/cap returned as certificate"
        return "minimum |theta*| over the dual strip"


def epsilon_R_search(
    cps: CutProjectScheme,
    t,
    S_R: float,
    K_star_cap: float = DEFAULT_K_STAR_CAP,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> EpsilonSearch:
    """Smallest admissible window smoothing for strip smoothing ``S_R``.

    For ``s`` in ``{0, t}`` the dual points with ``0 < |theta + s| <= 1/S_R``
    and ``|theta*| <= K_star_cap`` are enumerated; ``eps_R`` is the largest
    reciprocal of their minimal ``|theta*|``.  Raises
    :class:`Condition1Violated` if such a point has ``theta* = 0``.
    """
    if S_R <= 0 or K_star_cap <= 0:
        raise ValueError("S_R and K_star_cap must be positive")
    t = np.broadcast_to(np.asarray(t, dtype=float), (cps.d,)).copy()
    shifts = [np.zeros(cps.d)]
    if np.any(t != 0):
        shifts.append(t)
    minima = {}
    for label, s in zip(("0", "t"), shifts):
        pts = dual_points_in_box(cps, -s, 1.0 / S_R, K_star_cap, max_candidates=max_candidates)
        theta, star = cps.split(pts.points)
        gap = np.max(np.abs(theta + s), axis=1)
        zero_tol = 1e-12 * (1.0 + float(np.max(np.abs(s))))
        keep = gap > zero_tol
        norms = np.max(np.abs(star[keep]), axis=1)
        if np.any(norms <= ZERO_STAR_TOL):
            bad = pts.coords[keep][np.argmin(norms)]
            raise Condition1Violated(
                f"dual point {bad.tolist()} has theta* = 0 within 1/S_R = {1 / S_R:g} of -s; increase S_R"
            )
        minima[label] = float(norms.min()) if norms.size else None
    found = [v for v in minima.values() if v is not None]
    if not found:
        return EpsilonSearch(1.0 / K_star_cap, S_R, K_star_cap, True, minima)
    return EpsilonSearch(1.0 / min(found), S_R, K_star_cap, False, minima)


def epsilon_R_compute(cps: CutProjectScheme, t, S_R: float, K_star_cap: float = DEFAULT_K_STAR_CAP) -> float:
    return epsilon_R_search(cps, t, S_R, K_star_cap).value


def reference_bound(R: float, S_R: float, eps_R: float, eta: float, d: int, m: int) -> float:
    """``R^(d-1) S_R eta^m + R^d eps_R eta^(m-1)``."""
    return R ** (d - 1) * S_R * eta**m + R**d * eps_R * eta ** (m - 1)


@dataclass
class TailBoundReport:
    R: float
    S_R: float
    eps_R: float
    eta: float
    truncated_tail: float
    paper_bound: float
    ratio: float
    omitted_bound: float
    n_terms: int


def tail_bound_report(
    cps: CutProjectScheme,
    W: AlignedBoxWindow,
    t,
    params: MollifierParams,
    trunc=None,
) -> TailBoundReport:
    """Sum of ``|phi^_R(theta + t) psi^_R(theta*)|`` off the main term against the reference bound.

    ``W`` must be a cube of side ``eta`` and ``eps_R <= eta``; otherwise
    :class:`HypothesisViolated`.  ``omitted_bound`` bounds what the
    truncation leaves out.
    """
    W = _check_cube(cps, W)
    if not np.allclose(W.sides, W.sides[0], rtol=1e-12):
        raise ValueError("tail bound needs a cube window")
    eta = float(W.sides[0])
    if params.eps_R > eta:
        raise HypothesisViolated(f"eps_R = {params.eps_R:g} exceeds the cube side {eta:g}")
    rec = reciprocal_mollified_sum(cps, W, t, params, trunc)
    bound = reference_bound(params.R, params.S_R, params.eps_R, eta, cps.d, cps.m)
    tail = rec.abs_sum
    return TailBoundReport(
        params.R, params.S_R, params.eps_R, eta, tail, bound, tail / bound,
        rec.tail_bound / cps.density, rec.n_terms,
    )


@dataclass
class GapRow:
    R: float
    S_R: float
    eps_R: float
    raw_sum: complex
    mollified: complex
    normalized_gap: float


def mollifier_gap_sweep(
    cps: CutProjectScheme,
    W: AlignedBoxWindow,
    t,
    R_list,
    K_star_cap: float = DEFAULT_K_STAR_CAP,
) -> list[GapRow]:
    """``|vol(B_R) a_R(t) - direct_mollified_sum| / R^d`` with ``S_R = sqrt(R)``."""
    R_list = [float(R) for R in R_list]
    if any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ValueError("R_list must be strictly increasing")
    W = _check_cube(cps, W)
    rows = []
    for R in R_list:
        S = math.sqrt(R)
        eps = epsilon_R_compute(cps, t, S, K_star_cap)
        params = MollifierParams(R, S, eps)
        raw = fb_coefficient_finite(cps, W, t, R).value * (2 * R) ** cps.d
        direct = direct_mollified_sum(cps, W, t, params)
        rows.append(GapRow(R, S, eps, raw, direct, abs(raw - direct) / R**cps.d))
    return rows


def jsonable(obj):
    """Dataclasses, arrays and complex numbers as plain JSON values."""
    if hasattr(obj, "__dataclass_fields__"):
        return {k: jsonable(v) for k, v in asdict(obj).items() if not k.startswith("_")}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj
