"""Windows in internal space and their Fourier analysis.

Conventions: ``e(x) = exp(2 pi i x)`` and ``f^(y) = int e(-x.y) f(x) dx``.
``sinc`` is the unnormalised ``sin(x)/x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull

from .errors import ConfigError, LevelTooFine
from .lattice import SupNormBox
from .summation import unit_phase

DEFAULT_MAX_CUBES = 1 << 22


def sinc(x):
    """``sin(x)/x`` with ``sinc(0) = 1``; a short series below ``|x| < 1e-4``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)


def _as_points(y, dim: int) -> tuple[np.ndarray, bool]:
    y = np.asarray(y, dtype=float)
    single = y.ndim <= 1
    y = y.reshape(-1, dim) if single else y
    if y.shape[-1] != dim:
        raise ValueError(f"expected {dim}-dimensional points, got shape {y.shape}")
    return y, single


def _unwrap(values: np.ndarray, single: bool):
    if single:
        v = values[0]
        return complex(v) if np.iscomplexobj(values) else float(v)
    return values


@dataclass
class DyadicDecomposition:
    """Inner and boundary dyadic cubes of a window at level ``level``.

    Inner cubes are stored at the (coarser) level where they were first
    classified; ``inner`` maps that level to integer cube indices.  Counts
    and volumes are expressed at ``level``.
    """

    level: int
    dim: int
    inner: dict[int, np.ndarray]
    boundary: np.ndarray

    @property
    def n_inner(self) -> int:
        return int(sum(len(idx) * 2 ** ((self.level - l) * self.dim) for l, idx in self.inner.items()))

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)

    @property
    def vol_inner(self) -> float:
        return sum(len(idx) * 2.0 ** (-l * self.dim) for l, idx in self.inner.items())

    @property
    def vol_boundary(self) -> float:
        return len(self.boundary) * 2.0 ** (-self.level * self.dim)

    def inner_boxes(self) -> list["AlignedBoxWindow"]:
        """Stored inner cubes as box windows (mixed sizes, union equals ``I^(n)``)."""
        out = []
        for l, idx in sorted(self.inner.items()):
            h = 2.0**-l
            out.extend(AlignedBoxWindow((i + 0.5) * h, np.full(self.dim, h)) for i in idx)
        return out

    def inner_ft(self, y) -> complex:
        """Fourier transform of the indicator of the inner union at one frequency."""
        y = np.asarray(y, dtype=float).reshape(self.dim)
        total = 0j
        for l in sorted(self.inner):
            idx = self.inner[l]
            if len(idx) == 0:
                continue
            h = 2.0**-l
            envelope = float(np.prod(h * sinc(np.pi * h * y)))
            phases = unit_phase(-((idx + 0.5) * h) @ y)
            total += envelope * complex(phases.sum())
        return total


class Window:
    """Bounded region of internal space with an indicator."""

    dim: int
    bounding_box: SupNormBox
    volume: float | None
    exact_ft = False

    def __init__(self):
        self._levels: dict[int, tuple[dict[int, np.ndarray], np.ndarray]] = {}

    def contains(self, y) -> np.ndarray:
        raise NotImplementedError

    def ft(self, y):
        raise NotImplementedError(f"{type(self).__name__} has no closed-form transform")

    def ft_bound(self, y):
        """Upper bound on ``|ft(y)|``; windows without a decay estimate return the volume."""
        y, single = _as_points(y, self.dim)
        v = self.volume if self.volume is not None else self.bounding_box.volume
        return _unwrap(np.full(len(y), v), single)

    # dyadic machinery

    def _extra_boundary(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        return np.zeros(len(lo), dtype=bool)

    def _classify(self, idx: np.ndarray, level: int) -> np.ndarray:
        """0 outer, 1 boundary, 2 inner, by sampling corners and center."""
        h = 2.0**-level
        lo = idx * h
        n_in = np.zeros(len(idx), dtype=np.int64)
        for corner in product((0, 1), repeat=self.dim):
            n_in += self.contains(lo + np.asarray(corner) * h)
        center_in = self.contains(lo + 0.5 * h)
        n_corners = 2**self.dim
        cls = np.where(n_in == n_corners, 2, np.where((n_in > 0) | center_in, 1, 0))
        extra = self._extra_boundary(lo, lo + h)
        return np.where(extra & (cls != 1), 1, cls)

    def _start_level(self) -> int:
        width = float(np.min(2 * self.bounding_box.half_widths))
        return max(0, int(math.ceil(math.log2(4.0 / width))))

    def decompose(self, level: int, max_cubes: int = DEFAULT_MAX_CUBES) -> DyadicDecomposition:
        if level < 1:
            raise ValueError("dyadic level must be >= 1")
        # memo: concurrent first calls may both compute, results are identical
        if level in self._levels:
            inner, boundary = self._levels[level]
            return DyadicDecomposition(level, self.dim, dict(inner), boundary)
        l0 = min(self._start_level(), level)
        done = [l for l in self._levels if l0 <= l < level]
        if done:
            cur = max(done)
            inner, boundary = self._levels[cur]
            inner = dict(inner)
        else:
            cur = l0
            h = 2.0**-cur
            box = self.bounding_box
            lo = np.floor(box.lower / h).astype(np.int64)
            hi = np.ceil(box.upper / h).astype(np.int64)
            if np.prod((hi - lo).astype(float)) > max_cubes:
                raise LevelTooFine(f"level {cur} needs more than {max_cubes} cubes")
            axes = [np.arange(a, b) for a, b in zip(lo, hi)]
            cubes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
            cls = self._classify(cubes, cur)
            inner = {cur: cubes[cls == 2]}
            boundary = cubes[cls == 1]
            self._levels[cur] = (dict(inner), boundary)
        offsets = np.array(list(product((0, 1), repeat=self.dim)), dtype=np.int64)
        while cur < level:
            if len(boundary) * len(offsets) > max_cubes:
                raise LevelTooFine(
                    f"level {cur + 1} needs {len(boundary) * len(offsets)} cubes (cap {max_cubes})"
                )
            children = (2 * boundary[:, None, :] + offsets[None, :, :]).reshape(-1, self.dim)
            cur += 1
            cls = self._classify(children, cur)
            inner[cur] = children[cls == 2]
            boundary = children[cls == 1]
            self._levels[cur] = (dict(inner), boundary)
        return DyadicDecomposition(level, self.dim, dict(inner), boundary)


class AlignedBoxWindow(Window):
    """Box with faces parallel to the coordinate hyperplanes."""

    exact_ft = True

    def __init__(self, center, sides):
        super().__init__()
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.sides = np.atleast_1d(np.asarray(sides, dtype=float))
        if self.center.shape != self.sides.shape:
            raise ValueError("center and sides differ in dimension")
        if not np.all(self.sides > 0):
            raise ValueError("box sides must be positive")
        self.dim = len(self.center)
        self.bounding_box = SupNormBox(self.center, self.sides / 2)
        self.volume = float(np.prod(self.sides))

    @classmethod
    def cube(cls, center, side: float) -> "AlignedBoxWindow":
        c = np.atleast_1d(np.asarray(center, dtype=float))
        return cls(c, np.full(c.shape, float(side)))

    def __repr__(self):
        return f"AlignedBoxWindow(center={self.center.tolist()}, sides={self.sides.tolist()})"

    def contains(self, y):
        y, single = _as_points(y, self.dim)
        inside = np.all(np.abs(y - self.center) <= self.sides / 2, axis=1)
        return inside[0] if single else inside

    def ft(self, y):
        return ft_indicator_box(self, y)

    def ft_bound(self, y):
        return ft_indicator_bound(self, y)


class GeneralWindow(Window):
    """Window given by a vectorised membership oracle and a bounding box.

    ``regular`` records the caller's assumption that the boundary has
    measure zero; it cannot be certified, only observed through the decay
    of ``vol(D^(n))``.
    """

    def __init__(
        self,
        indicator: Callable[[np.ndarray], np.ndarray],
        bounding_box: SupNormBox,
        volume: float | None = None,
        regular: bool = True,
    ):
        super().__init__()
        self.indicator = indicator
        self.bounding_box = bounding_box
        self.dim = bounding_box.dim
        self.volume = volume
        self.regular = regular

    @classmethod
    def wrap(cls, window: Window) -> "GeneralWindow":
        return cls(window.contains, window.bounding_box, window.volume)

    def contains(self, y):
        y, single = _as_points(y, self.dim)
        inside = np.asarray(self.indicator(y), dtype=bool) & self.bounding_box.contains(y)
        return inside[0] if single else inside

    def volume_bracket(self, level: int) -> tuple[float, float]:
        dec = self.decompose(level)
        return dec.vol_inner, dec.vol_inner + dec.vol_boundary


class PolygonWindow(GeneralWindow):
    """Closed convex polygon in a two-dimensional internal space."""

    exact_ft = True

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least three 2-D vertices")
        signed = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if signed < 0:
            v = v[::-1]
        edges = np.roll(v, -1, axis=0) - v
        turns = edges[:, 0] * np.roll(edges[:, 1], -1) - edges[:, 1] * np.roll(edges[:, 0], -1)
        if np.any(turns < -1e-12 * np.max(np.abs(v)) ** 2) or abs(signed) == 0:
            raise ValueError("polygon2d windows must be convex with positive area")
        self.vertices = v
        self._edges = edges
        lo, hi = v.min(axis=0), v.max(axis=0)
        super().__init__(self._inside, SupNormBox((lo + hi) / 2, (hi - lo) / 2), abs(signed))
        self.perimeter = float(np.sum(np.hypot(edges[:, 0], edges[:, 1])))

    def __repr__(self):
        return f"PolygonWindow({len(self.vertices)} vertices, area={self.volume:.6g})"

    def _inside(self, y):
        inside = np.ones(len(y), dtype=bool)
        for a, e in zip(self.vertices, self._edges):
            inside &= e[0] * (y[:, 1] - a[1]) - e[1] * (y[:, 0] - a[0]) >= 0
        return inside

    def _extra_boundary(self, lo, hi):
        # a vertex poking into a cube can escape the corner/center samples
        hit = np.zeros(len(lo), dtype=bool)
        for p in self.vertices:
            hit |= np.all((lo <= p) & (p <= hi), axis=1)
        return hit

    def _moment(self, y: np.ndarray, order: int) -> float:
        """``int_P (x.y)^order dx`` via the homogeneous-function edge formula."""
        nodes, weights = np.polynomial.legendre.leggauss(order // 2 + 1)
        s = 0.5 * (nodes + 1.0)
        total = 0.0
        for a, e in zip(self.vertices, self._edges):
            normal_len = a[0] * e[1] - a[1] * e[0]  # (a . n) |e| for outward n
            vals = (a @ y + s * (e @ y)) ** order
            total += normal_len * 0.5 * float(weights @ vals)
        return total / (order + 2)

    def ft(self, y):
        y, single = _as_points(y, 2)
        out = np.empty(len(y), dtype=complex)
        diam = float(np.max(np.abs(self.vertices))) * 2
        for r, yy in enumerate(y):
            ny = float(np.hypot(*yy))
            if ny * diam < 0.05:
                # Taylor series of e(-x.y) integrated term by term
                acc = 0j
                for order in range(0, 14):
                    acc += (-2j * np.pi) ** order / math.factorial(order) * self._moment(yy, order)
                out[r] = acc
                continue
            mid = self.vertices + 0.5 * self._edges
            flux = yy[0] * self._edges[:, 1] - yy[1] * self._edges[:, 0]
            edge_int = flux * unit_phase(-(mid @ yy)) * sinc(np.pi * (self._edges @ yy))
            out[r] = 1j / (2 * np.pi * ny * ny) * edge_int.sum()
        return _unwrap(out, single)

    def ft_bound(self, y):
        y, single = _as_points(y, 2)
        ny = np.hypot(y[:, 0], y[:, 1])
        with np.errstate(divide="ignore"):
            decay = np.where(ny > 0, self.perimeter / (2 * np.pi * np.where(ny > 0, ny, 1)), np.inf)
        return _unwrap(np.minimum(self.volume, decay), single)


def interval(a: float, b: float) -> AlignedBoxWindow:
    return AlignedBoxWindow([(a + b) / 2], [b - a])


def octagon(circumradius: float = 1.0, center=(0.0, 0.0)) -> PolygonWindow:
    """Regular octagon with vertices at angles ``pi/8 + j pi/4``.

    Edges are horizontal, vertical and diagonal; the area is
    ``2 sqrt(2) r^2``.
    """
    ang = np.pi / 8 + np.arange(8) * np.pi / 4
    c = np.asarray(center, dtype=float)
    return PolygonWindow(c + circumradius * np.stack([np.cos(ang), np.sin(ang)], axis=1))


def window_from_spec(spec: dict) -> Window:
    """Build a window from its JSON description (``box``, ``polygon2d`` or ``preset``)."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("window spec must be an object with a 'type' field")
    kind = spec["type"]
    try:
        if kind == "box":
            return AlignedBoxWindow(spec["center"], spec["sides"])
        if kind == "polygon2d":
            return PolygonWindow(spec["vertices"])
        if kind == "preset":
            if spec.get("name") != "octagon":
                raise ConfigError(f"unknown window preset {spec.get('name')!r}")
            return octagon(float(spec.get("circumradius", 1.0)), spec.get("center", (0.0, 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {kind} window: {exc}") from exc
    raise ConfigError(f"unknown window type {kind!r}")


# Fourier transforms


def ft_indicator_box(W: AlignedBoxWindow, y):
    """``e(-c.y) prod u_i sinc(pi u_i y_i)``: transform of the box indicator."""
    y, single = _as_points(y, W.dim)
    mag = np.prod(W.sides * sinc(np.pi * W.sides * y), axis=1)
    return _unwrap(mag * unit_phase(-(y @ W.center)), single)


def ft_indicator_bound(W: AlignedBoxWindow, y):
    """``prod min(u_i, 1/(pi |y_i|))``, which dominates ``|ft_indicator_box|``."""
    y, single = _as_points(y, W.dim)
    ay = np.abs(y)
    with np.errstate(divide="ignore"):
        decay = np.where(ay > 0, 1.0 / (np.pi * np.where(ay > 0, ay, 1.0)), np.inf)
    return _unwrap(np.prod(np.minimum(W.sides, decay), axis=1), single)


def mollified_window_ft(W: AlignedBoxWindow, eps: float, y):
    """Transform of ``(1_W * 1_{B_eps}) / (2 eps)^m``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    y, single = _as_points(y, W.dim)
    smooth = np.prod(sinc(2 * np.pi * eps * y), axis=1)
    return _unwrap(np.asarray(ft_indicator_box(W, y)) * smooth, single)


def dyadic_decompose(W: Window, n: int, max_cubes: int = DEFAULT_MAX_CUBES) -> DyadicDecomposition:
    return W.decompose(n, max_cubes)


@dataclass
class GeneralFT:
    value: complex
    error: float
    level: int


def ft_indicator_general(
    W: Window, y, tol: float, max_cubes: int = DEFAULT_MAX_CUBES, max_level: int = 40
) -> GeneralFT:
    """Transform of ``1_W`` at ``y`` summed over inner dyadic cubes.

    Refines until ``vol(D^(n)) <= tol``; the returned error bar is
    ``vol(D^(n))``, which bounds ``|1^_{W \\ I^(n)}(y)|``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = max(1, W._start_level())
    while True:
        dec = W.decompose(n, max_cubes)
        if dec.vol_boundary <= tol:
            return GeneralFT(dec.inner_ft(y), dec.vol_boundary, n)
        if n >= max_level:
            raise LevelTooFine(f"vol(D^(n)) = {dec.vol_boundary:.3g} > tol at level {n}")
        n += 1


# boundary neighbourhoods


def _clip_halfplane(poly: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    out = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        fp, fq = p @ normal - offset, q @ normal - offset
        if fp <= 0:
            out.append(p)
        if fp * fq < 0:
            out.append(p + (q - p) * (fp / (fp - fq)))
    return np.array(out).reshape(-1, 2)


def _polygon_area(v: np.ndarray) -> float:
    if len(v) < 3:
        return 0.0
    return abs(0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))


def boundary_neighborhood_volume(W: Window, eps: float, level: int | None = None) -> float:
    """Volume of ``{y : dist_inf(y, boundary of W) <= eps}``.

    Exact for boxes and convex polygons.  Other windows are rasterised at
    dyadic ``level`` (default: cells about ``eps/8``) and dilated/eroded with
    a square footprint; the error is of the order of the boundary-cube
    volume at that level.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if isinstance(W, AlignedBoxWindow):
        outer = np.prod(W.sides + 2 * eps)
        inner = np.prod(np.maximum(W.sides - 2 * eps, 0.0))
        return float(outer - inner)
    if isinstance(W, PolygonWindow):
        corners = np.array(list(product((-eps, eps), repeat=2)))
        dilated = ConvexHull((W.vertices[:, None, :] + corners[None]).reshape(-1, 2)).volume
        eroded = W.vertices.copy()
        for a, e in zip(W.vertices, W._edges):
            normal = np.array([e[1], -e[0]])
            eroded = _clip_halfplane(eroded, normal, normal @ a - eps * np.abs(normal).sum())
            if len(eroded) == 0:
                break
        return float(dilated - _polygon_area(eroded))
    if level is None:
        level = max(1, int(math.ceil(math.log2(8.0 / eps))))
    h = 2.0**-level
    box = W.bounding_box
    lo = np.floor((box.lower - eps) / h).astype(np.int64) - 2
    hi = np.ceil((box.upper + eps) / h).astype(np.int64) + 2
    shape = tuple(hi - lo)
    if np.prod(np.asarray(shape, dtype=float)) > DEFAULT_MAX_CUBES * 4:
        raise LevelTooFine(f"raster of shape {shape} too large")
    grids = np.meshgrid(*[(np.arange(a, b) + 0.5) * h for a, b in zip(lo, hi)], indexing="ij")
    pts = np.stack(grids, axis=-1).reshape(-1, W.dim)
    mask = W.contains(pts).reshape(shape)
    r = int(round(eps / h))
    size = 2 * r + 1
    dil = ndimage.maximum_filter(mask, size=size, mode="constant", cval=False)
    ero = ndimage.minimum_filter(mask, size=size, mode="constant", cval=False)
    return float(np.count_nonzero(dil & ~ero)) * h**W.dim


# mollifier parameters


@dataclass(frozen=True)
class MollifierParams:
    """Averaging radius ``R``, strip smoothing ``S_R`` and window smoothing ``eps_R``."""

    R: float
    S_R: float
    eps_R: float

    def __post_init__(self):
        if not (self.R > 0 and 0 < self.S_R <= self.R and self.eps_R > 0):
            raise ValueError(f"need 0 < S_R <= R and eps_R > 0, got {self}")

    @classmethod
    def sqrt_strip(cls, R: float, eps_R: float) -> "MollifierParams":
        """``S_R = sqrt(R)``."""
        return cls(float(R), math.sqrt(R), float(eps_R))


def check_sweep(params: list[MollifierParams]) -> list[str]:
    """Monotonicity violations along a sweep ordered by increasing ``R``."""
    problems = []
    for a, b in zip(params, params[1:]):
        if not b.R > a.R:
            problems.append(f"R not increasing at {a.R} -> {b.R}")
        if b.S_R < a.S_R:
            problems.append(f"S_R decreases at R={b.R}")
        if b.S_R / b.R > a.S_R / a.R * (1 + 1e-12):
            problems.append(f"S_R/R increases at R={b.R}")
        if b.eps_R > a.eps_R * (1 + 1e-12):
            problems.append(f"eps_R increases at R={b.R}")
    return problems
