"""Cut-and-project schemes, the star map and model-set generation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DensenessSuspect, ProjectionNotInjective
from .lattice import (
    DEFAULT_MAX_CANDIDATES,
    Lattice,
    PointBatch,
    SupNormBox,
    embed,
    enumerate_in_region,
    make_lattice,
)
from .window import AlignedBoxWindow, Window, interval, octagon

TAU = (1 + math.sqrt(5)) / 2
SQRT2 = math.sqrt(2)

N_CHECK = 50
ZERO_TOL = 1e-9
DENSENESS_POINTS = 10_000
DENSENESS_LEVEL = 3


@dataclass
class ValidationReport:
    n_check: int
    injective_lattice: bool
    injective_dual: bool
    denseness_cells_hit: int
    denseness_cells_total: int
    denseness_points: int

    @property
    def denseness_ok(self) -> bool:
        return self.denseness_cells_hit == self.denseness_cells_total

    def summary(self) -> str:
        return (
            f"injectivity of pi on L and L* verified up to N_check = {self.n_check}; "
            f"denseness proxy hit {self.denseness_cells_hit}/{self.denseness_cells_total} "
            f"cells with {self.denseness_points} points (heuristic)"
        )


@dataclass(eq=False)
class CutProjectScheme:
    """Lattice in ``R^k = R^d x R^(k-d)`` with physical dimension ``d``."""

    lattice: Lattice
    d: int
    report: ValidationReport | None = None
    name: str = "custom"
    default_window: Window | None = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return self.lattice.dim

    @property
    def m(self) -> int:
        """Internal dimension ``k - d``."""
        return self.lattice.dim - self.d

    @property
    def density(self) -> float:
        return self.lattice.density

    def split(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Physical and internal parts of embedded vectors."""
        w = np.asarray(w)
        return w[..., : self.d], w[..., self.d :]

    def dual_points(self, m) -> tuple[np.ndarray, np.ndarray]:
        """``(theta, theta_star)`` for integer dual coordinates ``m``."""
        return self.split(embed(self.lattice.dual_basis, np.atleast_2d(m)))

    def product_box(self, phys: SupNormBox, internal: SupNormBox) -> SupNormBox:
        return SupNormBox.product(phys, internal)


def _zero_projection_hits(L: Lattice, d: int, n_check: int, basis: np.ndarray) -> PointBatch:
    k = L.dim
    tol = ZERO_TOL * max(1.0, float(np.max(np.abs(basis))))
    internal_extent = n_check * np.abs(basis[d:]).sum(axis=1)
    box = SupNormBox(
        np.zeros(k),
        np.concatenate([np.full(d, tol), internal_extent + 1.0]),
    )
    bounds = (np.full(k, -n_check), np.full(k, n_check))
    hits = enumerate_in_region(L, box, coord_bounds=bounds)
    return hits.select(np.any(hits.coords != 0, axis=1))


def _denseness_proxy(L: Lattice, d: int, n_points: int, level: int) -> tuple[int, int, int]:
    """Count reference cells of side ``2^-level`` hit by internal projections.

    The reference box is ``[-1/2, 1/2]^(k-d)``; the points taken are the
    ``n_points`` lattice points with internal part in that box and the
    smallest physical sup-norm.
    """
    m = L.dim - d
    ref = SupNormBox(np.zeros(m), np.full(m, 0.5))
    R = max(1.0, (n_points / (L.density * 2**d)) ** (1 / d))
    for _ in range(40):
        pts = enumerate_in_region(L, SupNormBox.product(SupNormBox.ball(R, d), ref))
        if len(pts) >= n_points:
            break
        R *= 1.5
    phys = np.max(np.abs(pts.points[:, :d]), axis=1)
    order = np.lexsort(tuple(pts.coords.T[::-1]) + (phys,))[:n_points]
    star = pts.points[order, d:]
    cells = np.clip(np.floor((star + 0.5) * 2**level).astype(np.int64), 0, 2**level - 1)
    hit = len({tuple(c) for c in cells})
    return hit, 2 ** (level * m), len(order)


def make_cps(
    L: Lattice,
    d: int,
    n_check: int = N_CHECK,
    check_denseness: bool = True,
    name: str = "custom",
    default_window: Window | None = None,
) -> CutProjectScheme:
    """Assemble a scheme and verify its axioms at finite scale.

    Raises :class:`ProjectionNotInjective` if a nonzero point of ``L`` or
    ``L*`` with coordinates in ``[-n_check, n_check]^k`` has physical part
    below tolerance.  A failed denseness proxy only warns.
    """
    k = L.dim
    if not 1 <= d < k:
        raise ValueError(f"need 1 <= d < k, got d={d}, k={k}")
    hits = _zero_projection_hits(L, d, n_check, L.basis)
    if len(hits):
        raise ProjectionNotInjective(
            f"lattice point {hits.coords[0].tolist()} projects to 0 in physical space"
        )
    dual = make_lattice(L.dual_basis)
    hits = _zero_projection_hits(dual, d, n_check, L.dual_basis)
    if len(hits):
        raise ProjectionNotInjective(
            f"dual lattice point {hits.coords[0].tolist()} projects to 0 in physical space"
        )
    cells_hit, cells_total, used = (0, 0, 0)
    if check_denseness:
        cells_hit, cells_total, used = _denseness_proxy(L, d, DENSENESS_POINTS, DENSENESS_LEVEL)
        if cells_hit < cells_total:
            warnings.warn(
                f"internal projections hit only {cells_hit}/{cells_total} reference cells",
                DensenessSuspect,
                stacklevel=2,
            )
    report = ValidationReport(n_check, True, True, cells_hit, cells_total, used)
    return CutProjectScheme(L, d, report, name, default_window)


def star_map(cps: CutProjectScheme, n) -> np.ndarray:
    """Internal part ``pi_int(A n)`` of the lattice point with coordinates ``n``."""
    n = np.asarray(n)
    pts = cps.lattice.points(n)
    star = pts[:, cps.d :]
    return star[0] if n.ndim == 1 else star


def physical_part(cps: CutProjectScheme, n) -> np.ndarray:
    n = np.asarray(n)
    pts = cps.lattice.points(n)
    phys = pts[:, : cps.d]
    return phys[0] if n.ndim == 1 else phys


def points_in_strip(
    cps: CutProjectScheme,
    region: Window,
    R: float,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> PointBatch:
    """Lattice points with ``|x|_inf <= R`` and ``x* in region``."""
    if R <= 0:
        raise ValueError("R must be positive")
    box = SupNormBox.product(SupNormBox.ball(R, cps.d), region.bounding_box)
    pts = enumerate_in_region(cps.lattice, box, max_candidates)
    if len(pts) == 0:
        return pts
    return pts.select(np.asarray(region.contains(pts.points[:, cps.d :]), dtype=bool))


@dataclass
class ModelSetPoints:
    """Model-set points with their internal images and lattice coordinates."""

    physical: np.ndarray
    internal: np.ndarray
    coords: np.ndarray

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self):
        return iter(zip(self.physical, self.internal))


def model_set_points(
    cps: CutProjectScheme,
    W: Window,
    R: float,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> ModelSetPoints:
    """``{lambda in L : |lambda| <= R, lambda* in W}`` in lexicographic coordinate order."""
    pts = points_in_strip(cps, W, R, max_candidates)
    phys, star = cps.split(pts.points)
    return ModelSetPoints(phys, star, pts.coords)


def count_in_internal_region(cps: CutProjectScheme, region: Window, R: float) -> int:
    return len(points_in_strip(cps, region, R))


# presets


def fibonacci_basis() -> np.ndarray:
    return np.array([[1.0, TAU], [1.0, 1.0 - TAU]])


def silver_mean_basis() -> np.ndarray:
    return np.array([[1.0, 1.0 + SQRT2], [1.0, 1.0 - SQRT2]])


def ammann_beenker_basis() -> np.ndarray:
    """``Z^4`` embedded by ``e_j -> (zeta^j, zeta^{3j})`` with ``zeta = e^{i pi/4}``."""
    h = SQRT2 / 2
    cos1 = [1.0, h, 0.0, -h]
    sin1 = [0.0, h, 1.0, h]
    cos3 = [1.0, -h, 0.0, h]
    sin3 = [0.0, h, -1.0, h]
    return np.array([cos1, sin1, cos3, sin3])


def _fibonacci_window() -> Window:
    # +-tau/2 is not in Z[tau], so no lattice point lies on the boundary
    return interval(-TAU / 2, TAU / 2)


def _silver_window() -> Window:
    # +-1/2 is not in Z[sqrt 2]
    return interval(-0.5, 0.5)


def _ab_window() -> Window:
    # edge length 1: the projection of the unit hypercube
    return octagon(1.0 / (2.0 * math.sin(math.pi / 8)))


PRESETS = {
    "fibonacci": (fibonacci_basis, 1, _fibonacci_window),
    "silver_mean": (silver_mean_basis, 1, _silver_window),
    "ammann_beenker": (ammann_beenker_basis, 2, _ab_window),
}

_preset_cache: dict[str, CutProjectScheme] = {}


def preset(name: str) -> CutProjectScheme:
    """Validated scheme for a named preset; ``default_window`` holds its window."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    if name not in _preset_cache:
        basis, d, window = PRESETS[name]
        _preset_cache[name] = make_cps(make_lattice(basis()), d, name=name, default_window=window())
    return _preset_cache[name]
