"""Lattice algebra: bases, dual bases, densities and box enumeration.

A lattice is ``A Z^k`` with the columns of ``A`` as generators.  Points are
always carried together with their integer coordinates, so no projection
ever has to be inverted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import RegionTooLarge, SingularMatrix

DEFAULT_MAX_CANDIDATES = 10**9
_PREFIX_CHUNK = 1 << 16


def _as_basis(A) -> np.ndarray:
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SingularMatrix(f"basis must be square, got shape {A.shape}")
    if A.shape[0] < 1:
        raise SingularMatrix("empty basis")
    if not np.all(np.isfinite(A)):
        raise SingularMatrix("basis has non-finite entries")
    return A


def embed(A: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Return ``A @ n`` row-wise for integer rows ``n`` with a fixed summation order.

    BLAS kernels may round differently depending on array shape; the explicit
    column loop keeps results identical however the rows are chunked.
    """
    n = np.asarray(n)
    out = np.zeros(n.shape[:-1] + (A.shape[0],))
    for j in range(A.shape[1]):
        out += n[..., j, None].astype(float) * A[:, j]
    return out


@dataclass(frozen=True, eq=False)
class Lattice:
    """Lattice ``A Z^k`` with cached inverse, dual basis and density."""

    basis: np.ndarray
    inverse: np.ndarray = field(repr=False)
    dual_basis: np.ndarray = field(repr=False)
    det: float
    density: float

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def points(self, coords) -> np.ndarray:
        return embed(self.basis, np.atleast_2d(coords))

    def dual(self) -> "Lattice":
        return dual_lattice(self)


def make_lattice(A) -> Lattice:
    """Build a :class:`Lattice` from a basis matrix (columns are generators).

    Raises :class:`SingularMatrix` when ``|det A| <= 1e-10 * (max column
    sup-norm)^k``.
    """
    A = _as_basis(A)
    k = A.shape[0]
    det = float(np.linalg.det(A))
    scale = float(np.max(np.abs(A)))
    if scale == 0.0 or abs(det) <= 1e-10 * scale**k:
        raise SingularMatrix(f"basis is singular (det={det:.3e})")
    inv = np.linalg.inv(A)
    for arr in (A, inv):
        arr.setflags(write=False)
    dual = inv.T.copy()
    dual.setflags(write=False)
    return Lattice(basis=A, inverse=inv, dual_basis=dual, det=det, density=1.0 / abs(det))


def dual_lattice(L: Lattice) -> Lattice:
    return make_lattice(L.dual_basis)


def lattice_density(L: Lattice) -> float:
    return L.density


@dataclass(frozen=True, eq=False)
class SupNormBox:
    """Axis-aligned box ``{y : |y_i - center_i| <= half_widths_i}``."""

    center: np.ndarray
    half_widths: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        r = np.atleast_1d(np.asarray(self.half_widths, dtype=float))
        if r.shape == (1,) and c.shape[0] > 1:
            r = np.full(c.shape, r[0])
        if c.shape != r.shape:
            raise ValueError("center and half_widths differ in dimension")
        if not np.all(r > 0) or not np.all(np.isfinite(r)):
            raise ValueError("half_widths must be positive and finite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_widths", r)

    @classmethod
    def ball(cls, R: float, dim: int) -> "SupNormBox":
        return cls(np.zeros(dim), np.full(dim, float(R)))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.half_widths

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.half_widths

    @property
    def volume(self) -> float:
        return float(np.prod(2 * self.half_widths))

    def contains(self, y) -> np.ndarray:
        y = np.atleast_2d(y)
        return np.all(np.abs(y - self.center) <= self.half_widths, axis=-1)

    @staticmethod
    def product(first: "SupNormBox", second: "SupNormBox") -> "SupNormBox":
        return SupNormBox(
            np.concatenate([first.center, second.center]),
            np.concatenate([first.half_widths, second.half_widths]),
        )


@dataclass(frozen=True)
class LatticePoint:
    coords: tuple[int, ...]
    embedded: tuple[float, ...]


@dataclass
class PointBatch:
    """Integer coordinates ``coords`` (N, k) and embedded vectors ``points`` (N, k)."""

    coords: np.ndarray
    points: np.ndarray

    def __len__(self) -> int:
        return self.coords.shape[0]

    def __iter__(self) -> Iterator[LatticePoint]:
        for n, w in zip(self.coords, self.points):
            yield LatticePoint(tuple(int(v) for v in n), tuple(float(v) for v in w))

    @classmethod
    def empty(cls, k: int) -> "PointBatch":
        return cls(np.zeros((0, k), dtype=np.int64), np.zeros((0, k)))

    @classmethod
    def concat(cls, batches: list["PointBatch"], k: int) -> "PointBatch":
        if not batches:
            return cls.empty(k)
        return cls(
            np.concatenate([b.coords for b in batches]),
            np.concatenate([b.points for b in batches]),
        )

    def select(self, mask) -> "PointBatch":
        return PointBatch(self.coords[mask], self.points[mask])


def integer_bounds(L: Lattice, box: SupNormBox) -> tuple[np.ndarray, np.ndarray]:
    """Integer coordinate ranges containing every lattice point of ``box``.

    From ``n = A^{-1} w``: each coordinate lies within the row-wise l1 bound
    around the image of the box center.
    """
    Ainv = L.inverse
    mid = Ainv @ box.center
    spread = np.abs(Ainv) @ box.half_widths
    slack = 1e-9 * (np.abs(mid) + spread + 1.0)
    lo = np.floor(mid - spread - slack).astype(np.int64)
    hi = np.ceil(mid + spread + slack).astype(np.int64)
    return lo, hi


def candidate_count(L: Lattice, box: SupNormBox, coord_bounds=None) -> int:
    """Number of leading-coordinate prefixes scanned by :func:`iter_region`.

    Every prefix fixes the first ``k - 1`` coordinates; the last one is solved
    from the box, so this count measures the enumeration work and is what the
    candidate cap limits.
    """
    lo, hi = integer_bounds(L, box)
    if coord_bounds is not None:
        lo = np.maximum(lo, coord_bounds[0])
        hi = np.minimum(hi, coord_bounds[1])
    return int(np.prod(np.maximum(hi - lo + 1, 0)[:-1].astype(object)))


def iter_region(
    L: Lattice,
    box: SupNormBox,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
    coord_bounds: tuple | None = None,
) -> Iterator[PointBatch]:
    """Yield batches of lattice points inside ``box`` in lexicographic order.

    Leading coordinates run over the inverse-matrix bounds; for each prefix
    the admissible range of the last coordinate is solved from the box
    constraints directly, then every candidate passes the exact membership
    test.  ``coord_bounds`` optionally intersects the integer ranges with an
    extra ``(lo, hi)`` pair of integer vectors.
    """
    if box.dim != L.dim:
        raise ValueError(f"box dimension {box.dim} != lattice dimension {L.dim}")
    A = L.basis
    k = L.dim
    lo, hi = integer_bounds(L, box)
    if coord_bounds is not None:
        lo = np.maximum(lo, np.asarray(coord_bounds[0], dtype=np.int64))
        hi = np.minimum(hi, np.asarray(coord_bounds[1], dtype=np.int64))
    sizes = hi - lo + 1
    if np.any(sizes <= 0):
        return
    total = int(np.prod(sizes[: k - 1].astype(object)))
    if total > max_candidates:
        raise RegionTooLarge(
            f"{total} candidate prefixes exceed the cap of {max_candidates}"
        )

    blo, bhi = box.lower, box.upper
    col = A[:, k - 1]
    head = A[:, : k - 1]
    prefix_sizes = sizes[: k - 1]
    n_prefix = int(np.prod(prefix_sizes))
    usable = np.abs(col) > 1e-14 * np.max(np.abs(A))

    for start in range(0, n_prefix, _PREFIX_CHUNK):
        flat = np.arange(start, min(start + _PREFIX_CHUNK, n_prefix))
        if k == 1:
            prefix = np.zeros((1, 0), dtype=np.int64)
        else:
            prefix = np.stack(np.unravel_index(flat, prefix_sizes), axis=-1) + lo[: k - 1]
        base = embed(head, prefix)
        tlo = np.full(len(prefix), float(lo[k - 1]))
        thi = np.full(len(prefix), float(hi[k - 1]))
        for j in np.flatnonzero(usable):
            a = (blo[j] - base[:, j]) / col[j]
            b = (bhi[j] - base[:, j]) / col[j]
            tlo = np.maximum(tlo, np.minimum(a, b))
            thi = np.minimum(thi, np.maximum(a, b))
        # widen by one on each side; the exact filter below removes extras
        nlo = np.maximum(np.floor(tlo) - 1, lo[k - 1]).astype(np.int64)
        nhi = np.minimum(np.ceil(thi) + 1, hi[k - 1]).astype(np.int64)
        counts = np.maximum(nhi - nlo + 1, 0)
        if counts.sum() == 0:
            continue
        rows = np.repeat(np.arange(len(prefix)), counts)
        offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        last = nlo[rows] + offsets
        coords = np.concatenate([prefix[rows], last[:, None]], axis=1)
        pts = embed(A, coords)
        keep = np.all(np.abs(pts - box.center) <= box.half_widths, axis=1)
        if keep.any():
            yield PointBatch(coords[keep], pts[keep])


def enumerate_in_region(
    L: Lattice,
    box: SupNormBox,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
    coord_bounds: tuple | None = None,
) -> PointBatch:
    """All lattice points whose embedded vector lies in ``box``.

    Iterating the returned batch yields :class:`LatticePoint` records.
    """
    return PointBatch.concat(
        list(iter_region(L, box, max_candidates, coord_bounds)), L.dim
    )
