"""Rectangular lattices, interpolation hypercubes, and braid-sorted simplexes.

The domain is an axis-aligned box.  A grid of spacing eta is placed so that
closed eta-balls (infinity norm) around the grid points cover the box while
every point stays inside it.  Around each grid point, sign vectors span the
interpolation hypercubes of edge length eta; each hypercube is dissected into
n! simplexes by the hyperplanes x_i = x_j of its normalized coordinates, one
simplex per sorting permutation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import (
    DimensionTooLarge,
    NonPositiveEta,
    OrphanCorner,
    OutsideDomain,
    SchemaError,
)
from .serialize import float_to_hex, hex_to_float, hex_to_vec, require_keys

#: factorial growth guard: n! hypercube dissections above this are refused
DEFAULT_DIMENSION_CAP = 6


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by lower and upper corner vectors.

    Parameters
    ----------
    lower, upper : array_like, shape (n,)
        Corner vectors with ``lower[i] < upper[i]`` for every axis.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValueError("lower and upper must be 1-D vectors of equal length")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("box corners must be finite")
        if not (lo < hi).all():
            raise ValueError("box must satisfy lower < upper on every axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dimension(self) -> int:
        return self.lower.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def extent(self) -> float:
        """Largest side length (the quantity the size formulas consume)."""
        return float(np.max(self.widths))

    def contains(self, x: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Elementwise membership test for points of shape (..., n)."""
        x = np.asarray(x, dtype=float)
        return np.logical_and(
            (x >= self.lower - tol).all(axis=-1),
            (x <= self.upper + tol).all(axis=-1),
        )

    def product(self, other: "Box") -> "Box":
        """Cartesian product box (state box times input box)."""
        return Box(
            np.concatenate([self.lower, other.lower]),
            np.concatenate([self.upper, other.upper]),
        )

    def to_json(self) -> dict:
        return {
            "lower": [float_to_hex(v) for v in self.lower],
            "upper": [float_to_hex(v) for v in self.upper],
        }

    @staticmethod
    def from_json(obj: dict) -> "Box":
        require_keys(obj, ("lower", "upper"), "box")
        return Box(hex_to_vec(obj["lower"]), hex_to_vec(obj["upper"]))


def extent(box: Box) -> float:
    """Largest side length of ``box``."""
    return box.extent()


class EtaGrid:
    """Rectangular lattice of spacing ``eta`` covering a box domain.

    Points are stored as integer offset vectors against a real anchor
    (``point = anchor + eta * offset``), so lattice relations stay exact:
    any two points differ by integer multiples of eta per coordinate.
    Closed eta-balls around the points cover the domain and all points lie
    inside it.  Offsets run from 0 to ``axis_counts[i] - 1`` per axis.

    Membership-predicate domains are a documented extension point: the
    constructor would then have to search for a covering sub-lattice and
    raise ``CoverageInfeasible`` when none exists.  For boxes the centered
    construction always succeeds.
    """

    def __init__(self, eta: float, anchor: np.ndarray, axis_counts: tuple[int, ...], domain: Box):
        if not (eta > 0.0 and math.isfinite(eta)):
            raise NonPositiveEta(f"eta must be positive and finite, got {eta}")
        anchor = np.asarray(anchor, dtype=float)
        if anchor.shape != (domain.dimension,):
            raise ValueError("anchor dimension does not match domain")
        if len(axis_counts) != domain.dimension or any(c < 1 for c in axis_counts):
            raise ValueError("axis_counts must hold a positive count per axis")
        self.eta = float(eta)
        self.anchor = anchor
        self.axis_counts = tuple(int(c) for c in axis_counts)
        self.domain = domain
        self._offsets = np.array(
            list(itertools.product(*(range(c) for c in self.axis_counts))), dtype=np.int64
        )
        self._points = self.anchor + self.eta * self._offsets
        self._index = {tuple(o): i for i, o in enumerate(self._offsets.tolist())}
        self.validate()

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def num_points(self) -> int:
        return self._points.shape[0]

    @property
    def offsets(self) -> np.ndarray:
        """Integer offset vectors, shape (num_points, n)."""
        return self._offsets

    @property
    def points(self) -> np.ndarray:
        """Real coordinates, shape (num_points, n)."""
        return self._points

    def point_index(self, offset: tuple[int, ...]) -> int:
        return self._index[tuple(offset)]

    def is_grid_offset(self, offset: tuple[int, ...]) -> bool:
        return all(0 <= o < c for o, c in zip(offset, self.axis_counts))

    def offset_coords(self, offset) -> np.ndarray:
        return self.anchor + self.eta * np.asarray(offset, dtype=float)

    def validate(self) -> None:
        """Check the covering and containment invariants exactly per axis.

        The product structure reduces covering to per-axis interval covering:
        first point within eta of the lower edge, last within eta of the
        upper edge, consecutive gaps at most 2*eta.
        """
        lo, hi = self.domain.lower, self.domain.upper
        for i, count in enumerate(self.axis_counts):
            first = self.anchor[i]
            last = self.anchor[i] + self.eta * (count - 1)
            if first < lo[i] or last > hi[i]:
                raise ValueError(f"grid points leave the domain on axis {i}")
            if first - self.eta > lo[i] or last + self.eta < hi[i]:
                raise ValueError(f"closed eta-balls fail to cover axis {i}")
            # spacing is exactly eta, below the 2*eta gap limit

    def to_json(self) -> dict:
        return {
            "eta": float_to_hex(self.eta),
            "anchor": [float_to_hex(v) for v in self.anchor],
            "dimension": self.dimension,
            "offsets": self._offsets.tolist(),
            "domain": self.domain.to_json(),
        }

    @staticmethod
    def from_json(obj: dict) -> "EtaGrid":
        require_keys(obj, ("eta", "anchor", "dimension", "offsets", "domain"), "grid")
        domain = Box.from_json(obj["domain"])
        offsets = np.asarray(obj["offsets"], dtype=np.int64)
        if offsets.ndim != 2 or offsets.shape[1] != domain.dimension:
            raise SchemaError("grid offsets must be a list of integer vectors")
        counts = tuple(int(offsets[:, i].max()) + 1 for i in range(domain.dimension))
        grid = EtaGrid(hex_to_float(obj["eta"]), hex_to_vec(obj["anchor"]), counts, domain)
        if grid.num_points != offsets.shape[0] or not np.array_equal(grid.offsets, offsets):
            raise SchemaError("grid offsets are not the full lattice in canonical order")
        if int(obj["dimension"]) != domain.dimension:
            raise SchemaError("grid dimension field disagrees with domain")
        return grid


def build_eta_grid(domain: Box, eta: float) -> EtaGrid:
    """Construct the covering lattice of spacing ``eta`` for a box domain.

    Per axis the point count is the smallest that still covers,
    ``max(1, ceil(width/eta - 1/2))``, and the run of points is centered in
    the interval.  Containment and covering then hold with slack at least
    eta/4, which keeps the exact validation robust in floating point.
    """
    if not (isinstance(eta, (int, float)) and math.isfinite(eta) and eta > 0.0):
        raise NonPositiveEta(f"eta must be positive and finite, got {eta!r}")
    counts = []
    anchor = np.empty(domain.dimension)
    for i in range(domain.dimension):
        width = float(domain.widths[i])
        count = max(1, math.ceil(width / eta - 0.5))
        center = 0.5 * (domain.lower[i] + domain.upper[i])
        anchor[i] = center - 0.5 * eta * (count - 1)
        counts.append(count)
    return EtaGrid(eta, anchor, tuple(counts), domain)


@dataclass(frozen=True)
class Hypercube:
    """Interpolation hypercube of edge eta, identified by its minimal corner.

    ``cell`` is the minimal corner in lattice offsets; ``base_offset`` and
    ``rho`` record one generating (grid point, sign vector) pair, so corners
    are ``base + eta * sum_{i in Z} rho_i e_i`` over subsets Z.  Two
    generating pairs describing the same cube compare equal through ``cell``.
    """

    cell: tuple[int, ...]
    base_offset: tuple[int, ...]
    rho: tuple[int, ...]

    def __post_init__(self):
        if any(r not in (-1, 1) for r in self.rho):
            raise ValueError("rho entries must be -1 or +1")
        derived = tuple(b if r > 0 else b - 1 for b, r in zip(self.base_offset, self.rho))
        if derived != self.cell:
            raise ValueError("cell is not the minimal corner of (base, rho)")

    def __eq__(self, other):
        return isinstance(other, Hypercube) and self.cell == other.cell

    def __hash__(self):
        return hash(self.cell)

    @property
    def dimension(self) -> int:
        return len(self.cell)

    def corner_offsets(self) -> np.ndarray:
        """All 2^n corner offsets, shape (2^n, n), in lexicographic order."""
        n = self.dimension
        zerone = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)
        return np.asarray(self.cell, dtype=np.int64) + zerone

    def min_corner(self, grid: EtaGrid) -> np.ndarray:
        return grid.offset_coords(self.cell)


def interpolation_hypercubes(grid: EtaGrid) -> list[Hypercube]:
    """All distinct interpolation hypercubes of a grid.

    Enumerates every (grid point, sign vector) pair and deduplicates by the
    minimal corner.  For a full box lattice the distinct minimal corners are
    exactly the product of offsets -1 .. count-1 per axis, so the result has
    prod(count_i + 1) cubes; the enumeration is still performed pairwise so
    the deduplication invariant is the one being exercised.
    """
    seen: dict[tuple[int, ...], Hypercube] = {}
    signs = list(itertools.product((-1, 1), repeat=grid.dimension))
    for offset in grid.offsets.tolist():
        for rho in signs:
            cell = tuple(o if r > 0 else o - 1 for o, r in zip(offset, rho))
            if cell not in seen:
                seen[cell] = Hypercube(cell, tuple(offset), rho)
    return [seen[c] for c in sorted(seen)]


def hypercube_cells(grid: EtaGrid) -> list[tuple[int, ...]]:
    """Minimal-corner cells of all hypercubes, lexicographically sorted."""
    return [tuple(c) for c in itertools.product(*(range(-1, m) for m in grid.axis_counts))]


@dataclass
class ExtraCornerSet:
    """Hypercube corners that are not grid points, with their grid neighbors.

    ``neighbors[corner_offset]`` lists indices of grid points within the
    closed eta-ball of the corner (computed exactly in lattice coordinates:
    every offset component differs by at most 1).  Every corner of every
    hypercube of a box grid has at least one such neighbor; an empty list
    would make the corner-value rule ill-posed and raises ``OrphanCorner``.
    """

    grid: EtaGrid
    neighbors: dict[tuple[int, ...], list[int]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.neighbors)

    def corner_coords(self, offset: tuple[int, ...]) -> np.ndarray:
        return self.grid.offset_coords(offset)

    def items(self):
        return self.neighbors.items()


def extra_corners(grid: EtaGrid) -> ExtraCornerSet:
    """Corners of the hypercube union that are not grid points."""
    neighbors: dict[tuple[int, ...], list[int]] = {}
    ranges = [range(-1, m + 1) for m in grid.axis_counts]
    for corner in itertools.product(*ranges):
        if grid.is_grid_offset(corner):
            continue
        cands = []
        for delta in itertools.product((-1, 0, 1), repeat=grid.dimension):
            cand = tuple(c + d for c, d in zip(corner, delta))
            if grid.is_grid_offset(cand):
                cands.append(grid.point_index(cand))
        if not cands:
            raise OrphanCorner(f"corner {corner} has no grid point within eta")
        neighbors[corner] = sorted(cands)
    return ExtraCornerSet(grid, neighbors)


@dataclass(frozen=True)
class SimplexId:
    """A braid simplex inside one hypercube.

    ``cell`` names the hypercube (minimal corner offsets) and ``sigma`` is
    the ascending sorting permutation of the normalized coordinates:
    the simplex is {t in [0,1]^n : t[sigma[0]] <= ... <= t[sigma[n-1]]}.
    """

    cell: tuple[int, ...]
    sigma: tuple[int, ...]


def braid_simplices(n: int, max_dim: int = DEFAULT_DIMENSION_CAP) -> list[tuple[int, ...]]:
    """Sorting permutations indexing the n! braid simplexes of the unit cube.

    Returned in lexicographic order; entry sigma describes the region where
    coordinate sigma[0] is smallest and sigma[n-1] largest.
    """
    if n < 1:
        raise ValueError("dimension must be at least 1")
    if n > max_dim:
        raise DimensionTooLarge(f"braid dissection in dimension {n} exceeds cap {max_dim}")
    return list(itertools.permutations(range(n)))


def simplex_vertices(sigma: tuple[int, ...]) -> np.ndarray:
    """Vertices of the braid simplex for sorting permutation ``sigma``.

    Returns an integer array of shape (n+1, n): vertex t sets the t largest
    coordinates (sigma[n-t:], in sorting order) to one, so vertex 0 is the
    cube origin and vertex n the all-ones corner.  All vertices are corners
    of the unit cube, walking one coordinate at a time.
    """
    n = len(sigma)
    verts = np.zeros((n + 1, n), dtype=np.int64)
    for t in range(1, n + 1):
        verts[t] = verts[t - 1]
        verts[t, sigma[n - t]] = 1
    return verts


def simplex_world_vertices(simplex: SimplexId, grid: EtaGrid) -> np.ndarray:
    """Real-coordinate vertices of a located simplex, shape (n+1, n)."""
    unit = simplex_vertices(simplex.sigma)
    cell = np.asarray(simplex.cell, dtype=float)
    return grid.anchor + grid.eta * (cell + unit)


def locate_cell(x: np.ndarray, grid: EtaGrid, slack: float = 1e-9) -> tuple[tuple[int, ...], np.ndarray]:
    """Hypercube cell containing ``x`` plus normalized in-cube coordinates.

    Points on a shared face go to the cell with the lexicographically
    smaller minimal corner (exact-integer lattice coordinates step down),
    clamped into the union.  ``slack`` (in lattice units) absorbs float dust
    at the outer boundary; beyond it the point is outside the union.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (grid.dimension,):
        raise OutsideDomain(f"point of shape {x.shape} in a {grid.dimension}-D grid")
    c = (x - grid.anchor) / grid.eta
    cell = []
    for i in range(grid.dimension):
        ci = c[i]
        if ci < -1.0 - slack or ci > grid.axis_counts[i] + slack:
            raise OutsideDomain(
                f"coordinate {i} of point {x.tolist()} leaves the hypercube union"
            )
        k = math.floor(ci)
        if ci == k:  # on a face: take the lower cell
            k -= 1
        k = min(max(k, -1), grid.axis_counts[i] - 1)
        cell.append(k)
    t = c - np.asarray(cell, dtype=float)
    return tuple(cell), t


def locate_simplex(x: np.ndarray, grid: EtaGrid) -> SimplexId:
    """Containing hypercube and sorting permutation for a point.

    The permutation is the ascending stable argsort of the normalized
    coordinates, so equal coordinates break ties by ascending index.
    """
    cell, t = locate_cell(x, grid)
    sigma = tuple(int(i) for i in np.argsort(t, kind="stable"))
    return SimplexId(cell, sigma)


def simplex_contains(simplex: SimplexId, grid: EtaGrid, x: np.ndarray, tol: float = 1e-12) -> bool:
    """Membership of ``x`` in a located simplex, with tolerance ``tol``."""
    cell = np.asarray(simplex.cell, dtype=float)
    t = (np.asarray(x, dtype=float) - grid.anchor) / grid.eta - cell
    lo, hi = -tol, 1.0 + tol
    if (t < lo).any() or (t > hi).any():
        return False
    order = np.asarray(t)[list(simplex.sigma)]
    return bool((np.diff(order) >= -tol).all())


def braid_face_dissection(n: int, axis: int, side: int) -> set[frozenset[tuple[int, ...]]]:
    """Restriction of the braid dissection to one cube face, axis dropped.

    Collects, for every simplex, the vertices lying on the face
    ``x[axis] == side`` and keeps the full (n-1)-dimensional restrictions
    (n vertices).  Coordinates are projected by deleting ``axis``, which is
    the single-coordinate translation matching of opposing faces: the sets
    for side 0 and side 1 must be equal.
    """
    out: set[frozenset[tuple[int, ...]]] = set()
    for sigma in braid_simplices(n):
        verts = simplex_vertices(sigma)
        on_face = verts[verts[:, axis] == side]
        if on_face.shape[0] == n:
            projected = np.delete(on_face, axis, axis=1)
            out.add(frozenset(tuple(int(v) for v in row) for row in projected))
    return out


@lru_cache(maxsize=32)
def _perm_table(n: int) -> dict[tuple[int, ...], int]:
    return {p: i for i, p in enumerate(itertools.permutations(range(n)))}


def permutation_rank(sigma: tuple[int, ...]) -> int:
    """Lexicographic rank of a permutation among all of its length."""
    return _perm_table(len(sigma))[tuple(sigma)]


def permutation_rank_batch(sigmas: np.ndarray) -> np.ndarray:
    """Lexicographic ranks for an array of permutations, shape (P, n)."""
    P, n = sigmas.shape
    ranks = np.zeros(P, dtype=np.int64)
    for j in range(n - 1):
        smaller_later = np.zeros(P, dtype=np.int64)
        for k in range(j + 1, n):
            smaller_later += sigmas[:, k] < sigmas[:, j]
        ranks += smaller_later * math.factorial(n - 1 - j)
    return ranks


def locate_batch(X: np.ndarray, grid: EtaGrid, slack: float = 1e-9) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized location of many points.

    Returns (cells, perm_ranks, t): integer cells (P, n), lexicographic
    permutation ranks (P,), and normalized coordinates (P, n).  Applies the
    same face tie-break (lower cell, exact integers only) and boundary slack
    as the scalar ``locate_cell``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != grid.dimension:
        raise OutsideDomain("batch must have shape (P, n)")
    c = (X - grid.anchor) / grid.eta
    counts = np.asarray(grid.axis_counts)
    if (c < -1.0 - slack).any() or (c > counts + slack).any():
        bad = np.where((c < -1.0 - slack).any(axis=1) | (c > counts + slack).any(axis=1))[0]
        raise OutsideDomain(f"{bad.size} points leave the hypercube union (first: {X[bad[0]].tolist()})")
    cells = np.floor(c).astype(np.int64)
    cells[c == cells] -= 1  # face points take the lower cell
    np.clip(cells, -1, counts - 1, out=cells)
    t = c - cells
    sigmas = np.argsort(t, axis=1, kind="stable")
    return cells, permutation_rank_batch(sigmas), t
