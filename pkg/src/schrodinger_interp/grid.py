"""
Uniform cell-centered grids and per-cell mass vectors.

Grid point ``k`` on an axis sits at ``lower + (k + 1/2) * spacing`` and every
cell has volume ``prod(spacing)``. Measures are always stored as per-cell
masses (density times cell volume), never as density samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Axis-aligned box split into ``points_per_axis`` cells per axis.

    For 2D grids axis 0 is the row (y) axis and axis 1 is the column (x)
    axis; flattening is row-major, matching image layout.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    points_per_axis: tuple[int, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        points = tuple(int(v) for v in np.atleast_1d(self.points_per_axis))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "points_per_axis", points)
        if not (len(lower) == len(upper) == len(points)):
            raise ValueError("lower, upper and points_per_axis must have the same length")
        if len(points) not in (1, 2):
            raise ValueError(f"only 1D and 2D grids are supported, got dim={len(points)}")
        for a, (lo, hi, n) in enumerate(zip(lower, upper, points)):
            if n < 2:
                raise ValueError(f"axis {a}: need at least 2 points, got {n}")
            if not hi > lo:
                raise ValueError(f"axis {a}: upper ({hi}) must exceed lower ({lo})")

    @classmethod
    def line(cls, lower: float, upper: float, n: int) -> "Grid":
        return cls((lower,), (upper,), (n,))

    @classmethod
    def square(cls, lower: float, upper: float, n: int) -> "Grid":
        return cls((lower, lower), (upper, upper), (n, n))

    @property
    def dim(self) -> int:
        return len(self.points_per_axis)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points_per_axis

    @property
    def size(self) -> int:
        return math.prod(self.points_per_axis)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / n for lo, hi, n in zip(self.lower, self.upper, self.points_per_axis))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    def axis_points(self, axis: int) -> np.ndarray:
        n = self.points_per_axis[axis]
        return self.lower[axis] + (np.arange(n) + 0.5) * self.spacing[axis]

    @cached_property
    def points(self) -> np.ndarray:
        """Cell centers, shape ``(size, dim)``, row-major order."""
        axes = [self.axis_points(a) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def sub_grid(self, start: tuple[int, ...], stop: tuple[int, ...]) -> "Grid":
        """Grid of cells ``start[a] <= k < stop[a]`` on each axis.

        Indices may run past either end of this grid; the result keeps the
        same spacing and cell alignment.
        """
        lower, upper = [], []
        for a, (i0, i1) in enumerate(zip(start, stop)):
            h = self.spacing[a]
            lower.append(self.lower[a] + i0 * h)
            upper.append(self.lower[a] + i1 * h)
        return Grid(tuple(lower), tuple(upper), tuple(i1 - i0 for i0, i1 in zip(start, stop)))

    def same_as(self, other: "Grid", rtol: float = 1e-12) -> bool:
        if self.points_per_axis != other.points_per_axis:
            return False
        scale = max(1.0, *map(abs, self.lower + self.upper))
        return all(
            abs(a - b) <= rtol * scale
            for a, b in zip(self.lower + self.upper, other.lower + other.upper)
        )


@dataclass(frozen=True)
class MassVector:
    """Nonnegative per-cell mass on a grid (flattened row-major)."""

    grid: Grid
    mass: np.ndarray = field(repr=False)

    def __post_init__(self):
        mass = np.array(self.mass, dtype=float).ravel()
        if mass.size != self.grid.size:
            raise ValueError(f"mass has {mass.size} entries, grid has {self.grid.size}")
        if not np.all(np.isfinite(mass)):
            raise ValueError("mass contains non-finite entries")
        bad = np.flatnonzero(mass < 0)
        if bad.size:
            raise ValueError(f"negative mass at index {int(bad[0])}: {mass[bad[0]]}")
        if not np.any(mass > 0):
            raise ValueError("mass vector is identically zero")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    def density(self) -> np.ndarray:
        """Density values (mass / cell volume), shaped like the grid."""
        return (self.mass / self.grid.cell_volume).reshape(self.grid.shape)

    def __len__(self) -> int:
        return self.mass.size


def discretize(values, grid: Grid) -> MassVector:
    """Convert density samples at the cell centers of ``grid`` to cell masses.

    The result is not normalized.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size != grid.size:
        raise ValueError(f"got {values.size} samples for a grid of {grid.size} points")
    neg = np.flatnonzero(values < 0)
    if neg.size:
        raise ValueError(f"negative density sample at index {int(neg[0])}: {values[neg[0]]}")
    if not np.any(values > 0):
        raise ValueError("all density samples are zero")
    return MassVector(grid, values * grid.cell_volume)


def normalize(m: MassVector) -> MassVector:
    total = m.total
    if not total > 0:
        raise ValueError("cannot normalize a vector with zero total mass")
    out = m.mass / total
    # one correction pass keeps the sum at 1 to within a couple of ulps
    out = out / out.sum()
    return MassVector(m.grid, out)


def _shortest_windows(csum: np.ndarray, target: float) -> tuple[int, int, float]:
    """Shortest ``[i, j)`` with ``csum[j] - csum[i] >= target``; ties go to the larger mass."""
    n = csum.size - 1
    need = csum[:-1] + target
    j = np.searchsorted(csum, need - 1e-15 * max(1.0, csum[-1]), side="left")
    ok = j <= n
    if not np.any(ok):
        return -1, -1, -1.0
    i = np.arange(n)[ok]
    j = j[ok]
    lengths = j - i
    mass = csum[j] - csum[i]
    best = np.lexsort((-mass, lengths))[0]
    return int(i[best]), int(j[best]), float(mass[best])


def support_box(m: MassVector, delta: float) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Index bounds ``(start, stop)`` of the smallest box keeping mass >= (1-delta)·total.

    Exhaustive over row windows in 2D. Among boxes with the fewest cells the
    one retaining the most mass wins. With ``delta = 0`` the result is the
    bounding box of the positive cells.
    """
    if not 0 <= delta < 1:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    grid = m.grid
    arr = m.mass.reshape(grid.shape) / m.total
    if delta == 0:
        nz = np.nonzero(arr > 0)
        return tuple(int(ix.min()) for ix in nz), tuple(int(ix.max()) + 1 for ix in nz)
    target = 1.0 - delta
    if grid.dim == 1:
        i, j, _ = _shortest_windows(np.concatenate(([0.0], np.cumsum(arr))), target)
        return (i,), (j,)
    rows = np.concatenate(([0.0], np.cumsum(arr.sum(axis=1))))
    col_csum = np.vstack([np.zeros(arr.shape[1]), np.cumsum(arr, axis=0)])
    best = None
    ny = arr.shape[0]
    for r0 in range(ny):
        for r1 in range(r0 + 1, ny + 1):
            if rows[r1] - rows[r0] < target - 1e-15:
                continue
            profile = col_csum[r1] - col_csum[r0]
            c0, c1, mass = _shortest_windows(np.concatenate(([0.0], np.cumsum(profile))), target)
            if c0 < 0:
                continue
            key = ((r1 - r0) * (c1 - c0), -mass)
            if best is None or key < best[0]:
                best = (key, (r0, c0), (r1, c1))
    return best[1], best[2]


def _extract(m: MassVector, start, stop, new_grid: Grid) -> np.ndarray:
    """Copy the masses of ``m`` into ``new_grid`` (index box start..stop, may overhang)."""
    src = m.mass.reshape(m.grid.shape)
    out = np.zeros(new_grid.shape)
    dst_sl, src_sl = [], []
    for a, (i0, i1) in enumerate(zip(start, stop)):
        n = m.grid.shape[a]
        s0, s1 = max(i0, 0), min(i1, n)
        src_sl.append(slice(s0, s1))
        dst_sl.append(slice(s0 - i0, s1 - i0))
    out[tuple(dst_sl)] = src[tuple(src_sl)]
    return out.ravel()


def restrict_support(m: MassVector, delta: float) -> tuple[Grid, MassVector]:
    """Restrict ``m`` to its (1-delta)-support box and renormalize.

    A box one cell wide along an axis is widened to two cells, the minimum
    grid size.
    """
    start, stop = support_box(m, delta)
    start, stop = list(start), list(stop)
    for a in range(m.grid.dim):
        if stop[a] - start[a] < 2:
            if stop[a] < m.grid.shape[a]:
                stop[a] += 1
            else:
                start[a] -= 1
    new_grid = m.grid.sub_grid(tuple(start), tuple(stop))
    return new_grid, normalize(MassVector(new_grid, _extract(m, start, stop, new_grid)))


def bridge_domain(
    rho0: MassVector,
    rho1: MassVector,
    delta: float,
    margin: float,
    clip: bool = False,
) -> tuple[Grid, MassVector, MassVector]:
    """Common computational grid for a bridge problem.

    Takes the union of both (1-delta)-support boxes and pads it by ``margin``
    (a length, rounded up to whole cells) on every side. The pad may extend
    past the input grid, where the marginals are zero; with ``clip=True`` it
    stops at the input grid's edge instead. Both marginals are renormalized
    on the result.
    """
    if not rho0.grid.same_as(rho1.grid):
        raise ValueError("marginals must live on the same grid")
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    grid = rho0.grid
    s0, e0 = support_box(rho0, delta)
    s1, e1 = support_box(rho1, delta)
    start, stop = [], []
    for a in range(grid.dim):
        pad = int(math.ceil(margin / grid.spacing[a] - 1e-9))
        i0, i1 = min(s0[a], s1[a]) - pad, max(e0[a], e1[a]) + pad
        if clip:
            i0, i1 = max(i0, 0), min(i1, grid.shape[a])
        if i1 - i0 < 2:
            i1 = i0 + 2
        start.append(i0)
        stop.append(i1)
    new_grid = grid.sub_grid(tuple(start), tuple(stop))
    out = [
        normalize(MassVector(new_grid, _extract(r, start, stop, new_grid))) for r in (rho0, rho1)
    ]
    return new_grid, out[0], out[1]


def embed(m: MassVector, grid: Grid) -> MassVector:
    """Place ``m`` on a larger grid with the same spacing and alignment, zero-filled."""
    start = []
    for a in range(grid.dim):
        h = grid.spacing[a]
        if abs(h - m.grid.spacing[a]) > 1e-9 * h:
            raise ValueError("grids have different spacing")
        off = (m.grid.lower[a] - grid.lower[a]) / h
        if abs(off - round(off)) > 1e-6:
            raise ValueError("grids are not cell-aligned")
        start.append(-int(round(off)))
    stop = [s + n for s, n in zip(start, grid.shape)]
    return MassVector(grid, _extract(m, start, stop, grid))


def l1_distance(a: MassVector, b: MassVector) -> float:
    if not a.grid.same_as(b.grid):
        raise ValueError("l1_distance needs both vectors on the same grid")
    return float(np.abs(a.mass - b.mass).sum())
