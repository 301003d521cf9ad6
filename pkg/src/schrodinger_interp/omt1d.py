"""
Exact optimal transport on the line.

The quadratic-cost optimal map is the monotone rearrangement
``T = F1^{-1} o F0`` and McCann's interpolant at time ``t`` has quantile
function ``(1 - t) F0^{-1} + t F1^{-1}``. CDFs are piecewise linear between
cell boundaries (piecewise-constant densities), so quantile functions are
piecewise linear too and everything below is exact up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, MassVector, normalize

QUANTILE_OVERSAMPLING = 16


def _require_1d(m: MassVector, name: str = "mass vector"):
    if m.grid.dim != 1:
        raise ValueError(f"{name} must be one-dimensional (got dim={m.grid.dim})")


def edges(grid: Grid) -> np.ndarray:
    """Cell boundaries of a 1D grid."""
    n = grid.points_per_axis[0]
    return grid.lower[0] + grid.spacing[0] * np.arange(n + 1)


def _boundary_cdf(m: MassVector) -> np.ndarray:
    c = np.concatenate(([0.0], np.cumsum(m.mass)))
    c /= c[-1]
    return c


def cdf(m: MassVector) -> np.ndarray:
    """CDF at the right boundary of every cell (last entry is 1)."""
    _require_1d(m)
    return _boundary_cdf(m)[1:]


def cdf_at(m: MassVector, x) -> np.ndarray:
    """Piecewise-linear CDF evaluated at arbitrary points."""
    _require_1d(m)
    return np.interp(x, edges(m.grid), _boundary_cdf(m))


def _quantile(C: np.ndarray, e: np.ndarray, u, right: bool = False) -> np.ndarray:
    """Piecewise-linear inverse of the boundary CDF ``C`` over edges ``e``.

    ``right=False`` is the leftmost ``x`` with ``C(x) >= u`` (flat stretches
    resolve to their left end); ``right=True`` the rightmost.
    """
    u = np.asarray(u, dtype=float)
    k = np.clip(np.searchsorted(C, u, side="right" if right else "left"), 1, C.size - 1)
    c0, c1 = C[k - 1], C[k]
    span = c1 - c0
    default = 0.0 if right else 1.0
    frac = np.divide(u - c0, span, out=np.full(u.shape, default), where=span > 0)
    x = e[k - 1] + np.clip(frac, 0.0, 1.0) * (e[k] - e[k - 1])
    if not right:
        first = max(int(np.argmax(C > 0)) - 1, 0)
        x = np.where(u <= 0, e[first], x)
    return x


def quantile(m: MassVector, u) -> np.ndarray:
    """Inverse CDF (lower-semicontinuous convention) at levels ``u`` in [0, 1]."""
    _require_1d(m)
    return _quantile(_boundary_cdf(m), edges(m.grid), u)


@dataclass(frozen=True)
class TransportMap1D:
    """Monotone map sampled at the source cell centers (``map_values``) and boundaries."""

    grid: Grid
    target_grid: Grid
    map_values: np.ndarray
    boundary_values: np.ndarray
    source_cdf: np.ndarray
    target_cdf: np.ndarray
    degenerate: bool = False

    def __call__(self, x) -> np.ndarray:
        """Evaluate the map anywhere in the source box."""
        u = np.interp(x, edges(self.grid), self.source_cdf)
        return _quantile(self.target_cdf, edges(self.target_grid), u)


def optimal_map(rho0: MassVector, rho1: MassVector) -> TransportMap1D:
    """``T(x) = F1^{-1}(F0(x))`` on the cell centers and boundaries of ``rho0``'s grid.

    A target concentrated in a single cell gives a constant map; it is
    returned with ``degenerate=True``.
    """
    _require_1d(rho0, "rho0")
    _require_1d(rho1, "rho1")
    C0, C1 = _boundary_cdf(rho0), _boundary_cdf(rho1)
    e0, e1 = edges(rho0.grid), edges(rho1.grid)
    centers_cdf = 0.5 * (C0[:-1] + C0[1:])
    map_values = _quantile(C1, e1, centers_cdf)
    boundary_values = _quantile(C1, e1, C0)
    # monotone by construction; guard against rounding in the interpolation
    map_values = np.maximum.accumulate(map_values)
    boundary_values = np.maximum.accumulate(boundary_values)
    degenerate = int(np.count_nonzero(rho1.mass)) <= 1
    return TransportMap1D(rho0.grid, rho1.grid, map_values, boundary_values, C0, C1, degenerate)


def push_forward(tmap: TransportMap1D, rho0: MassVector, grid: Grid | None = None) -> MassVector:
    """Image of ``rho0`` under ``tmap``, binned onto ``grid`` (default: the target grid).

    Each source cell's mass is carried to the image of the cell, spread with
    a slope-limited linear profile (second order where the image density is
    smooth, never negative), and integrated over the output cells. Mass
    falling outside ``grid`` is dropped before renormalizing.
    """
    _require_1d(rho0, "rho0")
    grid = grid or tmap.target_grid
    e = edges(grid)
    p, q = tmap.boundary_values[:-1], tmap.boundary_values[1:]
    m = rho0.mass / rho0.total
    keep = m > 0
    p, q, m = p[keep], q[keep], m[keep]
    out = np.zeros(grid.points_per_axis[0])
    point = q <= p
    if np.any(point):
        # zero-width images are point masses
        idx = np.clip(np.searchsorted(e, p[point], side="right") - 1, 0, out.size - 1)
        np.add.at(out, idx, m[point])
        p, q, m = p[~point], q[~point], m[~point]
    if p.size:
        c = 0.5 * (p + q)
        d = m / (q - p)
        if p.size > 1:
            # slopes between neighbouring images only where they touch
            touching = np.isclose(q[:-1], p[1:], rtol=0, atol=1e-12 * max(1.0, np.abs(e).max()))
            sl = np.where(touching, np.diff(d) / np.diff(c), 0.0)
            left = np.concatenate(([0.0], sl))
            right = np.concatenate((sl, [0.0]))
        else:
            left = right = np.zeros(1)
        s = np.where(left * right > 0, np.sign(left) * np.minimum(np.abs(left), np.abs(right)), 0.0)
        s = np.sign(s) * np.minimum(np.abs(s), d / (0.5 * (q - p)))
        bp = np.unique(np.concatenate((p, q, e)))
        a, b = bp[:-1], bp[1:]
        mid = 0.5 * (a + b)
        iv = np.minimum(np.searchsorted(q, mid), p.size - 1)
        inside = (mid >= p[iv]) & (mid < q[iv]) & (mid >= e[0]) & (mid < e[-1])
        cell = np.clip(np.searchsorted(e, mid, side="right") - 1, 0, out.size - 1)
        cc = c[iv]
        seg = d[iv] * (b - a) + s[iv] * ((b - cc) ** 2 - (a - cc) ** 2) / 2
        np.add.at(out, cell[inside], seg[inside])
    if not np.any(out > 0):
        raise ValueError("pushed-forward mass falls entirely outside the output grid")
    return normalize(MassVector(grid, out))


def _levels(C0: np.ndarray, C1: np.ndarray, n: int) -> np.ndarray:
    # every kink of both quantile functions plus a uniform partition
    part = np.linspace(0.0, 1.0, QUANTILE_OVERSAMPLING * n + 1)
    return np.unique(np.concatenate((part, C0, C1)))


def interpolated_quantile(rho0: MassVector, rho1: MassVector, t: float, u) -> np.ndarray:
    """``(1 - t) F0^{-1}(u) + t F1^{-1}(u)``."""
    return (1.0 - t) * quantile(rho0, u) + t * quantile(rho1, u)


def displacement_marginal(rho0: MassVector, rho1: MassVector, t: float, grid: Grid | None = None) -> MassVector:
    """McCann interpolant at time ``t`` as a mass vector on ``grid`` (default: rho0's grid).

    Built in quantile space: the interpolated quantile function is exact on
    a level set containing every kink of both inputs, inverted to a CDF at
    the output cell boundaries and differenced.
    """
    _require_1d(rho0, "rho0")
    _require_1d(rho1, "rho1")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    grid = grid or rho0.grid
    C0, C1 = _boundary_cdf(rho0), _boundary_cdf(rho1)
    e0, e1 = edges(rho0.grid), edges(rho1.grid)
    u = _levels(C0, C1, grid.points_per_axis[0])
    q_left = (1.0 - t) * _quantile(C0, e0, u) + t * _quantile(C1, e1, u)
    q_right = (1.0 - t) * _quantile(C0, e0, u, right=True) + t * _quantile(C1, e1, u, right=True)
    # graph of the interpolant's CDF: jumps of the quantile become flat stretches
    xp = np.maximum.accumulate(np.column_stack((q_left, q_right)).ravel())
    fp = np.repeat(u, 2)
    F = np.interp(edges(grid), xp, fp)
    mass = np.clip(np.diff(F), 0.0, None)
    if not np.any(mass > 0):
        raise ValueError("interpolant falls entirely outside the output grid")
    return normalize(MassVector(grid, mass))


def wasserstein2(a: MassVector, b: MassVector) -> float:
    """W2 distance between two 1D mass vectors, integrated exactly in quantile space."""
    _require_1d(a, "a")
    _require_1d(b, "b")
    Ca, Cb = _boundary_cdf(a), _boundary_cdf(b)
    u = np.unique(np.concatenate(([0.0, 1.0], Ca, Cb)))
    # the quantile difference is linear between consecutive levels, so two-point
    # Gauss-Legendre (interior nodes, no jump ambiguity) integrates its square exactly
    du = np.diff(u)
    mid = 0.5 * (u[:-1] + u[1:])
    off = du / (2.0 * np.sqrt(3.0))
    total = 0.0
    for node in (mid - off, mid + off):
        d = quantile(a, node) - quantile(b, node)
        total += float(np.sum(0.5 * du * d * d))
    return float(np.sqrt(total))
