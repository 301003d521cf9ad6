"""
Intermediate marginals of the entropic bridge.

For ``0 < t < 1`` the time-``t`` marginal factors as ``phi_t * phihat_t`` with

    phi_t(z)    = sum_k q_{1-t}(z, y_k) phi1_k        (a function of z)
    phihat_t(z) = vol * sum_j phihat0_j q_t(x_j, z)   (a mass per cell)

so their product is directly a mass vector. Chapman-Kolmogorov makes the
total exactly one in the continuum; on a grid it is one up to quadrature
error, which is reported as ``mass_drift``.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
import warnings

import numpy as np

from .grid import Grid, MassVector
from .kernel import LOG_ZERO, KernelMatrix, exp_from_log, heat_kernel
from .solver import Potentials

DURATION_FLOOR = 1e-12
DRIFT_WARN = 1e-8


class MassDriftWarning(RuntimeWarning):
    pass


@dataclass
class InterpolantFrame:
    t: float
    marginal: MassVector
    log_phi_t: np.ndarray
    log_phihat_t: np.ndarray
    mass_drift: float
    renormalized: bool

    @property
    def phi_t(self):
        return exp_from_log(self.log_phi_t)

    @property
    def phihat_t(self):
        return exp_from_log(self.log_phihat_t)


class _KernelCache:
    def __init__(self, epsilon: float, separable: bool):
        self.epsilon = epsilon
        self.separable = separable
        self._store: dict = {}

    def get(self, source: Grid, target: Grid, duration: float) -> KernelMatrix:
        key = (id(source), id(target), duration)
        if key not in self._store:
            self._store[key] = heat_kernel(source, target, duration, self.epsilon, separable=self.separable)
        return self._store[key]


def _shift(lv, s):
    return np.where(lv <= LOG_ZERO, LOG_ZERO, lv + s)


def _frame(p: Potentials, t: float, grid: Grid, cache: _KernelCache) -> InterpolantFrame:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if not p.converged:
        raise ValueError("potentials come from an unconverged solve")
    src, tgt = p.rho0.grid, p.rho1.grid
    lvol = math.log(grid.cell_volume)
    if t < DURATION_FLOOR:
        if not grid.same_as(src):
            raise ValueError("t = 0 frame is only available on the source grid")
        # endpoints are returned exactly, not re-multiplied
        return InterpolantFrame(t, p.rho0, p.log_phi0, p.log_phihat0, 0.0, False)
    if 1.0 - t < DURATION_FLOOR:
        if not grid.same_as(tgt):
            raise ValueError("t = 1 frame is only available on the target grid")
        # continuous limits of the formulas above
        lphi, lphihat = _shift(p.log_phi1, -lvol), _shift(p.log_phihat1, lvol)
        return InterpolantFrame(t, p.rho1, lphi, lphihat, 0.0, False)
    lphi = cache.get(grid, tgt, 1.0 - t).apply_log(p.log_phi1)
    lphihat = cache.get(src, grid, t).apply_adjoint_log(p.log_phihat0) + lvol
    lm = np.where((lphi <= LOG_ZERO) | (lphihat <= LOG_ZERO), LOG_ZERO, lphi + lphihat)
    mass = exp_from_log(lm)
    total = float(mass.sum())
    drift = abs(total - 1.0)
    renormalized = False
    if drift > DRIFT_WARN:
        warnings.warn(
            f"interpolant at t={t:g} has total mass {total:.12g}; renormalizing "
            "(quadrature error, or mass diffusing past the grid edge)",
            MassDriftWarning,
            stacklevel=3,
        )
        mass = mass / total
        renormalized = True
    return InterpolantFrame(t, MassVector(grid, mass), lphi, lphihat, drift, renormalized)


def entropic_marginal(
    p: Potentials,
    epsilon: float,
    t: float,
    grid: Grid | None = None,
    separable: bool = False,
) -> InterpolantFrame:
    """Marginal of the entropic bridge at time ``t`` (on ``grid``, default the source grid).

    ``epsilon`` must be the diffusivity the potentials were solved with.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return _frame(p, float(t), grid or p.rho0.grid, _KernelCache(epsilon, separable))


def entropic_path(
    p: Potentials,
    epsilon: float,
    times,
    grid: Grid | None = None,
    separable: bool = False,
) -> list[InterpolantFrame]:
    """Frames at every time in ``times``, building each kernel duration only once."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    cache = _KernelCache(epsilon, separable)
    grid = grid or p.rho0.grid
    return [_frame(p, float(t), grid, cache) for t in times]


def entropy(m: MassVector) -> float:
    """Differential entropy ``-sum m log(m / vol)`` of the piecewise-constant density."""
    w = m.mass / m.total
    pos = w > 0
    return float(-np.sum(w[pos] * np.log(w[pos] / m.grid.cell_volume)))
