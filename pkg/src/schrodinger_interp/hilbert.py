"""Hilbert projective distance on the positive orthant and Birkhoff contraction bounds."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

POSITIVITY_FLOOR = 1e-300


def _check_log_pair(lx: np.ndarray, ly: np.ndarray):
    if lx.shape != ly.shape:
        raise ValueError(f"length mismatch: {lx.shape} vs {ly.shape}")
    if lx.size == 0:
        raise ValueError("empty vectors")
    if not (np.all(np.isfinite(lx)) and np.all(np.isfinite(ly))):
        raise ValueError("log vectors must be finite")


def hilbert_distance(x, y) -> float:
    """``log(max(x/y) / min(x/y))`` for strictly positive vectors.

    Evaluated on logs so that entries spanning hundreds of decades do not
    overflow the ratio.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    for name, v in (("x", x), ("y", y)):
        bad = np.flatnonzero(~(v >= POSITIVITY_FLOOR))
        if bad.size:
            raise ValueError(f"{name}[{int(bad[0])}] = {v[bad[0]]} is not strictly positive")
    return hilbert_distance_log(np.log(x), np.log(y))


def hilbert_distance_log(log_x, log_y) -> float:
    """Hilbert distance between ``exp(log_x)`` and ``exp(log_y)``."""
    lx = np.asarray(log_x, dtype=float).ravel()
    ly = np.asarray(log_y, dtype=float).ravel()
    _check_log_pair(lx, ly)
    diff = lx - ly
    return float(diff.max() - diff.min())


def birkhoff_ratio(diameter: float) -> float:
    """Contraction ratio ``tanh(diameter / 4)`` of a positive linear map."""
    if math.isnan(diameter) or diameter < 0:
        raise ValueError(f"projective diameter must be >= 0, got {diameter}")
    if math.isinf(diameter):
        return 1.0
    return math.tanh(diameter / 4.0)


def log_tanh(u: float) -> float:
    """``log(tanh(u))`` for ``u > 0``, accurate when tanh(u) rounds to 1."""
    if u <= 0:
        raise ValueError("u must be positive")
    if u < 1.0:
        return math.log(math.tanh(u))
    e = math.exp(-2.0 * u)
    return math.log1p(-e) - math.log1p(e)


@dataclass(frozen=True)
class HilbertDiagnostics:
    """A-priori contraction data for the composed fixed-point map.

    ``log_contraction_bound`` keeps precision when ``contraction_bound``
    rounds to 1.0 (kernels with a huge dynamic range).
    """

    alpha: float
    beta: float
    log_ratio: float
    diameter_bound: float
    contraction_bound: float
    log_contraction_bound: float

    def iteration_budget(self, d0: float, tol: float) -> float:
        """Iterations the bound allows for a distance ``d0`` to fall below ``tol``."""
        if d0 <= tol:
            return 0.0
        if self.log_contraction_bound == -math.inf:
            return 1.0
        if self.log_contraction_bound >= 0:
            return math.inf
        return math.ceil(math.log(tol / d0) / self.log_contraction_bound)


def diagnostics_from_log_bounds(log_alpha: float, log_beta: float) -> HilbertDiagnostics:
    """Same as :func:`diagnostics_from_bounds` with the bounds given as logs."""
    if not (math.isfinite(log_alpha) and math.isfinite(log_beta)):
        raise ValueError("kernel bounds must be finite and positive")
    if log_beta < log_alpha:
        raise ValueError(f"beta must be >= alpha (log beta={log_beta}, log alpha={log_alpha})")
    log_ratio = log_beta - log_alpha
    if log_ratio == 0:
        bound, log_bound = 0.0, -math.inf
    else:
        # the exact value is < 1 even when tanh**2 rounds to 1.0
        bound = min(math.tanh(0.5 * log_ratio) ** 2, math.nextafter(1.0, 0.0))
        log_bound = 2.0 * log_tanh(0.5 * log_ratio)
    return HilbertDiagnostics(
        alpha=math.exp(log_alpha),
        beta=math.exp(log_beta),
        log_ratio=log_ratio,
        diameter_bound=2.0 * log_ratio,
        contraction_bound=bound,
        log_contraction_bound=log_bound,
    )


def diagnostics_from_bounds(alpha: float, beta: float) -> HilbertDiagnostics:
    """Diameter ``2 log(beta/alpha)`` and contraction bound ``tanh(log(beta/alpha)/2)**2``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not beta >= alpha or math.isinf(beta):
        raise ValueError(f"need alpha <= beta < inf, got alpha={alpha}, beta={beta}")
    return diagnostics_from_log_bounds(math.log(alpha), math.log(beta))
