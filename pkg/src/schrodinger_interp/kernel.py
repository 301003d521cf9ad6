"""
Gaussian transition kernels between grids.

A :class:`KernelMatrix` holds ``log q(x_j, y_k)`` for source points ``x_j``
and target points ``y_k``. ``apply`` maps a vector on the target grid to the
source grid (``out[j] = sum_k q[j, k] v[k]``); ``apply_adjoint`` goes the
other way. Vectors fed to the kernel are per-cell masses, so no quadrature
weight is folded in.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from ._lse import lse_rows
from .grid import Grid

LOG_ZERO = -10000.0


class KernelOverflow(FloatingPointError):
    """Linear-domain kernel application left the float range; use the log path."""


def log_or_sentinel(v) -> np.ndarray:
    """Entry-wise log with zeros mapped to the ``LOG_ZERO`` sentinel."""
    v = np.asarray(v, dtype=float)
    out = np.full(v.shape, LOG_ZERO)
    pos = v > 0
    out[pos] = np.log(v[pos])
    return out


def exp_from_log(lv) -> np.ndarray:
    """Inverse of :func:`log_or_sentinel`; sentinel entries come back as exact zeros."""
    lv = np.asarray(lv, dtype=float)
    out = np.exp(lv)
    out[lv <= LOG_ZERO] = 0.0
    return out


class KernelMatrix:
    """Strictly positive transition matrix stored through its logarithm.

    Either ``log_entries`` (dense, shape ``(source.size, target.size)``) or
    ``log_factors`` (one matrix per axis; the kernel is their Kronecker
    product) is given. Both forms expose the same operations.
    """

    def __init__(
        self,
        source_grid: Grid,
        target_grid: Grid,
        log_entries: np.ndarray | None = None,
        *,
        log_factors: list[np.ndarray] | None = None,
        duration: float | None = None,
        epsilon: float | None = None,
    ):
        if (log_entries is None) == (log_factors is None):
            raise ValueError("give exactly one of log_entries and log_factors")
        if source_grid.dim != target_grid.dim:
            raise ValueError("source and target grids differ in dimension")
        self.source_grid = source_grid
        self.target_grid = target_grid
        self.duration = duration
        self.epsilon = epsilon
        self.dim = source_grid.dim
        self._dense = None
        self._factors = None
        self._lin = None
        if log_entries is not None:
            L = np.asarray(log_entries, dtype=float)
            if L.shape != (source_grid.size, target_grid.size):
                raise ValueError(f"log_entries shape {L.shape} does not match the grids")
            if not np.all(np.isfinite(L)):
                raise ValueError("kernel log-entries must be finite (strictly positive kernel)")
            L.setflags(write=False)
            self._dense = L
            self.log_alpha = float(L.min())
            self.log_beta = float(L.max())
        else:
            if len(log_factors) != self.dim:
                raise ValueError("need one factor per axis")
            fs = []
            for a, F in enumerate(log_factors):
                F = np.asarray(F, dtype=float)
                if F.shape != (source_grid.shape[a], target_grid.shape[a]):
                    raise ValueError(f"factor {a} has shape {F.shape}")
                if not np.all(np.isfinite(F)):
                    raise ValueError("kernel log-factors must be finite")
                F.setflags(write=False)
                fs.append(F)
            self._factors = fs
            self.log_alpha = float(sum(F.min() for F in fs))
            self.log_beta = float(sum(F.max() for F in fs))

    # construction helpers

    @classmethod
    def from_matrix(cls, matrix, source_grid: Grid | None = None, target_grid: Grid | None = None):
        """Wrap an arbitrary entry-wise positive matrix (mostly for tests)."""
        matrix = np.asarray(matrix, dtype=float)
        if np.any(matrix <= 0):
            raise ValueError("kernel entries must be strictly positive")
        n, m = matrix.shape
        source_grid = source_grid or Grid.line(0.0, 1.0, max(n, 2))
        target_grid = target_grid or Grid.line(0.0, 1.0, max(m, 2))
        if source_grid.size != n or target_grid.size != m:
            raise ValueError("matrix shape does not match the grids")
        return cls(source_grid, target_grid, np.log(matrix))

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    @property
    def beta(self) -> float:
        return math.exp(self.log_beta)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.source_grid.size, self.target_grid.size)

    @property
    def separable(self) -> bool:
        return self._factors is not None

    @property
    def log_entries(self) -> np.ndarray:
        """Dense log-entries (materialized from the factors if needed)."""
        if self._dense is None:
            Fy, Fx = self._factors
            ny, my = Fy.shape
            nx, mx = Fx.shape
            L = (Fy[:, None, :, None] + Fx[None, :, None, :]).reshape(ny * nx, my * mx)
            return L
        return self._dense

    def _linear(self):
        if self._lin is None:
            with np.errstate(under="ignore"):
                if self._dense is not None:
                    self._lin = np.exp(self._dense)
                else:
                    self._lin = [np.exp(F) for F in self._factors]
        return self._lin

    # linear domain

    def _check_nonneg(self, v, n):
        v = np.asarray(v, dtype=float).ravel()
        if v.size != n:
            raise ValueError(f"vector has {v.size} entries, expected {n}")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("vector must be finite and nonnegative")
        if not np.any(v > 0):
            raise ValueError("vector is identically zero")
        return v

    def _finish_linear(self, out):
        if not np.all(np.isfinite(out)) or np.any(out <= 0):
            raise KernelOverflow("kernel application over/underflowed; switch to the log domain")
        return out

    def apply(self, v) -> np.ndarray:
        """``out[j] = sum_k q[j, k] v[k]`` (target grid -> source grid)."""
        v = self._check_nonneg(v, self.target_grid.size)
        lin = self._linear()
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            if self._dense is not None:
                out = lin @ v
            else:
                Ey, Ex = lin
                V = v.reshape(self.target_grid.shape)
                out = (Ey @ V @ Ex.T).ravel()
        return self._finish_linear(out)

    def apply_adjoint(self, v) -> np.ndarray:
        """``out[k] = sum_j q[j, k] v[j]`` (source grid -> target grid)."""
        v = self._check_nonneg(v, self.source_grid.size)
        lin = self._linear()
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            if self._dense is not None:
                out = v @ lin
            else:
                Ey, Ex = lin
                V = v.reshape(self.source_grid.shape)
                out = (Ey.T @ V @ Ex).ravel()
        return self._finish_linear(out)

    # log domain

    def _lse_dense(self, L: np.ndarray, lv: np.ndarray) -> np.ndarray:
        out = np.empty(L.shape[0])
        lse_rows(L, lv, out)
        return out

    def _lse_sep(self, Fy, Fx, lV):
        # out[j1, j2] = logsumexp_{k1,k2}(Fy[j1,k1] + Fx[j2,k2] + lV[k1,k2])
        W = logsumexp(Fx[None, :, :] + lV[:, None, :], axis=2)  # (k1, j2)
        return logsumexp(Fy[:, :, None] + W[None, :, :], axis=1)  # (j1, j2)

    def _finish_log(self, lv, out):
        if np.all(np.isneginf(lv)):
            return np.full(out.shape, LOG_ZERO)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("non-finite value in log-domain kernel application")
        return out

    def _prep_log(self, log_v, n):
        lv = np.asarray(log_v, dtype=float).ravel()
        if lv.size != n:
            raise ValueError(f"vector has {lv.size} entries, expected {n}")
        if np.any(np.isnan(lv)) or np.any(lv == np.inf):
            raise ValueError("log vector contains NaN or +inf")
        # sentinel entries are exact zeros: they drop out of every sum
        return np.where(lv <= LOG_ZERO, -np.inf, lv)

    def apply_log(self, log_v) -> np.ndarray:
        """Log of :meth:`apply` evaluated with a per-row max shift.

        Entries at or below ``LOG_ZERO`` are zeros of the linear vector.
        """
        lv = self._prep_log(log_v, self.target_grid.size)
        if np.all(np.isneginf(lv)):
            return np.full(self.source_grid.size, LOG_ZERO)
        if self._dense is not None:
            out = self._lse_dense(self._dense, lv)
        else:
            Fy, Fx = self._factors
            out = self._lse_sep(Fy, Fx, lv.reshape(self.target_grid.shape)).ravel()
        return self._finish_log(lv, out)

    def apply_adjoint_log(self, log_v) -> np.ndarray:
        """Log of :meth:`apply_adjoint` evaluated with a per-column max shift."""
        lv = self._prep_log(log_v, self.source_grid.size)
        if np.all(np.isneginf(lv)):
            return np.full(self.target_grid.size, LOG_ZERO)
        if self._dense is not None:
            out = self._lse_dense(self._transposed(), lv)
        else:
            Fy, Fx = self._factors
            out = self._lse_sep(Fy.T, Fx.T, lv.reshape(self.source_grid.shape)).ravel()
        return self._finish_log(lv, out)

    def _transposed(self) -> np.ndarray:
        # contiguous transpose so the adjoint walks memory row by row
        if not hasattr(self, "_dense_T"):
            self._dense_T = np.ascontiguousarray(self._dense.T)
        return self._dense_T

    def __repr__(self):
        kind = "separable" if self.separable else "dense"
        return (
            f"KernelMatrix({kind}, shape={self.shape}, duration={self.duration}, "
            f"epsilon={self.epsilon}, log_alpha={self.log_alpha:.6g}, log_beta={self.log_beta:.6g})"
        )


def _axis_log_factor(xs: np.ndarray, ys: np.ndarray, scale: float) -> np.ndarray:
    d = xs[:, None] - ys[None, :]
    return -0.5 * math.log(2.0 * math.pi * scale) - d * d / (2.0 * scale)


def heat_kernel(
    source: Grid,
    target: Grid,
    duration: float,
    epsilon: float,
    separable: bool = False,
) -> KernelMatrix:
    """Brownian transition density with diffusivity ``epsilon`` over time ``duration``.

    ``log q = -(n/2) log(2 pi duration epsilon) - |x - y|^2 / (2 duration epsilon)``.
    With ``separable=True`` the per-axis factors are stored instead of the
    dense matrix; the Gaussian factorizes exactly, so nothing is approximated.
    """
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if source.dim != target.dim:
        raise ValueError("grids must have the same dimension")
    scale = duration * epsilon
    if separable:
        factors = [
            _axis_log_factor(source.axis_points(a), target.axis_points(a), scale)
            for a in range(source.dim)
        ]
        if source.dim == 1:
            return KernelMatrix(source, target, factors[0], duration=duration, epsilon=epsilon)
        return KernelMatrix(source, target, log_factors=factors, duration=duration, epsilon=epsilon)
    X, Y = source.points, target.points
    # squared distances summed per axis keeps exact zeros on the diagonal
    sq = np.zeros((X.shape[0], Y.shape[0]))
    for a in range(source.dim):
        d = X[:, a][:, None] - Y[:, a][None, :]
        sq += d * d
    L = -0.5 * source.dim * math.log(2.0 * math.pi * scale) - sq / (2.0 * scale)
    return KernelMatrix(source, target, L, duration=duration, epsilon=epsilon)
