"""
Fixed-point solver for the discrete Schrödinger system.

With ``rho0, rho1`` per-cell masses and ``K`` the transition kernel, the
unknowns satisfy

    phi0 = K phi1,   phihat1 = K^T phihat0,
    rho0 = phi0 * phihat0,   rho1 = phi1 * phihat1.

The solver iterates the composed map

    phihat1 -> phi1 = rho1 / phihat1 -> phi0 = K phi1
            -> phihat0 = rho0 / phi0 -> K^T phihat0

which is a strict contraction in the Hilbert metric, and stops when two
successive iterates are closer than ``tol`` in that metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math

import numpy as np
from scipy.special import logsumexp

from .grid import MassVector
from .hilbert import HilbertDiagnostics, diagnostics_from_log_bounds, hilbert_distance_log
from .kernel import LOG_ZERO, KernelMatrix, KernelOverflow, exp_from_log, log_or_sentinel

log = logging.getLogger(__name__)

LOG_MODE_SQRT_EPS = 0.05


class SolverError(RuntimeError):
    pass


class NumericalFailure(SolverError):
    """NaN/inf in the iteration; ``advice`` says which mode to try."""

    def __init__(self, msg, advice=""):
        super().__init__(f"{msg}. {advice}".strip())
        self.advice = advice


class NotConverged(SolverError):
    """Iteration budget exhausted; the partial result is attached."""

    def __init__(self, potentials, report):
        super().__init__(
            f"no convergence after {report.iterations} iterations "
            f"(last Hilbert distance {report.last_distance:.3e}, tol {report.tol:.1e})"
        )
        self.potentials = potentials
        self.report = report


@dataclass
class Potentials:
    """Solution of the discrete Schrödinger system.

    Log arrays are authoritative; linear arrays are their exponentials and may
    under/overflow for very small epsilon. Zero-mass cells carry exact zeros
    (``LOG_ZERO`` in the logs) in ``phi1`` and ``phihat0``.
    """

    rho0: MassVector
    rho1: MassVector
    log_phi0: np.ndarray
    log_phihat0: np.ndarray
    log_phi1: np.ndarray
    log_phihat1: np.ndarray
    mode: str = "linear"
    converged: bool = True

    @property
    def phi0(self):
        return exp_from_log(self.log_phi0)

    @property
    def phihat0(self):
        return exp_from_log(self.log_phihat0)

    @property
    def phi1(self):
        return exp_from_log(self.log_phi1)

    @property
    def phihat1(self):
        return exp_from_log(self.log_phihat1)

    def rescaled(self, c: float) -> "Potentials":
        """Multiply the phis by ``c`` and divide the phihats by it (same solution)."""
        lc = math.log(c)

        def shift(lv, s):
            return np.where(lv <= LOG_ZERO, LOG_ZERO, lv + s)

        return Potentials(
            self.rho0, self.rho1,
            shift(self.log_phi0, lc), shift(self.log_phihat0, -lc),
            shift(self.log_phi1, lc), shift(self.log_phihat1, -lc),
            self.mode, self.converged,
        )


@dataclass
class SolverReport:
    iterations: int
    hilbert_distances: list[float]
    theoretical_bound: float
    log_theoretical_bound: float
    diagnostics: HilbertDiagnostics
    lam: float
    marginal_residual_0: float
    marginal_residual_1: float
    mode: str
    converged: bool
    tol: float
    max_iter: int
    notes: list[str] = field(default_factory=list)

    @property
    def last_distance(self) -> float:
        return self.hilbert_distances[-1] if self.hilbert_distances else math.nan

    @property
    def contraction_ratios(self) -> np.ndarray:
        d = np.asarray(self.hilbert_distances)
        with np.errstate(divide="ignore", invalid="ignore"):
            return d[1:] / d[:-1]

    def iteration_budget(self) -> float:
        """Iterations the a-priori bound allows to get from the first distance to ``tol``."""
        if not self.hilbert_distances:
            return 0.0
        return self.diagnostics.iteration_budget(self.hilbert_distances[0], self.tol)

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "converged": self.converged,
            "iterations": self.iterations,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "lambda": self.lam,
            "marginal_residual_0": self.marginal_residual_0,
            "marginal_residual_1": self.marginal_residual_1,
            "kernel_alpha": self.diagnostics.alpha,
            "kernel_beta": self.diagnostics.beta,
            "log_beta_over_alpha": self.diagnostics.log_ratio,
            "diameter_bound": self.diagnostics.diameter_bound,
            "theoretical_bound": self.theoretical_bound,
            "log_theoretical_bound": self.log_theoretical_bound,
            "max_contraction_ratio": float(np.max(self.contraction_ratios))
            if len(self.hilbert_distances) > 1 else math.nan,
            "last_hilbert_distance": self.last_distance,
        }


@dataclass
class Coupling:
    """Entropic coupling ``joint[j, k] = phihat0[j] q[j, k] phi1[k]``."""

    joint: np.ndarray
    product_factor_source: np.ndarray
    product_factor_target: np.ndarray

    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        return self.joint.sum(axis=1), self.joint.sum(axis=0)


def _div(num, den):
    out = np.zeros_like(num, dtype=float)
    pos = num > 0
    out[pos] = num[pos] / den[pos]
    return out


def _log_div(lnum, lden):
    return np.where(lnum <= LOG_ZERO, LOG_ZERO, lnum - lden)


def _check_marginals(rho0: MassVector, rho1: MassVector, K: KernelMatrix):
    if rho0.mass.size != K.source_grid.size:
        raise ValueError(f"rho0 has {rho0.mass.size} cells, kernel source grid {K.source_grid.size}")
    if rho1.mass.size != K.target_grid.size:
        raise ValueError(f"rho1 has {rho1.mass.size} cells, kernel target grid {K.target_grid.size}")


def iterate_once(phihat1, K: KernelMatrix, rho0: MassVector, rho1: MassVector) -> np.ndarray:
    """One application of the composed map in the linear domain (unnormalized)."""
    phihat1 = np.asarray(phihat1, dtype=float)
    if np.any(~(phihat1 > 0)) or not np.all(np.isfinite(phihat1)):
        raise ValueError("phihat1 must be finite and strictly positive")
    phi1 = _div(rho1.mass, phihat1)
    phi0 = K.apply(phi1)
    phihat0 = _div(rho0.mass, phi0)
    return K.apply_adjoint(phihat0)


def iterate_once_log(log_phihat1, K: KernelMatrix, rho0: MassVector, rho1: MassVector) -> np.ndarray:
    """Log-domain counterpart of :func:`iterate_once`."""
    lg = np.asarray(log_phihat1, dtype=float)
    if not np.all(np.isfinite(lg)):
        raise ValueError("log phihat1 must be finite")
    lphi1 = _log_div(log_or_sentinel(rho1.mass), lg)
    lphi0 = K.apply_log(lphi1)
    lphihat0 = _log_div(log_or_sentinel(rho0.mass), lphi0)
    return K.apply_adjoint_log(lphihat0)


class _AbsorbedLogStep:
    """Log-domain composed map for dense kernels with the shifts absorbed into the kernel.

    Instead of shifting every row by its own maximum, the current potentials
    ``a`` (phi0 side) and ``b`` (phi1 side) are folded into a linear matrix
    ``exp(L + a_j + b_k)``, which is row-stochastic at absorption time. Each
    step then needs two matrix-vector products on vectors whose entries stay
    within ``exp(+-ABSORB_LIMIT)``; the shifts are re-absorbed when they
    drift further, and a step falls back to log-sum-exp if anything
    underflows.
    """

    ABSORB_LIMIT = 50.0
    SAFE_MIN = 1e-280

    def __init__(self, K: KernelMatrix, rho0: MassVector, rho1: MassVector):
        self.K = K
        self.rho0, self.rho1 = rho0, rho1
        self.lrho0 = np.where(rho0.mass > 0, np.log(np.where(rho0.mass > 0, rho0.mass, 1.0)), -np.inf)
        self.lrho1 = np.where(rho1.mass > 0, np.log(np.where(rho1.mass > 0, rho1.mass, 1.0)), -np.inf)
        self.active1 = rho1.mass > 0
        self.active0 = rho0.mass > 0
        self.absorptions = 0
        self.fallbacks = 0
        self._ref = None

    def _absorb(self, lphi1):
        L = self.K.log_entries
        a = -self.K.apply_log(lphi1)
        M = L + a[:, None]
        b = lphi1.copy()
        # columns without target mass: scale so their largest entry is 1
        idle = ~self.active1
        if np.any(idle):
            b[idle] = -M[:, idle].max(axis=0)
        with np.errstate(under="ignore"):
            self._ref = (a, b, np.exp(M + b[None, :]))
        self.absorptions += 1

    def _try(self, lphi1):
        a, b, Q = self._ref
        with np.errstate(under="ignore", divide="ignore"):
            s0 = Q @ np.exp(np.where(self.active1, lphi1 - b, -np.inf))
            if not np.all(s0[self.active0] > self.SAFE_MIN):
                return None
            lphi0 = np.log(np.where(self.active0, s0, 1.0)) - a
            w = np.exp(np.where(self.active0, self.lrho0 - lphi0 - a, -np.inf))
            s1 = w @ Q
        if not np.all(s1 > self.SAFE_MIN) or not np.all(np.isfinite(s1)):
            return None
        return np.log(s1) - b

    def __call__(self, lg):
        lphi1 = np.where(self.active1, self.lrho1 - lg, -np.inf)
        drift = np.max(np.abs(lphi1[self.active1] - self._ref[1][self.active1])) if self._ref else np.inf
        if drift > self.ABSORB_LIMIT:
            self._absorb(lphi1)
        out = self._try(lphi1)
        if out is None:
            self._absorb(lphi1)
            out = self._try(lphi1)
        if out is None:
            self.fallbacks += 1
            return iterate_once_log(lg, self.K, self.rho0, self.rho1)
        return out


def _log_l2(lv):
    return 0.5 * float(logsumexp(2.0 * lv))


def _run(rho0, rho1, K, tol, max_iter, mode, init):
    """Core loop; returns (log g, log C(g), distances, converged)."""
    if mode == "linear":
        g = np.ones(K.target_grid.size) if init is None else np.asarray(init, dtype=float).copy()
        g = g / np.linalg.norm(g)
        step = lambda v: iterate_once(v, K, rho0, rho1)  # noqa: E731
        to_log = np.log
    else:
        lg = np.zeros(K.target_grid.size) if init is None else np.log(np.asarray(init, dtype=float))
        g = lg - lg.max()
        if K.separable:
            step = lambda v: iterate_once_log(v, K, rho0, rho1)  # noqa: E731
        else:
            step = _AbsorbedLogStep(K, rho0, rho1)
        to_log = lambda v: v  # noqa: E731
    distances = []
    converged = False
    Cg = g
    for _ in range(max_iter):
        with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
            Cg = step(g)
            lCg, lg_ = to_log(Cg), to_log(g)
        if not (np.all(np.isfinite(lCg)) and np.all(np.isfinite(lg_))):
            raise NumericalFailure(
                f"non-finite iterate in {mode} mode after {len(distances)} iterations",
                "Use mode='log'." if mode == "linear" else "Refine the grid or enlarge epsilon.",
            )
        d = hilbert_distance_log(lCg, lg_)
        distances.append(d)
        if d < tol:
            converged = True
            break
        if mode == "linear":
            g = Cg / np.linalg.norm(Cg)
        else:
            g = Cg - Cg.max()
    if mode == "linear":
        return np.log(g), np.log(Cg), distances, converged
    return g, Cg, distances, converged


def _assemble(rho0, rho1, K, lg, mode):
    """Potentials from the final iterate ``g`` = phihat1 direction, scaled so ``||g||_2 = 1``."""
    lg = lg - _log_l2(lg)
    lrho0, lrho1 = log_or_sentinel(rho0.mass), log_or_sentinel(rho1.mass)
    lphi1 = _log_div(lrho1, lg)
    if mode == "linear":
        phi0 = K.apply(exp_from_log(lphi1))
        lphi0 = np.log(phi0)
        lphihat0 = _log_div(lrho0, lphi0)
        lphihat1 = np.log(K.apply_adjoint(exp_from_log(lphihat0)))
    else:
        lphi0 = K.apply_log(lphi1)
        lphihat0 = _log_div(lrho0, lphi0)
        lphihat1 = K.apply_adjoint_log(lphihat0)
    return Potentials(rho0, rho1, lphi0, lphihat0, lphi1, lphihat1, mode)


def marginal_residuals(p: Potentials, K: KernelMatrix, rho0=None, rho1=None) -> tuple[float, float]:
    """L1 norms of ``phihat0 * (K phi1) - rho0`` and ``phi1 * (K^T phihat0) - rho1``.

    Evaluated in the log domain, so it also works for potentials whose
    linear values overflow.
    """
    rho0 = p.rho0 if rho0 is None else rho0
    rho1 = p.rho1 if rho1 is None else rho1
    lKphi1 = K.apply_log(p.log_phi1)
    lKtphihat0 = K.apply_adjoint_log(p.log_phihat0)
    m0 = exp_from_log(np.where(p.log_phihat0 <= LOG_ZERO, LOG_ZERO, p.log_phihat0 + lKphi1))
    m1 = exp_from_log(np.where(p.log_phi1 <= LOG_ZERO, LOG_ZERO, p.log_phi1 + lKtphihat0))
    return float(np.abs(m0 - rho0.mass).sum()), float(np.abs(m1 - rho1.mass).sum())


def choose_mode(K: KernelMatrix, mode: str = "auto") -> str:
    if mode in ("linear", "log"):
        return mode
    if mode != "auto":
        raise ValueError(f"unknown mode {mode!r}")
    if K.epsilon is not None and math.sqrt(K.epsilon) < LOG_MODE_SQRT_EPS:
        return "log"
    return "linear"


def solve(
    rho0: MassVector,
    rho1: MassVector,
    K: KernelMatrix,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    mode: str = "auto",
    init=None,
) -> tuple[Potentials, SolverReport]:
    """Solve the discrete Schrödinger system by fixed-point iteration.

    ``init`` is an optional strictly positive starting ``phihat1`` (default
    all ones). In ``auto`` mode the log domain is used for small epsilon or
    when the linear path over/underflows.

    Raises :class:`NotConverged` (with the partial result attached) when
    ``max_iter`` is exhausted, and :class:`NumericalFailure` on NaN/inf.
    """
    _check_marginals(rho0, rho1, K)
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    for name, r in (("rho0", rho0), ("rho1", rho1)):
        if abs(r.total - 1.0) > 1e-9:
            raise ValueError(f"{name} must be normalized (total mass {r.total!r})")
    if init is not None:
        init = np.asarray(init, dtype=float).ravel()
        if init.size != K.target_grid.size or np.any(~(init > 0)) or not np.all(np.isfinite(init)):
            raise ValueError("init must be a finite, strictly positive vector on the target grid")

    chosen = choose_mode(K, mode)
    notes = []
    try:
        lg, lCg, distances, converged = _run(rho0, rho1, K, tol, max_iter, chosen, init)
    except (KernelOverflow, NumericalFailure) as exc:
        if mode != "auto" or chosen == "log":
            if isinstance(exc, NumericalFailure):
                raise
            raise NumericalFailure(str(exc), "Use mode='log'.") from exc
        log.info("linear mode failed (%s); retrying in the log domain", exc)
        notes.append(f"linear mode failed: {exc}; switched to log mode")
        chosen = "log"
        lg, lCg, distances, converged = _run(rho0, rho1, K, tol, max_iter, chosen, init)

    lam = math.exp(_log_l2(lCg) - _log_l2(lg))
    try:
        p = _assemble(rho0, rho1, K, lg, chosen)
    except KernelOverflow:
        p = _assemble(rho0, rho1, K, lg, "log")
    r0, r1 = marginal_residuals(p, K)
    diag = diagnostics_from_log_bounds(K.log_alpha, K.log_beta)
    report = SolverReport(
        iterations=len(distances),
        hilbert_distances=distances,
        theoretical_bound=diag.contraction_bound,
        log_theoretical_bound=diag.log_contraction_bound,
        diagnostics=diag,
        lam=lam,
        marginal_residual_0=r0,
        marginal_residual_1=r1,
        mode=chosen,
        converged=converged,
        tol=tol,
        max_iter=max_iter,
        notes=notes,
    )
    if not converged:
        p.converged = False
        raise NotConverged(p, report)
    return p, report


def coupling(p: Potentials, K: KernelMatrix, max_residual: float = 1e-6) -> Coupling:
    """Joint distribution of the bridge endpoints.

    Raises :class:`SolverError` if the potentials do not reproduce the
    marginals to within ``max_residual`` (L1).
    """
    r0, r1 = marginal_residuals(p, K)
    if max(r0, r1) > max_residual:
        raise SolverError(f"potentials are not converged (residuals {r0:.2e}, {r1:.2e})")
    L = K.log_entries
    lj = L + np.where(p.log_phihat0 <= LOG_ZERO, -np.inf, p.log_phihat0)[:, None]
    lj = lj + np.where(p.log_phi1 <= LOG_ZERO, -np.inf, p.log_phi1)[None, :]
    joint = np.exp(lj)
    return Coupling(joint, p.phihat0, p.phi1)
