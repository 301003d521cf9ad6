"""
Command-line front end.

Subcommands ``solve``, ``interp``, ``omt1d``, ``compare`` and ``morph`` read
two marginals (1D CSV ``x,value`` or PGM images, or a built-in fixture),
run the corresponding computation and write CSV tables, PGM frames and a
``key=value`` report into ``--out``.

Exit codes: 0 success, 2 input error, 3 non-convergence, 4 numeric failure.
"""

from __future__ import annotations

import argparse
from dataclasses import asdict, dataclass, field
import logging
import math
from pathlib import Path
import sys
import time

import numpy as np

from .fixtures import bimodal_pair, two_blob_pair
from .grid import Grid, MassVector, bridge_domain, embed, l1_distance
from .interpolation import entropic_path, entropy
from .io import (
    InputError, image_to_mass, read_csv_mass, read_pgm_mass, to_pixels, write_csv, write_pgm,
    write_report,
)
from .kernel import KernelMatrix, heat_kernel
from .omt1d import displacement_marginal, optimal_map, wasserstein2
from .solver import NotConverged, NumericalFailure, Potentials, SolverReport, coupling, solve

log = logging.getLogger(__name__)

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_NUMERIC = 0, 2, 3, 4
SUBCOMMANDS = ("solve", "interp", "omt1d", "compare", "morph")
FIXTURES = ("none", "paper-1d", "two-blob")
SUMMATION_ORDER = (
    "dense kernels: row-wise max then sequential sum in index order; "
    "linear mode: BLAS matrix-vector products"
)


@dataclass
class RunConfig:
    """Every runtime knob of one CLI invocation (written back into the report)."""

    subcommand: str
    rho0: str | None = None
    rho1: str | None = None
    fixture: str = "none"
    n: int | None = None
    epsilon: float | None = None
    sqrt_eps: list[float] = field(default_factory=lambda: [0.5, 0.2, 0.1, 0.01])
    times: list[float] = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    tol: float = 1e-10
    max_iter: int = 10_000
    mode: str = "auto"
    support_delta: float = 1e-4
    margin: float = 3.0
    separable: bool = False
    out: str = "out"

    def validate(self):
        if self.subcommand not in SUBCOMMANDS:
            raise InputError(f"unknown subcommand {self.subcommand!r}")
        if self.fixture not in FIXTURES:
            raise InputError(f"unknown fixture {self.fixture!r}")
        if self.fixture == "none" and (self.rho0 is None or self.rho1 is None):
            raise InputError("give --rho0 and --rho1, or --fixture")
        if self.subcommand in ("solve", "interp", "morph"):
            if self.epsilon is None or not self.epsilon > 0:
                raise InputError("--epsilon must be given and positive")
        if self.subcommand == "compare" and (not self.sqrt_eps or min(self.sqrt_eps) <= 0):
            raise InputError("--sqrt-eps values must be positive")
        if any(not 0.0 <= t <= 1.0 for t in self.times):
            raise InputError("--times must lie in [0, 1]")
        if not self.tol > 0:
            raise InputError("--tol must be positive")
        if self.max_iter < 1:
            raise InputError("--max-iter must be >= 1")
        if self.mode not in ("auto", "linear", "log"):
            raise InputError(f"unknown mode {self.mode!r}")
        if not 0 <= self.support_delta < 1:
            raise InputError("--support-delta must lie in [0, 1)")
        if self.margin < 0:
            raise InputError("--margin must be nonnegative")
        if self.n is not None and self.n < 2:
            raise InputError("--n must be >= 2")


# inputs


def _read_one(path: str) -> MassVector:
    suffix = Path(path).suffix.lower()
    if suffix in (".pgm", ".pnm"):
        return read_pgm_mass(path)
    return read_csv_mass(path)


def load_marginals(cfg: RunConfig) -> tuple[MassVector, MassVector]:
    if cfg.fixture == "paper-1d":
        return bimodal_pair(cfg.n or 200)
    if cfg.fixture == "two-blob":
        a, b = two_blob_pair(cfg.n or 64)
        return image_to_mass(a), image_to_mass(b)
    rho0, rho1 = _read_one(cfg.rho0), _read_one(cfg.rho1)
    if rho0.grid.shape != rho1.grid.shape:
        raise InputError(f"shape mismatch: rho0 {rho0.grid.shape} vs rho1 {rho1.grid.shape}")
    if not rho0.grid.same_as(rho1.grid, rtol=1e-9):
        raise InputError("rho0 and rho1 are sampled on different grids")
    # tolerate rounding in the file coordinates
    return rho0, MassVector(rho0.grid, rho1.mass)


def hull_grid(a: Grid, b: Grid) -> Grid:
    """Smallest grid aligned with ``a`` that contains both ``a`` and ``b``."""
    start, stop = [], []
    for ax in range(a.dim):
        h = a.spacing[ax]
        lo = round((b.lower[ax] - a.lower[ax]) / h)
        hi = round((b.upper[ax] - a.lower[ax]) / h)
        start.append(min(0, lo))
        stop.append(max(a.shape[ax], hi))
    return a.sub_grid(tuple(start), tuple(stop))


# the bridge problem


@dataclass
class Bridge:
    epsilon: float
    grid: Grid
    potentials: Potentials
    report: SolverReport
    kernel: KernelMatrix
    seconds: float


def solve_bridge(rho0: MassVector, rho1: MassVector, epsilon: float, cfg: RunConfig) -> Bridge:
    """Restrict to the common support box, pad by ``margin * sqrt(epsilon)`` and solve.

    Images are never padded past their frame. Raises :class:`NotConverged`
    or :class:`NumericalFailure` from the solver.
    """
    t0 = time.perf_counter()
    grid, a, b = bridge_domain(
        rho0, rho1, cfg.support_delta, cfg.margin * math.sqrt(epsilon), clip=rho0.grid.dim == 2
    )
    K = heat_kernel(grid, grid, 1.0, epsilon, separable=cfg.separable)
    p, rep = solve(a, b, K, tol=cfg.tol, max_iter=cfg.max_iter, mode=cfg.mode)
    return Bridge(epsilon, grid, p, rep, K, time.perf_counter() - t0)


def frames_on(grid: Grid, bridge: Bridge, rho0: MassVector, rho1: MassVector, times, separable=False):
    """Bridge marginals at ``times`` embedded in ``grid``; endpoints are the given inputs."""
    inner = [t for t in times if 0.0 < t < 1.0]
    path = {f.t: f for f in entropic_path(bridge.potentials, bridge.epsilon, inner, separable=separable)}
    out = []
    for t in times:
        if t == 0.0:
            m = embed(rho0, grid)
        elif t == 1.0:
            m = embed(rho1, grid)
        else:
            m = embed(path[float(t)].marginal, grid)
        out.append(m)
    drift = max((f.mass_drift for f in path.values()), default=0.0)
    return out, drift


def _coords(grid: Grid):
    if grid.dim == 1:
        return ["x"], [grid.axis_points(0)]
    return ["y", "x"], [grid.points[:, 0], grid.points[:, 1]]


def _coupling_summary(bridge: Bridge) -> dict:
    p = bridge.potentials
    c = coupling(p, bridge.kernel, max_residual=math.inf)
    X = bridge.grid.points
    sq = np.zeros(c.joint.shape)
    for ax in range(X.shape[1]):
        d = X[:, ax][:, None] - X[:, ax][None, :]
        sq += d * d
    j = c.joint / c.joint.sum()
    pos = j > 0
    return {
        "coupling_total_mass": float(c.joint.sum()),
        "coupling_mean_squared_displacement": float(np.sum(j * sq)),
        "coupling_entropy": float(-np.sum(j[pos] * np.log(j[pos]))),
    }


def _write_solve_artifacts(out: Path, bridge: Bridge, prefix: str = ""):
    p, rep, grid = bridge.potentials, bridge.report, bridge.grid
    names, cols = _coords(grid)
    write_csv(
        out / f"{prefix}potentials.csv",
        names + ["rho0", "rho1", "log_phi0", "log_phihat0", "log_phi1", "log_phihat1"],
        cols + [p.rho0.mass, p.rho1.mass, p.log_phi0, p.log_phihat0, p.log_phi1, p.log_phihat1],
    )
    d = np.asarray(rep.hilbert_distances)
    ratio = np.concatenate(([np.nan], rep.contraction_ratios))
    write_csv(
        out / f"{prefix}hilbert_distances.csv",
        ["iteration", "hilbert_distance", "ratio"],
        [np.arange(1, d.size + 1), d, ratio],
    )


def _base_report(cfg: RunConfig) -> dict:
    items = {f"config.{k}": v for k, v in asdict(cfg).items()}
    items["summation_order"] = SUMMATION_ORDER
    return items


def _report_items(bridge_report: SolverReport, prefix: str = "") -> dict:
    items = {f"{prefix}{k}": v for k, v in bridge_report.as_dict().items()}
    items[f"{prefix}notes"] = "; ".join(bridge_report.notes)
    return items


# subcommands


def run_solve(cfg: RunConfig, out: Path, report: dict) -> int:
    rho0, rho1 = load_marginals(cfg)
    bridge = solve_bridge(rho0, rho1, cfg.epsilon, cfg)
    _write_solve_artifacts(out, bridge)
    report.update(_report_items(bridge.report))
    report["grid_points"] = bridge.grid.size
    report["solve_seconds"] = bridge.seconds
    report.update(_coupling_summary(bridge))
    return EXIT_OK


def run_interp(cfg: RunConfig, out: Path, report: dict) -> int:
    rho0, rho1 = load_marginals(cfg)
    if rho0.grid.dim != 1:
        raise InputError("interp writes 1D tables; use morph for images")
    bridge = solve_bridge(rho0, rho1, cfg.epsilon, cfg)
    _write_solve_artifacts(out, bridge)
    grid = hull_grid(rho0.grid, bridge.grid)
    frames, drift = frames_on(grid, bridge, rho0, rho1, cfg.times, cfg.separable)
    write_csv(
        out / "interp.csv",
        ["x"] + [f"density_t={t:g}" for t in cfg.times],
        [grid.axis_points(0)] + [m.density() for m in frames],
    )
    report.update(_report_items(bridge.report))
    report["max_mass_drift"] = drift
    return EXIT_OK


def run_omt1d(cfg: RunConfig, out: Path, report: dict) -> int:
    rho0, rho1 = load_marginals(cfg)
    if rho0.grid.dim != 1:
        raise InputError("omt1d needs 1D inputs")
    T = optimal_map(rho0, rho1)
    x = rho0.grid.axis_points(0)
    write_csv(out / "omt_map.csv", ["x", "T", "displacement"], [x, T.map_values, T.map_values - x])
    frames = [displacement_marginal(rho0, rho1, t) for t in cfg.times]
    write_csv(
        out / "omt_interp.csv",
        ["x"] + [f"density_t={t:g}" for t in cfg.times],
        [x] + [m.density() for m in frames],
    )
    report["w2"] = wasserstein2(rho0, rho1)
    report["degenerate_map"] = T.degenerate
    return EXIT_OK


def compare_rows(rho0: MassVector, rho1: MassVector, cfg: RunConfig):
    """``(sqrt_eps, t, L1)`` rows plus the bridges that produced them."""
    rows, bridges = [], []
    for s in cfg.sqrt_eps:
        bridge = solve_bridge(rho0, rho1, s * s, cfg)
        bridges.append(bridge)
        grid = hull_grid(rho0.grid, bridge.grid)
        a, b = embed(rho0, grid), embed(rho1, grid)
        frames, _ = frames_on(grid, bridge, rho0, rho1, cfg.times, cfg.separable)
        for t, m in zip(cfg.times, frames):
            rows.append((s, t, l1_distance(m, displacement_marginal(a, b, t))))
    return rows, bridges


def run_compare(cfg: RunConfig, out: Path, report: dict) -> int:
    rho0, rho1 = load_marginals(cfg)
    if rho0.grid.dim != 1:
        raise InputError("compare needs 1D inputs")
    rows, bridges = compare_rows(rho0, rho1, cfg)
    s, t, d = (np.array(c) for c in zip(*rows))
    write_csv(out / "compare.csv", ["sqrt_eps", "t", "l1"], [s, t, d])
    for b in bridges:
        tag = f"sqrt_eps={math.sqrt(b.epsilon):g}."
        report.update(_report_items(b.report, tag))
        report[f"{tag}solve_seconds"] = b.seconds
    return EXIT_OK


def run_morph(cfg: RunConfig, out: Path, report: dict) -> int:
    rho0, rho1 = load_marginals(cfg)
    if rho0.grid.dim != 2:
        raise InputError("morph needs two images")
    bridge = solve_bridge(rho0, rho1, cfg.epsilon, cfg)
    frames, drift = frames_on(rho0.grid, bridge, rho0, rho1, cfg.times, cfg.separable)
    shape = rho0.grid.shape
    dens = [m.density().reshape(shape) for m in frames]
    # one global scale so diffusion shows up as fading
    scale = max(float(d.max()) for d in dens)
    for t, d in zip(cfg.times, dens):
        write_pgm(out / f"frame_t{t:.3f}.pgm", to_pixels(d, scale))
    write_pgm(out / "input0.pgm", to_pixels(rho0.density().reshape(shape), scale))
    write_pgm(out / "input1.pgm", to_pixels(rho1.density().reshape(shape), scale))
    report.update(_report_items(bridge.report))
    report["intensity_scale"] = scale
    report["max_mass_drift"] = drift
    for t, m in zip(cfg.times, frames):
        report[f"entropy_t={t:g}"] = entropy(m)
    return EXIT_OK


RUNNERS = {
    "solve": run_solve,
    "interp": run_interp,
    "omt1d": run_omt1d,
    "compare": run_compare,
    "morph": run_morph,
}


# argument parsing


def _float_list(s: str) -> list[float]:
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {s!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="schrodinger-interp", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--rho0")
        sp.add_argument("--rho1")
        sp.add_argument("--fixture", choices=FIXTURES, default="none")
        sp.add_argument("--n", type=int, help="cells per axis for a fixture")
        sp.add_argument("--epsilon", type=float)
        sp.add_argument("--sqrt-eps", type=_float_list, default=[0.5, 0.2, 0.1, 0.01],
                        help="compare: comma-separated sqrt(epsilon) sweep")
        sp.add_argument("--times", type=_float_list, default=None)
        sp.add_argument("--tol", type=float, default=1e-10)
        sp.add_argument("--max-iter", type=int, default=10_000)
        sp.add_argument("--mode", choices=("auto", "linear", "log"), default="auto")
        sp.add_argument("--support-delta", type=float, default=1e-4)
        sp.add_argument("--margin", type=float, default=3.0, help="padding in units of sqrt(epsilon)")
        sp.add_argument("--separable", action="store_true", help="use per-axis kernel factors")
        sp.add_argument("--out", default="out")
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    times = ns.times
    if times is None:
        times = [0.5] if ns.subcommand == "compare" else (
            [0.2, 0.4, 0.6, 0.8] if ns.subcommand == "morph" else [0.0, 0.25, 0.5, 0.75, 1.0]
        )
    return RunConfig(
        subcommand=ns.subcommand, rho0=ns.rho0, rho1=ns.rho1, fixture=ns.fixture, n=ns.n,
        epsilon=ns.epsilon, sqrt_eps=ns.sqrt_eps, times=times, tol=ns.tol, max_iter=ns.max_iter,
        mode=ns.mode, support_delta=ns.support_delta, margin=ns.margin, separable=ns.separable,
        out=ns.out,
    )


def run(cfg: RunConfig) -> int:
    """Execute one configured run; always leaves ``report.txt`` behind once ``out`` exists."""
    out = Path(cfg.out)
    report = _base_report(cfg)
    try:
        cfg.validate()
        out.mkdir(parents=True, exist_ok=True)
    except (InputError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    t0 = time.perf_counter()
    try:
        code = RUNNERS[cfg.subcommand](cfg, out, report)
        report["status"] = "ok"
    except InputError as exc:
        log.error("input error: %s", exc)
        report["status"] = f"input error: {exc}"
        code = EXIT_INPUT
    except NotConverged as exc:
        log.error("%s", exc)
        report.update(_report_items(exc.report))
        report["status"] = f"not converged: {exc}"
        code = EXIT_NOT_CONVERGED
    except (NumericalFailure, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        report["status"] = f"numerical failure: {exc}"
        code = EXIT_NUMERIC
    report["exit_code"] = code
    report["seconds"] = time.perf_counter() - t0
    write_report(out / "report.txt", report)
    return code


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return run(config_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
