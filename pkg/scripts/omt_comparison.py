"""
Distance between entropic and displacement interpolants as the noise vanishes.

Prints the L1 table and writes the t = 0.5 curves of both interpolants.

    python3 scripts/omt_comparison.py --out runs/compare
"""

import argparse
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from schrodinger_interp.cli import RunConfig, compare_rows, frames_on, hull_grid
from schrodinger_interp.fixtures import bimodal_pair
from schrodinger_interp.grid import embed
from schrodinger_interp.io import write_csv
from schrodinger_interp.omt1d import displacement_marginal, wasserstein2


@dataclass
class ComparisonConfig:
    n: int = 1000
    sqrt_eps: list = field(default_factory=lambda: [0.5, 0.2, 0.1, 0.05, 0.02, 0.01])
    times: list = field(default_factory=lambda: [0.25, 0.5, 0.75])
    out: str = "runs/compare"


def main(cfg: ComparisonConfig):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rho0, rho1 = bimodal_pair(cfg.n)
    run = RunConfig("compare", sqrt_eps=cfg.sqrt_eps, times=cfg.times)
    rows, bridges = compare_rows(rho0, rho1, run)
    s, t, d = (np.array(c) for c in zip(*rows))
    write_csv(out / "l1.csv", ["sqrt_eps", "t", "l1"], [s, t, d])
    print(f"W2(rho0, rho1) = {wasserstein2(rho0, rho1):.6f}")
    print("sqrt_eps  " + "  ".join(f"t={x:<6g}" for x in cfg.times) + "  seconds")
    for k, b in enumerate(bridges):
        row = d[k * len(cfg.times):(k + 1) * len(cfg.times)]
        print(f"{cfg.sqrt_eps[k]:<8g}  " + "  ".join(f"{v:<8.4f}" for v in row) + f"  {b.seconds:.2f}")

    # t = 0.5 curves on the widest grid
    widest = max(bridges, key=lambda b: b.grid.size)
    grid = hull_grid(rho0.grid, widest.grid)
    cols = [grid.axis_points(0), displacement_marginal(embed(rho0, grid), embed(rho1, grid), 0.5).density()]
    for b in bridges:
        (m,), _ = frames_on(hull_grid(rho0.grid, b.grid), b, rho0, rho1, [0.5])
        cols.append(embed(m, grid).density())
    write_csv(out / "midpoint_curves.csv", ["x", "omt"] + [f"sqrt_eps={v:g}" for v in cfg.sqrt_eps], cols)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--out", default="runs/compare")
    args = ap.parse_args()
    main(ComparisonConfig(n=args.n, out=args.out))
