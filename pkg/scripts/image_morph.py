"""
Morph between two grayscale images at two noise levels.

Uses the synthetic two-blob pair unless two PGM files are given. Frames of
both runs share one intensity scale, so the blurrier run looks dimmer.

    python3 scripts/image_morph.py --out runs/morph
    python3 scripts/image_morph.py --rho0 a.pgm --rho1 b.pgm --out runs/morph
"""

import argparse
from dataclasses import dataclass, field
from pathlib import Path
import warnings

from schrodinger_interp.cli import RunConfig, frames_on, solve_bridge
from schrodinger_interp.fixtures import two_blob_pair
from schrodinger_interp.interpolation import MassDriftWarning, entropy
from schrodinger_interp.io import image_to_mass, read_pgm_mass, to_pixels, write_pgm


@dataclass
class MorphConfig:
    rho0: str | None = None
    rho1: str | None = None
    n: int = 64
    epsilons: list = field(default_factory=lambda: [0.01, 0.04])
    times: list = field(default_factory=lambda: [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    out: str = "runs/morph"


def main(cfg: MorphConfig):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.rho0 and cfg.rho1:
        a, b = read_pgm_mass(cfg.rho0), read_pgm_mass(cfg.rho1)
    else:
        a, b = (image_to_mass(img) for img in two_blob_pair(cfg.n))
    shape = a.grid.shape
    runs = {}
    for eps in cfg.epsilons:
        bridge = solve_bridge(a, b, eps, RunConfig("morph"))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MassDriftWarning)
            frames, drift = frames_on(a.grid, bridge, a, b, cfg.times)
        runs[eps] = frames
        ent = " ".join(f"{entropy(m):6.3f}" for m in frames)
        print(f"eps={eps:<5g} mode={bridge.report.mode:<6} iters={bridge.report.iterations:<4d} "
              f"{bridge.seconds:5.1f}s drift={drift:.1e}  entropy: {ent}")
    scale = max(float(m.density().max()) for frames in runs.values() for m in frames)
    for eps, frames in runs.items():
        for t, m in zip(cfg.times, frames):
            write_pgm(out / f"eps{eps:g}_t{t:.2f}.pgm", to_pixels(m.density().reshape(shape), scale))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--rho0")
    ap.add_argument("--rho1")
    ap.add_argument("--out", default="runs/morph")
    args = ap.parse_args()
    main(MorphConfig(rho0=args.rho0, rho1=args.rho1, out=args.out))
