"""Synthetic marginals used by the experiments and tests."""

from __future__ import annotations

import numpy as np

from .grid import Grid, MassVector, discretize, normalize


def bimodal_density(x):
    """Piecewise-cosine density on [0, 1]: a low bump on [0, 2/3), a tall one on [2/3, 1].

    Integrates to 2 over [0, 1] (4/15 + 26/15); zero outside the interval.
    """
    x = np.asarray(x, dtype=float)
    low = 0.2 - 0.2 * np.cos(3 * np.pi * x) + 0.2
    high = 5 - 5 * np.cos(6 * np.pi * x - 4 * np.pi) + 0.2
    out = np.where(x < 2.0 / 3.0, low, high)
    return np.where((x >= 0) & (x <= 1), out, 0.0)


def bimodal_cdf(x):
    """Antiderivative of :func:`bimodal_density` from 0, unnormalized (total 2)."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    low = 0.4 * x - 0.2 * np.sin(3 * np.pi * x) / (3 * np.pi)
    a = 2.0 / 3.0
    low_total = 0.4 * a - 0.2 * np.sin(3 * np.pi * a) / (3 * np.pi)
    high = low_total + 5.2 * (x - a) - 5 * (np.sin(6 * np.pi * x - 4 * np.pi) - np.sin(6 * np.pi * a - 4 * np.pi)) / (6 * np.pi)
    return np.where(x < a, low, high)


def bimodal_pair(n: int, lower: float = 0.0, upper: float = 1.0) -> tuple[MassVector, MassVector]:
    """The bimodal density and its mirror image ``x -> 1 - x``, normalized, on ``n`` cells."""
    grid = Grid.line(lower, upper, n)
    x = grid.axis_points(0)
    rho0 = normalize(discretize(bimodal_density(x), grid))
    rho1 = normalize(discretize(bimodal_density(1.0 - x), grid))
    return rho0, rho1


def gaussian_density(x, mean: float, std: float):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * ((x - mean) / std) ** 2) / (std * np.sqrt(2 * np.pi))


def gaussian_mass(grid: Grid, mean: float, std: float) -> MassVector:
    return normalize(discretize(gaussian_density(grid.axis_points(0), mean, std), grid))


def two_blob_image(n: int = 64, centers=((0.3, 0.3), (0.7, 0.65)), widths=(0.06, 0.08),
                   weights=(1.0, 0.7), floor: float = 0.0) -> np.ndarray:
    """``n x n`` grayscale array in [0, 1] with two Gaussian blobs (row = y, column = x)."""
    grid = Grid.square(0.0, 1.0, n)
    y = grid.axis_points(0)[:, None]
    x = grid.axis_points(1)[None, :]
    img = np.full((n, n), floor)
    for (cx, cy), w, a in zip(centers, widths, weights):
        img += a * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * w * w))
    return img / img.max()


def two_blob_pair(n: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Two images whose blobs move and swap relative size."""
    a = two_blob_image(n, centers=((0.3, 0.3), (0.7, 0.65)), widths=(0.06, 0.08), weights=(1.0, 0.7))
    b = two_blob_image(n, centers=((0.35, 0.7), (0.7, 0.3)), widths=(0.08, 0.05), weights=(0.8, 1.0))
    return a, b
