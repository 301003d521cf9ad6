"""Entropic interpolation between densities through the discrete Schrödinger system."""

from .grid import Grid, MassVector, bridge_domain, discretize, embed, l1_distance, normalize, support_box
from .hilbert import HilbertDiagnostics, birkhoff_ratio, diagnostics_from_bounds, hilbert_distance
from .interpolation import InterpolantFrame, entropic_marginal, entropic_path, entropy
from .kernel import KernelMatrix, heat_kernel
from .omt1d import displacement_marginal, optimal_map, push_forward, wasserstein2
from .solver import (
    Coupling, NotConverged, NumericalFailure, Potentials, SolverReport, coupling, iterate_once,
    marginal_residuals, solve,
)

__all__ = [
    "Grid", "MassVector", "bridge_domain", "discretize", "embed", "l1_distance", "normalize",
    "support_box", "HilbertDiagnostics", "birkhoff_ratio", "diagnostics_from_bounds",
    "hilbert_distance", "InterpolantFrame", "entropic_marginal", "entropic_path", "entropy",
    "KernelMatrix", "heat_kernel", "displacement_marginal", "optimal_map", "push_forward",
    "wasserstein2", "Coupling", "NotConverged", "NumericalFailure", "Potentials", "SolverReport",
    "coupling", "iterate_once", "marginal_residuals", "solve",
]
