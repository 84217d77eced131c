"""Sparse Kronecker-product graph estimation for matrix-valued time series.

The spectral density of ``vec Z(t)`` is modeled as ``S(f) = Sbar(f) kron Sigma``;
the package estimates the sparse row precision ``Omega = Sigma^{-1}`` and the
sparse inverse PSDs ``Phi_k`` of the column process at ``M`` frequency windows
by penalized Whittle likelihood, then reads off the two factor graphs and their
Kronecker product graph.
"""
__version__ = "0.1.0"

from .edges import EdgeReport, kpg_edges
from .flipflop import FitResult, FlipFlopConfig, extract_edges, fit
from .model_select import LambdaGrid, bic, find_no_edge_lambda, grid_search
from .spectral import MatrixSeries, SpectralPlan, dft, plan_windows

__all__ = [
    "EdgeReport",
    "FitResult",
    "FlipFlopConfig",
    "LambdaGrid",
    "MatrixSeries",
    "SpectralPlan",
    "bic",
    "dft",
    "extract_edges",
    "find_no_edge_lambda",
    "fit",
    "grid_search",
    "kpg_edges",
    "plan_windows",
]
