"""Fractional Laplacian toolkit: operators, Sobolev norms and three solvers for the
exterior-data Dirichlet problem (walk on spheres, ball Poisson kernel, exterior Galerkin)."""
from .core_types import (GridFunction, NumericalContractError, ParameterError, SolverParams,
                         make_params, read_grid, write_grid)
from .geometry import AnnulusFamily, Domain

__version__ = "0.1.0"

__all__ = [
    "AnnulusFamily", "Domain", "GridFunction", "NumericalContractError", "ParameterError",
    "SolverParams", "make_params", "read_grid", "write_grid", "__version__",
]
