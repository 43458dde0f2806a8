"""Fractional Laplacian and Riesz potentials on the periodic grid.

Two routes are provided for each operator so that they can check each other:

* ``delta_s_fourier`` / ``riesz_fourier`` apply the multipliers
  ``(2 pi |xi|)^(2s)`` and ``(2 pi |xi|)^(-sigma)``.
* ``delta_s_singular`` / ``riesz_kernel`` are lattice quadratures of the
  real-space integrals (second-difference form and Riesz kernel).

Sign convention: a single operator with symbol ``+(2 pi |xi|)^(2s)``. Its
second-difference form therefore carries a minus sign,
``-(c_delta / 2) * int (f(x+y) - 2 f(x) + f(x-y)) |y|^(-n-2s) dy``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._lattice import canonical_rows, epstein_cos_difference, epstein_zeta
from .core_types import (GridFunction, ParameterError, SolverParams, c_delta, c_riesz,
                         frequencies, frequency_norm)

MEAN_TOLERANCE = 1e-10


@dataclass(frozen=True)
class MultiplierOp:
    """A Fourier multiplier on the grid of ``params``.

    ``kind`` is ``"frac_laplacian"`` (order ``2s``) or ``"riesz"`` (order ``-sigma``).
    The symbol is zero at ``xi = 0`` in both cases.
    """

    kind: str
    order: float
    params: SolverParams

    @property
    def symbol(self) -> np.ndarray:
        return _symbol(self.kind, self.order, self.params)

    def apply(self, f: GridFunction) -> GridFunction:
        if f.params.shape != self.params.shape or f.params.box_length != self.params.box_length:
            raise ValueError("grid mismatch")
        return GridFunction(f.params, np.fft.ifftn(np.fft.fftn(f.values) * self.symbol).real)


@lru_cache(maxsize=32)
def _symbol(kind: str, order: float, params: SolverParams) -> np.ndarray:
    k = 2 * np.pi * frequency_norm(params)
    out = np.zeros_like(k)
    nz = k > 0
    if kind == "frac_laplacian":
        out[nz] = k[nz] ** (2 * order)
    elif kind == "riesz":
        out[nz] = k[nz] ** (-order)
    else:
        raise ValueError(f"unknown multiplier kind {kind!r}")
    out.flags.writeable = False
    return out


def _order(f: GridFunction, s):
    s = f.params.s if s is None else float(s)
    if not 0 < s < 1:
        raise ParameterError(f"s out of open interval (0, 1): s={s}")
    return s


def delta_s_fourier(f: GridFunction, s: float | None = None) -> GridFunction:
    """Fractional Laplacian through its multiplier. ``s`` defaults to ``f.params.s``."""
    return MultiplierOp("frac_laplacian", _order(f, s), f.params).apply(f)


def _check_mean(f: GridFunction):
    scale = max(np.abs(f.values).max(), 1e-300)
    if abs(f.mean()) > MEAN_TOLERANCE * scale:
        raise ValueError(f"input must have zero mean (mean={f.mean():.3e})")


def _riesz_order(f: GridFunction, sigma: float) -> float:
    n = f.params.n
    if not 0 < sigma < n:
        raise ParameterError(f"Riesz order must lie in (0, {n}), got {sigma}")
    return float(sigma)


def riesz_fourier(f: GridFunction, sigma: float) -> GridFunction:
    """Riesz potential of order ``sigma`` by multiplier; the mean mode maps to 0."""
    sigma = _riesz_order(f, sigma)
    _check_mean(f)
    return MultiplierOp("riesz", sigma, f.params).apply(f)


@lru_cache(maxsize=16)
def singular_quadrature_symbol(params: SolverParams, s: float) -> np.ndarray:
    """Exact Fourier symbol of the lattice quadrature used by ``delta_s_singular``.

    The quadrature sums the second-difference integrand over every lattice
    offset ``y in h Z^n \\ {0}`` (the periodic extension of the grid function
    is integrated over all of R^n) and adds a zeta-corrected weight for the
    excluded cell at ``y = 0``. Because the rule is translation invariant its
    action on a periodic field is diagonal in Fourier space; the infinite
    lattice sums are evaluated by Ewald splitting.
    """
    n, h = params.n, params.h
    xi = frequencies(params).reshape(-1, n)
    q = xi * h
    uniq, inverse = canonical_rows(q)
    lattice = 2 * h ** (-2 * s) * epstein_cos_difference(n, n + 2 * s, uniq)[inverse]
    k2 = (2 * np.pi) ** 2 * (xi ** 2).sum(axis=1)
    # Taylor term of the excluded cell: second difference ~ y.H.y, cubic symmetry
    # reduces it to the Laplacian, whose lattice-minus-integral defect is a zeta value.
    cell = epstein_zeta(n, n + 2 * s - 2) * h ** (2 - 2 * s) * k2 / n
    symbol = -(c_delta(n, s) / 2) * (lattice + cell)
    symbol = symbol.reshape(params.shape)
    symbol.flags.writeable = False
    return symbol


def delta_s_singular(f: GridFunction, s: float | None = None) -> GridFunction:
    """Fractional Laplacian by quadrature of the second-difference integral."""
    s = _order(f, s)
    symbol = singular_quadrature_symbol(f.params, s)
    return GridFunction(f.params, np.fft.ifftn(np.fft.fftn(f.values) * symbol).real)


@lru_cache(maxsize=16)
def _riesz_kernel_weights(params: SolverParams, sigma: float) -> np.ndarray:
    n, h = params.n, params.h
    offsets = np.fft.fftfreq(params.grid_size, d=1.0 / params.grid_size)
    mesh = np.meshgrid(*([offsets] * n), indexing="ij")
    r = h * np.sqrt(sum(m ** 2 for m in mesh))
    w = np.zeros_like(r)
    nz = r > 0
    w[nz] = r[nz] ** (sigma - n) * h ** n
    # singular cell: corrected trapezoid weight for |y|^(sigma-n)
    w[(0,) * n] = -epstein_zeta(n, n - sigma) * h ** sigma
    return np.fft.fftn(w * c_riesz(n, sigma))


def riesz_kernel(f: GridFunction, sigma: float) -> GridFunction:
    """Riesz potential by direct kernel quadrature on the torus.

    Uses the minimum-image distance, so only the nearest periodic copy of
    ``f`` interacts with each node; ``f`` should sit in the central half-box.
    """
    sigma = _riesz_order(f, sigma)
    _check_mean(f)
    weights = _riesz_kernel_weights(f.params, sigma)
    return GridFunction(f.params, np.fft.ifftn(np.fft.fftn(f.values) * weights).real)
