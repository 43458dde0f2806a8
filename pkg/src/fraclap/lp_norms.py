"""Littlewood-Paley filter bank and homogeneous Sobolev norms.

Frequencies follow the continuous-transform convention of
:class:`fraclap.core_types.GridFunction`: ``f_hat = h^n * DFT(f)`` sampled at
``xi = k / L`` with cell measure ``1 / L^n``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_types import GridFunction, ParameterError, SolverParams, frequency_norm, sphere_area


def bump(t):
    """Smooth bump ``exp(-1 / (1 - t^2))`` on ``|t| < 1``, zero elsewhere."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@dataclass(frozen=True)
class LPFilterBank:
    """Dyadic multipliers ``eta_hat(2^-i xi)`` for ``i_min <= i <= i_max``.

    ``multipliers[i - i_min]`` is the sampled multiplier on the grid; each is
    supported in ``2^(i-1) < |xi| < 2^(i+1)`` and together they sum to one at
    every nonzero lattice frequency.
    """

    params: SolverParams
    i_min: int
    i_max: int
    multipliers: tuple

    @property
    def indices(self) -> range:
        return range(self.i_min, self.i_max + 1)

    def multiplier(self, i: int) -> np.ndarray:
        if not self.i_min <= i <= self.i_max:
            raise IndexError(f"band {i} outside [{self.i_min}, {self.i_max}]")
        return self.multipliers[i - self.i_min]

    def weight_squared_sum(self) -> np.ndarray:
        """``sum_i eta_hat_i(xi)^2``, which lies in [1/2, 1] off the origin."""
        return sum(m ** 2 for m in self.multipliers)


def build_filter_bank(params: SolverParams) -> LPFilterBank:
    """Filter bank whose bands cover every nonzero frequency of the grid."""
    rho = frequency_norm(params)
    nz = rho > 0
    t = np.zeros_like(rho)
    t[nz] = np.log2(rho[nz])
    i_min = int(np.floor(t[nz].min())) - 1
    i_max = int(np.ceil(t[nz].max())) + 1
    raw = [np.where(nz, bump(t - i), 0.0) for i in range(i_min, i_max + 1)]
    total = sum(raw)
    norm = np.where(nz, total, 1.0)
    multipliers = []
    for r in raw:
        m = r / norm
        m.flags.writeable = False
        multipliers.append(m)
    return LPFilterBank(params, i_min, i_max, tuple(multipliers))


def _weights(params: SolverParams, alpha: float, normalized: bool) -> np.ndarray:
    rho = frequency_norm(params)
    if normalized:
        rho = 2 * np.pi * rho
    w = np.zeros_like(rho)
    nz = rho > 0
    w[nz] = rho[nz] ** (2 * alpha)
    if alpha == 0:
        w[~nz] = 1.0
    return w


def hs_norm_lp(f: GridFunction, alpha: float, bank: LPFilterBank, normalized: bool = False) -> float:
    """Littlewood-Paley form of the homogeneous ``H^alpha`` norm.

    Parameters
    ----------
    f : GridFunction
    alpha : float
        Any real order with ``|alpha| < n/2 + 2``.
    bank : LPFilterBank
    normalized : bool
        Use ``(2 pi |xi|)^(2 alpha)`` instead of ``|xi|^(2 alpha)``.

    Returns
    -------
    float
        ``(sum_i sum_xi |xi|^(2 alpha) |eta_hat_i f_hat|^2 dxi)^(1/2)``.
    """
    p = f.params
    if abs(alpha) >= p.n / 2 + 2:
        raise ParameterError(f"|alpha| must be below n/2 + 2, got {alpha}")
    _check_grid(p, bank.params)
    w = _weights(p, alpha, normalized)
    w[frequency_norm(p) == 0] = 0.0
    energy = np.abs(f.fft) ** 2 * w * bank.weight_squared_sum()
    return float(np.sqrt(energy.sum() / p.box_length ** p.n))


def hs_norm_direct(f: GridFunction, alpha: float, normalized: bool = False) -> float:
    """Direct Fourier form ``(sum_xi |xi|^(2 alpha) |f_hat|^2 dxi)^(1/2)`` for ``alpha >= 0``.

    At ``alpha = 0`` the zero mode carries weight one, so the value is the
    L2 norm of ``f``; for ``alpha > 0`` the zero mode drops out.
    """
    if alpha < 0:
        raise ParameterError("hs_norm_direct requires alpha >= 0; use hs_norm_lp for negative orders")
    p = f.params
    w = _weights(p, alpha, normalized)
    return float(np.sqrt((np.abs(f.fft) ** 2 * w).sum() / p.box_length ** p.n))


def _autocorrelation(f: GridFunction) -> np.ndarray:
    """Aperiodic autocorrelation ``A(y) = int f(x) f(x+y) dx`` on offsets ``|y_i| < L``."""
    p = f.params
    padded = np.zeros((2 * p.grid_size,) * p.n)
    padded[(slice(0, p.grid_size),) * p.n] = f.values
    spec = np.fft.rfftn(padded)
    return np.fft.irfftn(np.abs(spec) ** 2, s=padded.shape, axes=tuple(range(p.n))) * p.h ** p.n


def gagliardo_seminorm(f: GridFunction, alpha: float) -> float:
    """Second-difference Gagliardo seminorm of order ``alpha`` in (0, 2).

    The double integral is rewritten through the autocorrelation ``A``:
    ``int |f(x+y) - 2 f(x) + f(x-y)|^2 dx = 6 A(0) - 8 A(y) + 2 A(2y)``.
    The ``y`` integral is a lattice sum over ``0 < |y| <= L/2``; the excluded
    origin cell is skipped (its integrand vanishes to fourth order), and the
    region ``|y| > L/2``, where ``f`` no longer overlaps its shifts, is added
    in closed form.
    """
    if not 0 < alpha < 2:
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha}")
    p = f.params
    n, N, h = p.n, p.grid_size, p.h
    A = _autocorrelation(f)
    idx = np.arange(-(N // 2), N // 2 + 1)
    mesh = np.meshgrid(*([idx] * n), indexing="ij")
    r = h * np.sqrt(sum(m ** 2 for m in mesh))
    keep = (r > 0) & (r <= p.box_length / 2)
    a0 = A[(0,) * n]
    a1 = A[tuple(m[keep] % (2 * N) for m in mesh)]
    a2 = A[tuple((2 * m[keep]) % (2 * N) for m in mesh)]
    w = r[keep] ** (-n - 2 * alpha)
    inner = float(((6 * a0 - 8 * a1 + 2 * a2) * w).sum() * h ** n)
    radius = p.box_length / 2
    tail = 6 * a0 * sphere_area(n) * radius ** (-2 * alpha) / (2 * alpha)
    return float(np.sqrt(max(inner + tail, 0.0)))


def dual_pairing(phi: GridFunction, f: GridFunction, bank: LPFilterBank) -> float:
    """Band-decomposed pairing ``sum_i sum_xi conj(eta_hat_i phi_hat) f_hat dxi``.

    The bands sum to one, so this equals the L2 inner product of the
    mean-free parts of ``phi`` and ``f``.
    """
    _check_grid(phi.params, f.params)
    _check_grid(phi.params, bank.params)
    p = f.params
    cross = np.conj(phi.fft) * f.fft
    total = sum((m * cross).sum() for m in bank.multipliers)
    return float(total.real / p.box_length ** p.n)


def _check_grid(a: SolverParams, b: SolverParams):
    if a.shape != b.shape or a.box_length != b.box_length:
        raise ValueError("grid mismatch")
