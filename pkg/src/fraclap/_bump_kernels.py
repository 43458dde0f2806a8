"""Riesz interactions of compactly supported radial bumps.

The bump of radius ``rho`` centred at ``p`` is ``psi((x - p) / rho)`` with the
Wendland profile ``psi(r) = (1 - r)_+^4 (4 r + 1)``. Two quantities are needed:

* ``pair(ra, rb, d) = <psi_a, I_{2s} psi_b>`` for centres at distance ``d``;
* ``potential(rho, d) = (I_{2s} psi)(x)`` at distance ``d`` from the centre.

Near field: a Hankel integral of the radial Fourier transforms against
``(2 pi k)^(-2s)``, tabulated once per radius ratio in units of the larger
radius (both quantities are homogeneous in the radii). Far field: the exact
multipole series of the Riesz kernel for radial densities,

    |x - y|^-beta averaged over spheres = sum_k a_k(beta) rho^(2k) d^(-beta-2k),

applied to both bumps, which converges geometrically once ``d`` exceeds the
sum of the radii.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import factorial, j0, poch, roots_jacobi, roots_legendre

from .core_types import c_riesz, sphere_area

NEAR_PAIR = 1.5     # pairs with d < NEAR_PAIR * (ra + rb) use the Hankel table
NEAR_SINGLE = 1.6   # potentials with d < NEAR_SINGLE * rho use the Hankel table
_PAIR_TERMS = 30
_K_MAX = 600
_R_PANELS = 2 * _K_MAX
_CHUNK = 1 << 22


def wendland(r):
    r = np.asarray(r, dtype=float)
    return np.where(r < 1, (1 - r) ** 4 * (4 * r + 1), 0.0)


def _gauss(a, b, m):
    x, w = roots_legendre(m)
    return (a + b) / 2 + (b - a) / 2 * x, (b - a) / 2 * w


def _radial_kernel(n: int, z):
    """Angular average of ``exp(i z.omega)`` over the unit sphere, as a function of ``|z|``."""
    return j0(z) if n == 2 else np.sinc(z / np.pi)


def _series_coefficients(n: int, beta: float, terms: int) -> np.ndarray:
    k = np.arange(terms)
    return poch(beta / 2, k) * poch(beta / 2 - n / 2 + 1, k) / (factorial(k) * poch(n / 2, k))


class BumpInteraction:
    """Pair interactions and single-bump potentials for fixed ``(n, s)``."""

    def __init__(self, n: int, s: float):
        self.n, self.s = n, s
        self.beta = n - 2 * s
        self.c = c_riesz(n, 2 * s)
        a = n - 1 - 2 * s
        with np.errstate(invalid="ignore", divide="ignore"):
            x, w = roots_jacobi(60, 0.0, a)
        ks, ws = [(1 + x) / 2], [w / 2 ** (1 + a)]
        for lo in range(1, _K_MAX):
            kk, wk = _gauss(lo, lo + 1, 20)
            ks.append(kk)
            ws.append(wk * kk ** a)
        self.k = np.concatenate(ks)
        # measure |S| k^(n-1) (2 pi k)^(-2s) dk; the k^a factor sits in the weights
        self.base = sphere_area(n) * (2 * np.pi) ** (-2 * s) * np.concatenate(ws)
        # composite rules: J0(2 pi k r) has up to _K_MAX oscillations on [0, 1].
        # The single-bump weight k^(n-1-2s) amplifies aliasing in psi_hat(k), so
        # that transform gets two panels per oscillation; in pair tables
        # psi_hat(ratio k) always multiplies the accurate, fast-decaying psi_hat(k)
        self._coarse = self._rule(300)
        self.r_nodes, self.r_weights = self._rule(_R_PANELS)
        self.psi_hat = self._psi_hat(self.k, self.r_nodes, self.r_weights)
        self.moments = np.array([
            sphere_area(n) * (wendland(self.r_nodes) * self.r_nodes ** (n - 1 + 2 * j) * self.r_weights).sum()
            for j in range(50)
        ])
        self._pair_tables = {}
        self._pair_coeffs = {}
        self._single_table = None

    @staticmethod
    def _rule(panels: int):
        parts = [_gauss(i / panels, (i + 1) / panels, 10) for i in range(panels)]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def _psi_hat(self, k: np.ndarray, r: np.ndarray, w: np.ndarray) -> np.ndarray:
        wr = sphere_area(self.n) * wendland(r) * r ** (self.n - 1) * w
        out = np.empty_like(k)
        step = max(1, _CHUNK // len(r))
        for i in range(0, len(k), step):
            out[i:i + step] = _radial_kernel(self.n, 2 * np.pi * np.outer(k[i:i + step], r)) @ wr
        return out

    def _hankel(self, weights: np.ndarray, t: np.ndarray) -> np.ndarray:
        out = np.empty_like(t)
        step = max(1, _CHUNK // len(self.k))
        for i in range(0, len(t), step):
            out[i:i + step] = _radial_kernel(self.n, 2 * np.pi * np.outer(t[i:i + step], self.k)) @ weights
        return out

    def pair_table(self, ratio: float) -> CubicSpline:
        """Spline of ``pair(1, ratio, t)`` for ``0 <= t <= NEAR_PAIR (1 + ratio)``."""
        key = round(float(ratio), 12)
        if key not in self._pair_tables:
            weights = self.base * self.psi_hat * ratio ** self.n * self._psi_hat(ratio * self.k, *self._coarse)
            t = np.linspace(0.0, 1.02 * NEAR_PAIR * (1 + ratio), int(1500 * (1 + ratio)) + 1)
            self._pair_tables[key] = CubicSpline(t, self._hankel(weights, t))
        return self._pair_tables[key]

    def single_table(self) -> CubicSpline:
        if self._single_table is None:
            t = np.linspace(0.0, 1.02 * NEAR_SINGLE, 2001)
            self._single_table = CubicSpline(t, self._hankel(self.base * self.psi_hat, t))
        return self._single_table

    def _far_coeffs(self, ratio: float) -> np.ndarray:
        key = round(float(ratio), 12)
        if key not in self._pair_coeffs:
            P, m = _PAIR_TERMS, self.moments
            a = _series_coefficients(self.n, self.beta, P)
            C = np.zeros(P)
            for k in range(P):
                b = _series_coefficients(self.n, self.beta + 2 * k, P - k)
                for l in range(P - k):
                    C[k + l] += a[k] * m[k] * b[l] * m[l] * ratio ** (2 * l)
            self._pair_coeffs[key] = C
        return self._pair_coeffs[key]

    def pair(self, ra, rb, d) -> np.ndarray:
        """``<psi_a, I_{2s} psi_b>`` for radii ``ra, rb`` at centre distance ``d`` (arrays broadcast)."""
        ra, rb, d = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (ra, rb, d)))
        big, small = np.maximum(ra, rb), np.minimum(ra, rb)
        ratio = np.round(small / big, 12)
        out = np.empty(d.shape)
        near = d < NEAR_PAIR * (big + small)
        for q in np.unique(ratio):
            sel = ratio == q
            m = sel & near
            if m.any():
                out[m] = self.pair_table(q)(d[m] / big[m]) * big[m] ** (2 * self.n - self.beta)
            m = sel & ~near
            if m.any():
                x = (big[m] / d[m]) ** 2
                acc = np.zeros(x.shape)
                for coef in self._far_coeffs(q)[::-1]:
                    acc = acc * x + coef
                out[m] = self.c * (big[m] * small[m]) ** self.n * d[m] ** -self.beta * acc
        return out

    def potential(self, rho, d) -> np.ndarray:
        """``(I_{2s} psi_rho)(x)`` at distance ``d`` from the bump centre."""
        rho, d = np.broadcast_arrays(np.asarray(rho, dtype=float), np.asarray(d, dtype=float))
        out = np.empty(d.shape)
        near = d < NEAR_SINGLE * rho
        if near.any():
            out[near] = self.single_table()(d[near] / rho[near]) * rho[near] ** (self.n - self.beta)
        far = ~near
        if far.any():
            # 14 terms suffice beyond 4 radii, 44 between 1.6 and 4 radii
            for lo, hi, terms in ((4.0, np.inf, 14), (NEAR_SINGLE, 4.0, 44)):
                m = far & (d >= lo * rho) & (d < hi * rho)
                if not m.any():
                    continue
                coef = _series_coefficients(self.n, self.beta, terms) * self.moments[:terms]
                x = (rho[m] / d[m]) ** 2
                acc = np.zeros(x.shape)
                for cf in coef[::-1]:
                    acc = acc * x + cf
                out[m] = self.c * rho[m] ** self.n * d[m] ** -self.beta * acc
        return out


@lru_cache(maxsize=8)
def interaction(n: int, s: float) -> BumpInteraction:
    return BumpInteraction(n, float(s))
