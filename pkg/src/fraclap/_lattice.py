"""Lattice sums over Z^n evaluated by Ewald (theta-function) splitting.

``epstein_zeta(n, g)`` is the analytic continuation of ``sum_{m != 0} |m|^-g``.
``epstein_cos_difference(n, g, q)`` is ``sum_{m != 0} (cos(2 pi q.m) - 1) |m|^-g``.
Both converge like ``exp(-pi |m|^2)`` after splitting, so a handful of shells
is enough for double precision.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
from scipy.special import gamma, gammaincc

_SHELLS = {2: 6, 3: 4}


def upper_gamma_scaled(a: float, x):
    """``int_1^inf t^(a-1) exp(-x t) dt = x^-a Gamma(a, x)`` for ``x > 0``, any real ``a > -1``."""
    x = np.asarray(x, dtype=float)
    if a > 0:
        return gammaincc(a, x) * gamma(a) * x ** (-a)
    if a == 0:
        from scipy.special import exp1
        return exp1(x)
    if a <= -1:
        raise ValueError("a must exceed -1")
    upper_next = gammaincc(a + 1, x) * gamma(a + 1)
    return (upper_next - x ** a * np.exp(-x)) / a * x ** (-a)


@lru_cache(maxsize=None)
def _lattice_points(n: int, shells: int) -> np.ndarray:
    r = range(-shells, shells + 1)
    return np.array(list(itertools.product(r, repeat=n)), dtype=float)


@lru_cache(maxsize=None)
def epstein_zeta(n: int, g: float) -> float:
    """Epstein zeta function of the integer lattice, ``g != 0, n``."""
    if g == n or g == 0:
        raise ValueError("pole of the Epstein zeta function")
    m = _lattice_points(n, _SHELLS[n] + 2)
    m2 = (m ** 2).sum(axis=1)
    m2 = m2[m2 > 0]
    pre = np.pi ** (g / 2) / gamma(g / 2)
    total = (upper_gamma_scaled(g / 2, np.pi * m2).sum()
             + upper_gamma_scaled((n - g) / 2, np.pi * m2).sum())
    return float(pre * (total + 2 / (g - n) - 2 / g))


def epstein_cos_difference(n: int, g: float, q: np.ndarray) -> np.ndarray:
    """``sum_{m != 0} (cos(2 pi q.m) - 1) |m|^-g`` for ``g > n`` and rows ``q`` of shape (K, n).

    Rows are expected in the Brillouin zone ``[-1/2, 1/2]^n``; ``q = 0`` returns 0.
    """
    q = np.atleast_2d(np.asarray(q, dtype=float))
    m = _lattice_points(n, _SHELLS[n])
    m2 = (m ** 2).sum(axis=1)
    nz = m2 > 0
    a_dir, a_rec = g / 2, (n - g) / 2
    pre = np.pi ** (g / 2) / gamma(g / 2)
    w_dir = upper_gamma_scaled(a_dir, np.pi * m2[nz])
    g_rec0 = upper_gamma_scaled(a_rec, np.pi * m2[nz])
    out = np.zeros(len(q))
    zero = (q ** 2).sum(axis=1) == 0
    chunk = 4096
    idx = np.flatnonzero(~zero)
    for start in range(0, len(idx), chunk):
        sel = idx[start:start + chunk]
        qs = q[sel]
        direct = ((np.cos(2 * np.pi * qs @ m[nz].T) - 1.0) * w_dir).sum(axis=1)
        shifted = ((qs[:, None, :] + m[None, nz, :]) ** 2).sum(axis=-1)
        recip = (upper_gamma_scaled(a_rec, np.pi * shifted) - g_rec0).sum(axis=1)
        centre = upper_gamma_scaled(a_rec, np.pi * (qs ** 2).sum(axis=1)) - 2 / (g - n)
        out[sel] = pre * (direct + recip + centre)
    return out


def canonical_rows(q: np.ndarray):
    """Reduce rows to a representative under the cubic symmetry group.

    Returns ``(unique_rows, inverse)`` so that ``f(q) == f(unique)[inverse]``
    for any cubic-invariant ``f``.
    """
    key = np.sort(np.abs(q), axis=1)
    key = np.round(key, 14)
    uniq, inverse = np.unique(key, axis=0, return_inverse=True)
    return uniq, inverse.ravel()
