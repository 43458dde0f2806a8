"""Poisson kernel of a ball for the isotropic 2s-stable process.

For the ball ``B(c, r)`` the exit density from ``x`` is

    K(x, y) = C(n, s) * ((r^2 - |x-c|^2) / (|y-c|^2 - r^2))^s * |x - y|^(-n),
    C(n, s) = Gamma(n/2) * pi^(-n/2 - 1) * sin(pi s).

Quadrature works in scaled exterior coordinates ``y = c + r rho omega``. With
``t = rho^2 - 1`` and ``u = t / (1 + t)`` the edge factor ``t^-s`` and the
decay at infinity become the Jacobi weight ``u^-s (1 - u)^(s-1)``, so a
Gauss-Jacobi rule in ``u`` handles both ends exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import gamma, roots_jacobi, roots_legendre

from .core_types import sphere_area


@dataclass(frozen=True)
class BallKernel:
    """Exit kernel of ``B(center, radius)`` for order ``s`` in dimension ``n``."""

    center: tuple
    radius: float
    s: float
    n: int

    def __post_init__(self):
        c = tuple(float(v) for v in np.ravel(self.center))
        object.__setattr__(self, "center", c)
        if len(c) != self.n or self.n not in (2, 3):
            raise ValueError("center must have n in {2, 3} coordinates")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not 0 < self.s < 1:
            raise ValueError(f"s out of open interval (0, 1): s={self.s}")

    @property
    def normalization(self) -> float:
        n, s = self.n, self.s
        return gamma(n / 2) * np.pi ** (-n / 2 - 1) * np.sin(np.pi * s)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.center)


def make_ball_kernel(center, radius: float, s: float) -> BallKernel:
    center = tuple(np.ravel(center))
    return BallKernel(center, float(radius), float(s), len(center))


def ball_kernel_eval(k: BallKernel, x, y) -> np.ndarray:
    """Evaluate ``K(x, y)``; ``x`` must lie inside the ball and ``y`` outside its closure."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ax = ((x - k.c) ** 2).sum(-1)
    ay = ((y - k.c) ** 2).sum(-1)
    r2 = k.radius ** 2
    if np.any(ax >= r2):
        raise ValueError("x must lie strictly inside the ball")
    if np.any(ay <= r2):
        raise ValueError("y must lie strictly outside the ball")
    dist2 = ((x - y) ** 2).sum(-1)
    out = k.normalization * ((r2 - ax) / (ay - r2)) ** k.s * dist2 ** (-k.n / 2)
    return out if out.ndim else float(out)


def sphere_rule(n: int, m: int, axis=None):
    """Directions and weights integrating over the unit sphere (weights sum to its area).

    ``n = 2``: ``m``-point trapezoid in angle. ``n = 3``: product of ``m/2``
    Gauss-Legendre nodes in ``cos(theta)`` and ``m`` trapezoid nodes in ``phi``,
    with the polar axis along ``axis`` when given (nodes cluster at the poles).
    """
    if n == 2:
        th = 2 * np.pi * np.arange(m) / m
        return np.stack([np.cos(th), np.sin(th)], -1), np.full(m, 2 * np.pi / m)
    z, wz = roots_legendre(max(m // 2, 2))
    ph = 2 * np.pi * np.arange(m) / m
    Z, PH = np.meshgrid(z, ph, indexing="ij")
    sz = np.sqrt(1 - Z ** 2)
    dirs = np.stack([sz * np.cos(PH), sz * np.sin(PH), Z], -1).reshape(-1, 3)
    w = (wz[:, None] * np.full(m, 2 * np.pi / m)[None]).ravel()
    if axis is not None and np.linalg.norm(axis) > 0:
        e3 = np.asarray(axis, dtype=float) / np.linalg.norm(axis)
        helper = np.eye(3)[np.argmin(np.abs(e3))]
        e1 = np.cross(e3, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(e3, e1)
        dirs = dirs @ np.stack([e1, e2, e3])
    return dirs, w


@lru_cache(maxsize=16)
def _radial_rule(s: float, m: int):
    with np.errstate(invalid="ignore", divide="ignore"):
        xj, wj = roots_jacobi(m, s - 1, -s)
    u = (1 + xj) / 2
    return u, wj


def solve_ball_quadrature(k: BallKernel, F, x, radial_nodes: int = 400, angular_nodes: int | None = None) -> float:
    """``u(x) = int_{|y-c| > r} K(x, y) F(y) dy`` by Gauss-Jacobi x sphere quadrature.

    Raises ``ValueError`` if ``F`` returns non-finite values or grows too fast
    to be integrable against ``(1 + |y|)^(-n-2s)``.
    """
    n, s, r = k.n, k.s, k.radius
    x = np.asarray(x, dtype=float)
    xs = (x - k.c) / r
    if xs @ xs >= 1:
        raise ValueError("x must lie strictly inside the ball")
    _check_tail(k, F)
    gap = 1 - np.sqrt(xs @ xs)
    if angular_nodes is None:
        # the integrand peaks in a cone of width ~gap around the direction of x
        angular_nodes = int(max(800, 40 / gap)) if n == 2 else int(np.clip(10 / gap, 96, 400))
    u, wu = _radial_rule(s, radial_nodes)
    rho = 1 / np.sqrt(1 - u)
    dirs, wd = sphere_rule(n, angular_nodes, axis=xs if n == 3 else None)
    total = 0.0
    for i in range(len(u)):
        ys = rho[i] * dirs
        vals = F(k.c + r * ys)
        if not np.all(np.isfinite(vals)):
            raise ValueError("exterior data returned non-finite values")
        ang = (((ys - xs) ** 2).sum(-1) ** (-n / 2) * vals * wd).sum()
        # Jacobi weight absorbs u^-s (1-u)^(s-1); the remaining Jacobian is rho^(n-2) / (2 (1-u))
        total += wu[i] * ang * rho[i] ** (n - 2) / (2 * (1 - u[i]))
    return float(k.normalization * (1 - xs @ xs) ** s * total)


def _check_tail(k: BallKernel, F):
    rng = np.random.default_rng(0)
    dirs = rng.normal(size=(16, k.n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = k.radius * np.logspace(2, 8, 7)
    scale = np.array([np.abs(F(k.c + R * dirs)).max() for R in radii])
    if not np.all(np.isfinite(scale)):
        raise ValueError("exterior data returned non-finite values")
    grow = scale * radii ** (-2 * k.s)
    if grow[-1] > 10 * max(grow[0], 1e-300) and grow[-1] > grow[-2]:
        raise ValueError("exterior data is not integrable against (1+|y|)^(-n-2s): tail diverges")


class RadialExitTable:
    """Tabulated CDF of ``rho = |X - c| / r`` for exits from the ball center.

    In ``x = 1 - rho^-2`` the kernel gives the density
    ``(C |S^{n-1}| / 2) x^-s (1 - x)^(s-1)``, so the CDF behaves like
    ``x^(1-s)`` at one end and ``1 - (1-x)^s`` at the other. The table uses
    the coordinate ``tau`` defined by ``x / (1 - x) = tau^a / (1 - tau)^b``
    with ``a = 1/(1-s)`` and ``b = 1/s``, in which the CDF is smooth and
    linear at both ends; panels are integrated by Gauss-Legendre and values
    between nodes use monotone cubic interpolation in ``tau``.
    """

    def __init__(self, n: int, s: float, nodes: int = 4096):
        self.n, self.s = n, s
        kern = make_ball_kernel(np.zeros(n), 1.0, s)
        pref = kern.normalization * sphere_area(n) / 2
        a, b = 1 / (1 - s), 1 / s
        tau = np.linspace(0.0, 1.0, nodes)
        g, wg = roots_legendre(12)
        lo, hi = tau[:-1, None], tau[1:, None]
        tt = (lo + hi) / 2 + (hi - lo) / 2 * g
        panels = pref * ((hi - lo) / 2 * self._density(tt, a, b) * wg).sum(1)
        cdf = np.concatenate([[0.0], np.cumsum(panels)])
        self.tau = tau
        self.values = cdf
        self.mass = float(cdf[-1])
        self._ab = (a, b)
        self._interp = PchipInterpolator(tau, cdf)

    @staticmethod
    def _density(tau, a, b):
        """``x^-s (1-x)^(s-1) dx/dtau`` written to stay finite at both ends."""
        # x = A / (A + B) with A = tau^a, B = (1 - tau)^b
        s = 1 / b
        A, B = tau ** a, (1 - tau) ** b
        # A^-s dA = a and B^(s-1) dB = -b exactly, which removes both endpoint singularities
        return (a * B ** s + b * A ** (1 - s)) / (A + B)

    def _tau(self, log_t: np.ndarray) -> np.ndarray:
        """Solve ``a log(tau) - b log(1 - tau) = log(rho^2 - 1)`` by bisection."""
        a, b = self._ab
        lo, hi = np.zeros_like(log_t), np.ones_like(log_t)
        with np.errstate(divide="ignore"):
            for _ in range(64):
                mid = (lo + hi) / 2
                below = a * np.log(mid) - b * np.log1p(-mid) < log_t
                lo, hi = np.where(below, mid, lo), np.where(below, hi, mid)
        return (lo + hi) / 2

    def cdf(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        out = np.where(rho > 1, 1.0, 0.0)
        mid = (rho > 1) & np.isfinite(rho)
        r = rho[mid]
        out[mid] = self._interp(self._tau(np.log(r - 1) + np.log(r + 1)))
        return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class BoundsResult:
    ratio_min: float
    ratio_max: float
    samples: int


def check_kernel_bounds(k: BallKernel, M: int, seed: int = 0, x_depth_min: float = 0.0,
                        y_gap: tuple | None = None) -> BoundsResult:
    """Extremes of ``K(x,y) delta(y)^s (delta(y)+1)^s |x-y|^n / delta(x)^s`` over random pairs.

    ``x`` is uniform in the ball (optionally restricted to ``delta(x) > x_depth_min``).
    ``|y - c|`` has density proportional to ``(1 + |y - c|)^(-n-1)`` beyond the
    radius, so both thin and very wide gaps are sampled; ``y_gap = (lo, hi)``
    conditions ``delta(y)`` to that interval.
    """
    if M < 10_000:
        raise ValueError("check_kernel_bounds needs at least 1e4 samples")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0x5B])))
    n, r = k.n, k.radius
    dirs = rng.normal(size=(M, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    rad_max = r - x_depth_min
    x = k.c + dirs * (rad_max * rng.random(M) ** (1 / n))[:, None]
    ydirs = rng.normal(size=(M, n))
    ydirs /= np.linalg.norm(ydirs, axis=1, keepdims=True)
    if y_gap is None:
        ry = (1 + r) * rng.random(M) ** (-1 / n) - 1
    else:
        lo, hi = r + y_gap[0], r + y_gap[1]
        a, b = (1 + lo) ** -n, (1 + hi) ** -n
        ry = (a + (b - a) * rng.random(M)) ** (-1 / n) - 1
    y = k.c + ydirs * ry[:, None]
    dx = r - np.linalg.norm(x - k.c, axis=1)
    dy = ry - r
    ok = (dx > 0) & (dy > 0)
    x, y, dx, dy = x[ok], y[ok], dx[ok], dy[ok]
    K = ball_kernel_eval(k, x, y)
    dist = np.linalg.norm(x - y, axis=1)
    ratio = K * dy ** k.s * (dy + 1) ** k.s * dist ** n / dx ** k.s
    if not np.all(np.isfinite(ratio)):
        raise ValueError("non-finite kernel ratio encountered")
    return BoundsResult(float(ratio.min()), float(ratio.max()), int(ok.sum()))
