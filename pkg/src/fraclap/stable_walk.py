"""Walk-on-spheres Monte Carlo for the isotropic 2s-stable process.

Each step draws the exit position of the process from the ball
``B(X_t, beta * delta(X_t))`` started at its center. From the center of a
unit ball the exit radius satisfies ``1 - rho^-2 ~ Beta(1 - s, s)`` with a
uniform direction, independently of the dimension, so every step is exact
in law and the walk stops as soon as it lands outside the domain.

Randomness comes from Philox streams keyed by ``(seed, shard)``; results are
reduced in shard order, so they do not depend on how shards are scheduled.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core_types import NumericalContractError
from .geometry import AnnulusFamily, Domain

MAX_STEPS = 100_000
DEFAULT_SHARDS = 16


@dataclass(frozen=True)
class WalkPath:
    positions: np.ndarray
    radii: np.ndarray
    exit_point: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.radii)


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean with its standard error ``std / sqrt(samples)``."""

    mean: float
    stderr: float
    samples: int
    mean_steps: float
    capped: int = 0


def make_rng(seed: int, shard: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(shard)])))


def _unit_directions(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    g = rng.standard_normal((m, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_exit_radius(rng: np.random.Generator, s: float, size) -> np.ndarray:
    """Exit radius ratio ``rho > 1`` for a unit ball; ``rho^-2 ~ Beta(s, 1 - s)``."""
    w = rng.beta(s, 1.0 - s, size=size)
    w = np.maximum(w, np.finfo(float).tiny)
    # rho - 1 below machine epsilon rounds to 1; keep the exit strictly outside
    return np.maximum(w ** -0.5, np.nextafter(1.0, 2.0))


def sample_ball_exit(center, radius: float, s: float, rng: np.random.Generator, size: int | None = None):
    """Exit position(s) of the process started at the center of ``B(center, radius)``."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    c = np.asarray(center, dtype=float)
    m = 1 if size is None else int(size)
    rho = sample_exit_radius(rng, s, m)
    z = c + radius * rho[:, None] * _unit_directions(rng, m, c.size)
    return z[0] if size is None else z


def _walk_batch(domain_dist, inside, x: np.ndarray, m: int, s: float, beta: float,
                rng: np.random.Generator, max_steps: int):
    """Run ``m`` walks from ``x``; returns exit points, step counts and capped mask."""
    n = x.size
    pos = np.tile(x, (m, 1))
    steps = np.zeros(m, dtype=np.int64)
    active = np.arange(m)
    while active.size and steps[active[0]] < max_steps:
        cur = pos[active]
        radius = beta * domain_dist(cur)
        rho = sample_exit_radius(rng, s, active.size)
        new = cur + (radius * rho)[:, None] * _unit_directions(rng, active.size, n)
        pos[active] = new
        steps[active] += 1
        active = active[inside(new)]
    capped = np.zeros(m, dtype=bool)
    capped[active] = True
    return pos, steps, capped


def _check_start(domain: Domain, x):
    x = np.asarray(x, dtype=float)
    if not domain.contains(x):
        raise ValueError("start point must lie strictly inside the domain")
    return x


def _shard_sizes(n_samples: int, shards: int):
    base, extra = divmod(n_samples, shards)
    return [base + (1 if i < extra else 0) for i in range(shards)]


def _run_shards(task, n_samples: int, shards: int, threads: int):
    sizes = _shard_sizes(n_samples, shards)
    jobs = [(i, m) for i, m in enumerate(sizes) if m > 0]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda job: task(*job), jobs))
    return [task(*job) for job in jobs]


def wos_estimate(d: Domain, F, x, s: float, n_samples: int, seed: int, beta: float = 1.0,
                 shards: int = DEFAULT_SHARDS, threads: int = 1, max_steps: int = MAX_STEPS) -> McEstimate:
    """Estimate ``u(x) = E_x F(X_tau)`` by walk on spheres.

    Parameters
    ----------
    d : Domain
    F : callable
        Exterior data, vectorized over a trailing coordinate axis.
    x : array_like
        Start point inside ``d``.
    s : float
        Fractional order.
    n_samples : int
        Number of paths, split over ``shards`` Philox streams.
    seed : int
    beta : float
        Ball radius as a fraction of the boundary distance, in (0, 1].
    """
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    if not 0 < s < 1:
        raise ValueError(f"s out of open interval (0, 1): s={s}")
    x = _check_start(d, x)

    def task(shard, m):
        rng = make_rng(seed, shard)
        z, steps, capped = _walk_batch(d.boundary_distance, d.contains, x, m, s, beta, rng, max_steps)
        vals = np.asarray(F(z[~capped]), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("exterior data returned non-finite values")
        return vals, steps, int(capped.sum())

    results = _run_shards(task, n_samples, shards, threads)
    vals = np.concatenate([r[0] for r in results])
    steps = np.concatenate([r[1] for r in results])
    capped = sum(r[2] for r in results)
    if capped > 1e-6 * n_samples:
        raise NumericalContractError(f"{capped} of {n_samples} walks hit the {max_steps}-step cap")
    return _estimate(vals, steps, capped)


def sample_exit_points(d: Domain, x, s: float, n_samples: int, seed: int, beta: float = 1.0,
                       shards: int = DEFAULT_SHARDS, max_steps: int = MAX_STEPS) -> np.ndarray:
    """Exit positions ``X_tau`` of ``n_samples`` walks from ``x``, in shard order."""
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    x = _check_start(d, x)

    def task(shard, m):
        z, _, capped = _walk_batch(d.boundary_distance, d.contains, x, m, s, beta, make_rng(seed, shard), max_steps)
        if capped.any():
            raise NumericalContractError(f"{int(capped.sum())} walks hit the {max_steps}-step cap")
        return z

    return np.concatenate(_run_shards(task, n_samples, shards, 1))


def _estimate(vals: np.ndarray, steps: np.ndarray, capped: int = 0) -> McEstimate:
    m = len(vals)
    std = float(vals.std(ddof=1)) if m > 1 else 0.0
    return McEstimate(float(vals.mean()), float(std / np.sqrt(m)), m, float(steps.mean()), capped)


def sample_walk_path(d: Domain, x, s: float, rng: np.random.Generator, beta: float = 1.0,
                     max_steps: int = MAX_STEPS) -> WalkPath:
    """One full walk, keeping every intermediate position and radius."""
    pos = [_check_start(d, x)]
    radii = []
    while len(radii) < max_steps:
        r = beta * d.boundary_distance(pos[-1])
        z = sample_ball_exit(pos[-1], r, s, rng)
        radii.append(float(r))
        pos.append(z)
        if not d.contains(z):
            return WalkPath(np.array(pos[:-1]), np.array(radii), z)
    raise NumericalContractError("walk hit the step cap")


@dataclass(frozen=True)
class AnnulusMass:
    """Per-offset probabilities ``p_k`` that the exit from ``Omega_k`` lands in ``Omega \\ Omega_k``."""

    offsets: tuple
    p: np.ndarray
    stderr: np.ndarray


def annulus_exit_mass(d: Domain, fam: AnnulusFamily, x, s: float, n_samples: int, seed: int,
                      beta: float = 1.0, shards: int = DEFAULT_SHARDS, threads: int = 1) -> AnnulusMass:
    """Estimate ``P_x(X at exit from Omega_k lies in Omega \\ Omega_k)`` for every offset.

    All offsets reuse the same random streams (common random numbers), which
    keeps differences between neighbouring ``k`` precise.
    """
    x = np.asarray(x, dtype=float)
    if not fam.contains(0, x):
        raise ValueError("start point must lie in the smallest subdomain")
    p, err = [], []
    for k in range(len(fam)):
        def task(shard, m, k=k):
            rng = make_rng(seed, shard)
            z, steps, capped = _walk_batch(lambda y: fam.inner_distance(k, y), lambda y: fam.contains(k, y),
                                           x, m, s, beta, rng, MAX_STEPS)
            hit = d.contains(z) & ~capped
            return hit.astype(float), steps, int(capped.sum())

        res = _run_shards(task, n_samples, shards, threads)
        est = _estimate(np.concatenate([r[0] for r in res]), np.concatenate([r[1] for r in res]))
        p.append(est.mean)
        err.append(est.stderr)
    return AnnulusMass(fam.offsets, np.array(p), np.array(err))
