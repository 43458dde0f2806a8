"""Exterior Galerkin construction of the fractional Dirichlet solution.

The unknown is a density ``phi`` on the exterior of the domain, expanded in
radial Wendland bumps ``psi_j``. Requiring ``I_{2s} phi = F`` weakly on the
exterior gives the symmetric system

    A c = b,   A_jk = <psi_j, I_{2s} psi_k>,   b_j = <psi_j, F>,

and ``u = I_{2s} phi`` is then s-harmonic inside the domain, because
``Delta^s u = phi`` vanishes there.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigvalsh

from ._bump_kernels import interaction, wendland
from .core_types import GridFunction, NumericalContractError, SolverParams, grid_coords
from .exterior_data import smooth_cutoff_extension, unit_bump
from .frac_ops import delta_s_fourier
from .geometry import Domain, GeometryError, exterior_annulus_nodes, graded_exterior_nodes
from .lp_norms import LPFilterBank, dual_pairing, hs_norm_lp
from .poisson_kernel import sphere_rule

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class ExteriorBasis:
    """Bump centres and support radii covering part of the exterior.

    ``layout`` is ``"lattice"`` (one spacing ``h``, support radius ``h``) or
    ``"graded"`` (dyadic sizes shrinking toward the boundary, ``h`` is the
    smallest size).
    """

    domain: Domain
    nodes: np.ndarray
    radii: np.ndarray
    h: float
    layout: str
    R_trunc: float

    def __post_init__(self):
        if len(self.nodes) != len(self.radii):
            raise ValueError("nodes and radii differ in length")
        if len(self.nodes) and np.any(self.domain.boundary_distance(self.nodes) <= self.radii):
            raise GeometryError("a bump support reaches the domain")
        if len(self.nodes) and np.any(self.domain.contains(self.nodes)):
            raise GeometryError("a bump centre lies inside the domain")

    def __len__(self):
        return len(self.nodes)

    @property
    def n(self) -> int:
        return self.domain.n

    @classmethod
    def lattice(cls, d: Domain, R_trunc: float, h: float, box_length: float | None = None) -> "ExteriorBasis":
        """Uniform lattice of spacing ``h``; nodes closer than ``h`` to the boundary are dropped."""
        pts = exterior_annulus_nodes(d, R_trunc, h, box_length)
        pts = pts[d.boundary_distance(pts) > h * (1 + 1e-9)]
        return cls(d, pts, np.full(len(pts), float(h)), float(h), "lattice", float(R_trunc))

    @classmethod
    def graded(cls, d: Domain, R_trunc: float, h_min: float, h_bulk: float = 0.1,
               data_radius: float | None = None) -> "ExteriorBasis":
        """Dyadically graded layout (see :func:`fraclap.geometry.graded_exterior_nodes`)."""
        if data_radius is None:
            data_radius = R_trunc / 2
        pts, radii = graded_exterior_nodes(d, R_trunc, h_min, h_bulk, data_radius)
        return cls(d, pts, radii, float(h_min), "graded", float(R_trunc))

    def bump_values(self, j: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return wendland(np.linalg.norm(x - self.nodes[j], axis=-1) / self.radii[j])


@dataclass
class GramSystem:
    """Gram matrix of the bump basis under ``I_{2s}``, with optional right-hand side."""

    basis: ExteriorBasis
    s: float
    matrix: np.ndarray
    rhs: np.ndarray | None = None
    _factor: tuple | None = field(default=None, repr=False)

    def factor(self):
        if self._factor is None:
            try:
                self._factor = cho_factor(self.matrix, lower=True)
            except np.linalg.LinAlgError as exc:
                raise NumericalContractError("Gram matrix is not positive definite") from exc
        return self._factor

    def min_eigenvalue(self) -> float:
        return float(eigvalsh(self.matrix, subset_by_index=[0, 0])[0])

    def condition_number(self) -> float:
        ev = eigvalsh(self.matrix)
        return float(ev[-1] / ev[0])

    def asymmetry(self) -> float:
        return float(np.abs(self.matrix - self.matrix.T).max())


def _pair_distances(nodes: np.ndarray) -> np.ndarray:
    sq = (nodes ** 2).sum(1)
    d2 = sq[:, None] + sq[None, :] - 2 * nodes @ nodes.T
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(np.maximum(d2, 0.0))


def assemble_gram(basis: ExteriorBasis, s: float, F=None) -> GramSystem:
    """Assemble ``A_jk = <psi_j, I_{2s} psi_k>`` (and ``b`` when ``F`` is given).

    Entries are evaluated from the radial Hankel tables (overlapping or close
    bumps) and the closed-form multipole series (well separated bumps); the
    matrix is symmetrized exactly by computing the upper triangle only.
    """
    B = interaction(basis.n, s)
    J = len(basis)
    A = np.empty((J, J))
    if J:
        iu = np.triu_indices(J)
        D = _pair_distances(basis.nodes)[iu]
        vals = B.pair(basis.radii[iu[0]], basis.radii[iu[1]], D)
        A[iu] = vals
        A[(iu[1], iu[0])] = vals
    system = GramSystem(basis, float(s), A)
    if F is not None:
        system.rhs = load_vector(basis, F)
    return system


def _ball_rule(n: int):
    r, wr = np.polynomial.legendre.leggauss(16)
    r, wr = (r + 1) / 2, wr / 2
    dirs, wd = sphere_rule(n, 32 if n == 2 else 16)
    pts = (r[:, None, None] * dirs[None]).reshape(-1, n)
    w = (wr[:, None] * r[:, None] ** (n - 1) * wendland(r)[:, None] * wd[None]).ravel()
    return pts, w


def load_vector(basis: ExteriorBasis, F) -> np.ndarray:
    """``b_j = <psi_j, F>`` by a polar Gauss rule on each bump support."""
    pts, w = _ball_rule(basis.n)
    out = np.empty(len(basis))
    step = 4096
    for i in range(0, len(basis), step):
        c, r = basis.nodes[i:i + step], basis.radii[i:i + step]
        y = c[:, None, :] + r[:, None, None] * pts[None]
        vals = np.asarray(F(y), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("exterior data returned non-finite values")
        out[i:i + step] = (vals * w).sum(1) * r ** basis.n
    return out


def solve_exterior(system: GramSystem, rhs=None) -> np.ndarray:
    """Solve ``A c = b`` by Cholesky with iterative refinement.

    ``rhs`` defaults to ``system.rhs`` and may hold several columns. Raises
    :class:`NumericalContractError` if the factorization fails or the relative
    residual stays above 1e-10.
    """
    b = system.rhs if rhs is None else np.asarray(rhs, dtype=float)
    if b is None:
        raise ValueError("no right-hand side")
    fac = system.factor()
    c = cho_solve(fac, b)
    bnorm = np.linalg.norm(b, axis=0)
    for _ in range(3):
        r = b - system.matrix @ c
        rel = np.linalg.norm(r, axis=0) / np.where(bnorm > 0, bnorm, 1.0)
        if np.all(rel < RESIDUAL_TOL):
            return c
        c = c + cho_solve(fac, r)
    r = b - system.matrix @ c
    rel = np.linalg.norm(r, axis=0) / np.where(bnorm > 0, bnorm, 1.0)
    if np.any(rel >= RESIDUAL_TOL):
        raise NumericalContractError(f"relative residual {rel.max():.2e} exceeds {RESIDUAL_TOL}")
    return c


def relative_residual(system: GramSystem, c, rhs=None) -> float:
    b = system.rhs if rhs is None else rhs
    bn = np.linalg.norm(b)
    return float(np.linalg.norm(system.matrix @ c - b) / bn) if bn > 0 else float(np.linalg.norm(system.matrix @ c))


def evaluate_u(basis: ExteriorBasis, c, points, s: float) -> np.ndarray:
    """``u(x) = sum_j c_j (I_{2s} psi_j)(x)`` at arbitrary points (shape ``(..., n)``)."""
    B = interaction(basis.n, s)
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, basis.n)
    c = np.asarray(c, dtype=float)
    out = np.zeros(len(flat))
    if len(basis) == 0 or not np.any(c):
        return out.reshape(pts.shape[:-1])
    step = max(1, (1 << 21) // len(basis))
    for i in range(0, len(flat), step):
        x = flat[i:i + step]
        dist = np.sqrt(np.maximum(((x ** 2).sum(1)[:, None] + (basis.nodes ** 2).sum(1)[None]
                                   - 2 * x @ basis.nodes.T), 0.0))
        V = B.potential(np.broadcast_to(basis.radii, dist.shape), dist)
        out[i:i + step] = V @ c
    return out.reshape(pts.shape[:-1])


def reconstruct_u(basis: ExteriorBasis, c, params: SolverParams) -> GridFunction:
    """Sample ``u = I_{2s} phi`` on the grid of ``params`` (coordinates in ``[0, L)^n``)."""
    return GridFunction(params, evaluate_u(basis, c, grid_coords(params), params.s))


def trace_error(basis: ExteriorBasis, c, F, points, s: float) -> float:
    """``max |u - F|`` over exterior sample points."""
    pts = np.asarray(points, dtype=float)
    return float(np.abs(evaluate_u(basis, c, pts, s) - F(pts)).max())


@dataclass(frozen=True)
class GalerkinSolution:
    basis: ExteriorBasis
    system: GramSystem
    coefficients: np.ndarray

    def __call__(self, points) -> np.ndarray:
        return evaluate_u(self.basis, self.coefficients, points, self.system.s)


def solve_galerkin(basis: ExteriorBasis, s: float, F) -> GalerkinSolution:
    """Assemble, solve and wrap the Galerkin solution for data ``F``."""
    system = assemble_gram(basis, s, F)
    return GalerkinSolution(basis, system, solve_exterior(system))


def default_test_bumps(d: Domain, params: SolverParams):
    """Interior test centres and radii: one at the centre and ``2n`` around it."""
    c = d.center
    depth = d.boundary_distance(c)
    centres = [c] + [c + sgn * 0.45 * depth * e for e in np.eye(d.n) for sgn in (1, -1)]
    radii = [0.5 * depth] + [0.4 * depth] * (2 * d.n)
    return np.array(centres), np.array(radii)


def _grid_bump(params: SolverParams, centre, radius) -> GridFunction:
    x = grid_coords(params)
    return GridFunction(params, unit_bump(np.linalg.norm(x - centre, axis=-1) / radius))


def weak_residual(u: GridFunction, d: Domain, s: float, bank: LPFilterBank, tests=None) -> float:
    """Largest normalized pairing ``|<Delta^s u, psi>| / (|u|_{H^s} |psi|_{H^s})`` over interior bumps.

    Norms use the ``(2 pi)``-normalized weights, so the value is at most 1
    for any ``u`` by Cauchy-Schwarz. ``tests`` is ``(centres, radii)``; each
    support must stay at least one grid cell inside the domain.
    """
    p = u.params
    centres, radii = default_test_bumps(d, p) if tests is None else tests
    lap = delta_s_fourier(u, s)
    unorm = hs_norm_lp(u, s, bank, normalized=True)
    if unorm == 0:
        return 0.0
    worst = 0.0
    for centre, radius in zip(centres, radii):
        if d.boundary_distance(centre) - radius <= p.h or not d.contains(centre):
            raise GeometryError("test bump support touches the boundary")
        psi = _grid_bump(p, centre, radius)
        pairing = dual_pairing(lap, psi, bank)
        worst = max(worst, abs(pairing) / (unorm * hs_norm_lp(psi, s, bank, normalized=True)))
    return worst


def extension_norm(F, d: Domain, params: SolverParams, s: float, bank: LPFilterBank,
                   cutoffs=(0.05, 0.1, 0.2, 0.4)) -> float:
    """Upper bound for the restriction norm of ``F``: the smallest ``H^s`` norm over cutoff extensions."""
    x = grid_coords(params)
    depth = d.boundary_distance(d.center)
    norms = [hs_norm_lp(GridFunction(params, smooth_cutoff_extension(F, d, x, eps * depth)), s, bank)
             for eps in cutoffs]
    return float(min(norms))


def stability_ratio(u: GridFunction, F, d: Domain, s: float, bank: LPFilterBank) -> float:
    """``|u|_{H^s} / |F|`` with the restriction norm bounded through :func:`extension_norm`."""
    unorm = hs_norm_lp(u, s, bank)
    fnorm = extension_norm(F, d, u.params, s, bank)
    if fnorm == 0:
        if unorm > 0:
            raise NumericalContractError("zero exterior data produced a nonzero solution")
        return 0.0
    return unorm / fnorm


@dataclass(frozen=True)
class RefinementEstimate:
    """Probe values on three halving levels and the error estimate for the finest.

    ``order`` is the observed convergence order, clamped to [0.25, 2] and
    capped by ``max_order`` when given; the estimate is
    ``|u_fine - u_mid| / (2^order - 1)`` per probe.
    """

    h: tuple
    values: np.ndarray
    observed_order: float
    order: float
    error: np.ndarray
    extrapolated: np.ndarray


def refinement_estimate(h_levels, values, max_order: float | None = None) -> RefinementEstimate:
    """Richardson-style error estimate from probe values on three halving levels.

    For the exterior Galerkin solver pass ``max_order = 1 - s``: the density
    blows up like ``delta^-s`` at the boundary, and the layer of width ~h that
    no bump reaches carries mass ~``h^(1-s)``, so the asymptotic order can be
    no better than ``1 - s`` even when coarse levels look first order.
    """
    v = np.asarray(values, dtype=float)
    if v.shape[0] != 3:
        raise ValueError("need values on exactly three levels")
    d1 = np.linalg.norm(v[0] - v[1])
    d2 = np.linalg.norm(v[1] - v[2])
    observed = float(np.log2(d1 / d2)) if d1 > 0 and d2 > 0 else 1.0
    p = float(np.clip(observed, 0.25, 2.0))
    if max_order is not None:
        p = min(p, float(max_order))
    err = np.abs(v[2] - v[1]) / (2 ** p - 1)
    extrap = v[2] + (v[2] - v[1]) / (2 ** p - 1)
    return RefinementEstimate(tuple(h_levels), v, observed, p, err, extrap)


def galerkin_refinement(d: Domain, s: float, F, probes, h_finest: float, R_trunc: float = 10.0,
                        h_bulk: float = 0.1, data_radius: float | None = None):
    """Solve on ``h_finest * (4, 2, 1)`` and estimate the error of the finest solution.

    Returns ``(finest_solution, RefinementEstimate)``.
    """
    levels = (4 * h_finest, 2 * h_finest, h_finest)
    vals, sol = [], None
    for h in levels:
        basis = ExteriorBasis.graded(d, R_trunc, h, h_bulk, data_radius)
        sol = solve_galerkin(basis, s, F)
        vals.append(sol(probes))
    return sol, refinement_estimate(levels, vals, max_order=1 - s)
