"""Solve one exterior Dirichlet problem on the unit disk three independent ways.

The data is a smooth bump on the annulus 1.2 < |y| < 1.8. The ball Poisson
kernel gives a deterministic quadrature answer, walk on spheres gives an
unbiased Monte Carlo estimate with a standard error, and the Galerkin solver
builds u = I_{2s} phi from bumps placed outside the disk. Settings are
lighter than the acceptance run so the script finishes in well under a minute.

    python3 demos/three_solvers.py
"""
import numpy as np

from fraclap.exterior_data import ExteriorData
from fraclap.galerkin_solver import galerkin_refinement
from fraclap.geometry import Domain
from fraclap.poisson_kernel import make_ball_kernel, solve_ball_quadrature
from fraclap.stable_walk import wos_estimate

s = 0.5
disk = Domain.ball([0.0, 0.0], 1.0)
F = ExteriorData({"kind": "annulus_bump", "center": [0, 0], "radius": 1.5, "width": 0.3})
probes = np.array([[0.0, 0.0], [0.5, 0.0], [-0.7, 0.2]])

kernel = make_ball_kernel(disk.center, 1.0, s)
u_quad = [solve_ball_quadrature(kernel, F, x) for x in probes]
u_wos = [wos_estimate(disk, F, x, s, 200_000, seed=1) for x in probes]
sol, est = galerkin_refinement(disk, s, F, probes, h_finest=0.0125, data_radius=1.8)

print(f"Galerkin unknowns on the finest level: {len(sol.basis)}, refinement order used: {est.order:.2f}")
print(f"{'x':>14} {'quadrature':>11} {'walk (+-3 sd)':>20} {'Galerkin (+-est)':>20}")
for x, uq, w, ug, eg in zip(probes, u_quad, u_wos, est.values[-1], est.error):
    print(f"{str(x.tolist()):>14} {uq:11.5f} {w.mean:11.5f} +- {3 * w.stderr:.5f} {ug:11.5f} +- {eg:.5f}")

# From the centre the first ball is the disk itself; elsewhere the heavy-tailed
# jumps still leave the disk within a few balls.
for x, w in zip(probes, u_wos):
    print(f"mean walk length from {x.tolist()}: {w.mean_steps:.2f} balls")
