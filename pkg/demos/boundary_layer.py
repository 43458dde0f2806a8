"""How much exit mass lands just inside the boundary?

Start the process at the centre of the unit disk and shrink the domain to
Omega_r = {x : dist(x, boundary) > r}. The probability p(r) that the first exit
from Omega_r lands in the thin layer Omega minus Omega_r goes to zero with r,
and the fitted rate comes out close to r^(1-s). All layers reuse the same
random streams, so differences between neighbouring r are sharp.

    python3 demos/boundary_layer.py
"""
import numpy as np

from fraclap.geometry import AnnulusFamily, Domain
from fraclap.stable_walk import annulus_exit_mass

disk = Domain.ball([0.0, 0.0], 1.0)
offsets = (0.2, 0.1, 0.05, 0.025, 0.0125)
fam = AnnulusFamily(disk, offsets)

for s in (0.25, 0.5, 0.75):
    res = annulus_exit_mass(disk, fam, [0.0, 0.0], s, 100_000, seed=3)
    slope = np.polyfit(np.log(offsets), np.log(res.p), 1)[0]
    cells = "  ".join(f"{p:.4f}" for p in res.p)
    print(f"s={s:4}: p(r) = {cells}   fitted exponent {slope:.2f}")
