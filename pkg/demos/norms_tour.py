"""Three ways to measure smoothness of a grid function, side by side.

The Littlewood-Paley norm sums dyadic shells, the direct norm weights the
spectrum by |2 pi xi|^(2 alpha), and the Gagliardo seminorm is a real-space
double sum over second differences. The first two agree within a fixed
bracket; the last one differs from the direct norm by a constant that depends
only on alpha, so the ratio column should barely move from row to row.

    python3 demos/norms_tour.py
"""
from fraclap.core_types import make_params
from fraclap.fields import default_family, smooth_field
from fraclap.lp_norms import build_filter_bank, gagliardo_seminorm, hs_norm_direct, hs_norm_lp

params = make_params(2, 0.5, 64, 8.0)
bank = build_filter_bank(params)

for alpha in (0.5, 1.0):
    print(f"alpha = {alpha}")
    print(f"  {'field':<10} {'LP / direct':>12} {'Gagliardo^2 / direct^2':>24}")
    for spec in default_family(params):
        f = smooth_field(params, spec)
        direct = hs_norm_direct(f, alpha)
        lp_ratio = hs_norm_lp(f, alpha, bank) / direct
        g_ratio = gagliardo_seminorm(f, alpha) ** 2 / direct ** 2
        print(f"  {spec['kind']:<10} {lp_ratio:12.4f} {g_ratio:24.4f}")
