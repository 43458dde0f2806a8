"""Command-line entry point.

Usage::

    fraclap <command> --config path.json --out dir/ [--seed k] [--threads t]

Every command reads a JSON object, validates it completely (unknown keys are
rejected) and only then computes. Outputs are ``results.csv`` and
``report.json`` in the output directory, written atomically.

Exit codes: 0 success, 1 configuration error (nothing written),
2 numerical contract violation (report written, violations named),
3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .core_types import GridFunction, NumericalContractError, ParameterError, grid_coords, make_params
from .exterior_data import ExteriorData
from .fields import default_family, smooth_field, validate_field
from .frac_ops import delta_s_fourier, delta_s_singular, riesz_fourier
from .galerkin_solver import (ExteriorBasis, assemble_gram, evaluate_u, refinement_estimate,
                              relative_residual, solve_exterior, stability_ratio, weak_residual)
from .geometry import AnnulusFamily, Domain, GeometryError
from .lp_norms import build_filter_bank, gagliardo_seminorm, hs_norm_direct, hs_norm_lp
from .poisson_kernel import check_kernel_bounds, make_ball_kernel, solve_ball_quadrature
from .stable_walk import annulus_exit_mass, wos_estimate

COMMANDS = ("norms", "fraclap-check", "kernel-check", "solve-wos", "solve-galerkin",
            "solve-ball-quadrature", "compare", "annulus-decay")

_REQUIRED = object()


class ConfigError(ValueError):
    """Invalid command line or configuration file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------- validation

def _number(v, name, lo=None, hi=None, open_interval=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise ConfigError(f"{name} must be a finite number")
    if open_interval and not (lo < v < hi):
        raise ConfigError(f"{name} must lie in ({lo}, {hi})")
    if not open_interval and ((lo is not None and v < lo) or (hi is not None and v > hi)):
        raise ConfigError(f"{name} must lie in [{lo}, {hi}]")
    return float(v)


def _positive(v, name):
    v = _number(v, name)
    if v <= 0:
        raise ConfigError(f"{name} must be positive")
    return v


def _count(v, name, minimum=1):
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}")
    return v


def _numbers(v, name):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{name} must be a non-empty list of numbers")
    return [_number(t, f"{name} entry") for t in v]


def _points(v, name, n):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{name} must be a non-empty list of points")
    out = [_numbers(p, f"{name} entry") for p in v]
    if any(len(p) != n for p in out):
        raise ConfigError(f"every entry of {name} needs {n} coordinates")
    return out


def _domain(v, ball_only=False):
    try:
        d = Domain.from_spec(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"domain: {exc}") from exc
    if ball_only and d.shape != "ball":
        raise ConfigError("this command needs a ball domain")
    return d


def _data(v):
    try:
        return ExteriorData(v)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"F: {exc}") from exc


def _inside(d, pts, name):
    if not np.all(d.contains(np.asarray(pts))):
        raise ConfigError(f"every entry of {name} must lie strictly inside the domain")


def _fields(v, params):
    if not isinstance(v, list) or not v:
        raise ConfigError("functions must be a non-empty list of field specs")
    for spec in v:
        try:
            validate_field(spec, params.n)
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"functions: {exc}") from exc
    return v


def _take(raw: dict, schema: dict, where: str = "config") -> dict:
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")
    out = {}
    for key, default in schema.items():
        if key in raw:
            out[key] = raw[key]
        elif default is _REQUIRED:
            raise ConfigError(f"missing required {where} key {key!r}")
        else:
            out[key] = default
    return out


def _tolerances(raw, defaults: dict) -> dict:
    if raw is None:
        return dict(defaults)
    if not isinstance(raw, dict):
        raise ConfigError("tolerances must be an object")
    tol = _take(raw, defaults, "tolerance")
    return {k: _positive(v, f"tolerance {k}") for k, v in tol.items()}


def _grid(c, n):
    try:
        return make_params(n, c.get("s", 0.5), c["grid_size"], c["box_length"])
    except (ParameterError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


# ------------------------------------------------------------------ commands
#
# Each command is a pair: ``validate(raw) -> cfg`` and
# ``run(cfg, ctx) -> (header, rows, metrics, violations)``. ``cfg`` holds
# both parsed objects (under ``_`` keys) and the JSON echo.

def _v_norms(raw):
    tol = {"partition": 1e-12, "equivalence": 2.0, "gagliardo_spread": 0.02}
    c = _take(raw, {"n": 2, "grid_size": 64, "box_length": 8.0, "alphas": [0.5, 1.0],
                    "functions": None, "tolerances": None})
    c["_params"] = _grid(c, _count(c["n"], "n", 2))
    c["alphas"] = _numbers(c["alphas"], "alphas")
    if any(not 0 < a < 2 for a in c["alphas"]):
        raise ConfigError("alphas must lie in (0, 2)")
    c["functions"] = _fields(c["functions"] or default_family(c["_params"]), c["_params"])
    c["tolerances"] = _tolerances(c["tolerances"], tol)
    return c


def _r_norms(c, ctx):
    p, tol = c["_params"], c["tolerances"]
    bank = build_filter_bank(p)
    nz = np.ones(p.shape, dtype=bool)
    nz[(0,) * p.n] = False
    partition = float(np.abs(sum(bank.multipliers) - 1)[nz].max())
    fams = [smooth_field(p, spec) for spec in c["functions"]]
    rows, violations, metrics = [], [], {"partition_error": partition}
    if partition > tol["partition"]:
        violations.append(f"partition of unity error {partition:.3e} > {tol['partition']}")
    lo, hi = np.inf, 0.0
    for a in c["alphas"]:
        ratios = []
        for i, f in enumerate(fams):
            direct = hs_norm_direct(f, a)
            lp = hs_norm_lp(f, a, bank)
            gag = gagliardo_seminorm(f, a)
            ratios.append(gag ** 2 / direct ** 2)
            lo, hi = min(lo, lp / direct), max(hi, lp / direct)
            rows.append([i, a, lp, direct, gag, lp / direct, ratios[-1]])
        spread = float(np.ptp(ratios) / np.mean(ratios))
        metrics[f"gagliardo_spread_alpha_{a:g}"] = spread
        if spread > tol["gagliardo_spread"]:
            violations.append(f"Gagliardo/Fourier ratio spread {spread:.3e} at alpha={a:g} "
                              f"> {tol['gagliardo_spread']}")
    metrics.update(lp_direct_ratio_min=float(lo), lp_direct_ratio_max=float(hi))
    if lo < 1 / tol["equivalence"] or hi > tol["equivalence"]:
        violations.append(f"LP/direct ratio bracket [{lo:.4f}, {hi:.4f}] exceeds c_eq={tol['equivalence']}")
    header = ["function", "alpha", "hs_lp", "hs_direct", "gagliardo", "lp_over_direct", "gagliardo_sq_over_direct_sq"]
    return header, rows, metrics, violations


def _v_fraclap_check(raw):
    tol = {"definition": 1e-2, "roundtrip": 1e-10, "isometry": 1e-10}
    c = _take(raw, {"n": 2, "grid_size": 64, "box_length": 8.0, "s_values": [0.25, 0.5, 0.75],
                    "sigma_values": [0.5, 1.0], "alpha_values": [0.0, 0.3, 0.6],
                    "functions": None, "tolerances": None})
    c["_params"] = _grid(c, _count(c["n"], "n", 2))
    for key in ("s_values", "sigma_values", "alpha_values"):
        c[key] = _numbers(c[key], key)
    if any(not 0 < s < 1 for s in c["s_values"]):
        raise ConfigError("s_values must lie in (0, 1)")
    if any(not 0 < t < c["_params"].n for t in c["sigma_values"]):
        raise ConfigError("sigma_values must lie in (0, n)")
    if any(a < 0 for a in c["alpha_values"]):
        raise ConfigError("alpha_values must be non-negative")
    c["functions"] = _fields(c["functions"] or default_family(c["_params"])[:5], c["_params"])
    c["tolerances"] = _tolerances(c["tolerances"], tol)
    return c


def _rel(a, b):
    return float(np.linalg.norm(a.values - b.values) / np.linalg.norm(b.values))


def _r_fraclap_check(c, ctx):
    p0, tol = c["_params"], c["tolerances"]
    rows, violations, metrics = [], [], {}
    worst = {"definition": 0.0, "roundtrip": 0.0, "isometry": 0.0}
    for s in c["s_values"]:
        for i, spec in enumerate(c["functions"]):
            errs = []
            for N in (p0.grid_size, 2 * p0.grid_size):
                f = smooth_field(p0.with_grid(N).with_s(s), spec)
                errs.append(_rel(delta_s_singular(f), delta_s_fourier(f)))
                rows.append(["definition", i, s, "", N, errs[-1]])
            worst["definition"] = max(worst["definition"], errs[0])
            if errs[0] > tol["definition"]:
                violations.append(f"definition mismatch {errs[0]:.3e} (s={s}, function {i})")
            if not errs[1] < errs[0]:
                violations.append(f"definition mismatch does not decrease under N->2N (s={s}, function {i})")
            f = smooth_field(p0.with_s(s), spec, mean_free=True)
            rt = _rel(delta_s_fourier(riesz_fourier(f, 2 * s), s), f)
            worst["roundtrip"] = max(worst["roundtrip"], rt)
            rows.append(["roundtrip", i, s, "", p0.grid_size, rt])
            if rt > tol["roundtrip"]:
                violations.append(f"round-trip error {rt:.3e} (s={s}, function {i})")
    bank = build_filter_bank(p0)
    for i, spec in enumerate(c["functions"]):
        f = smooth_field(p0, spec, mean_free=True)
        for sigma in c["sigma_values"]:
            g = riesz_fourier(f, sigma)
            for a in c["alpha_values"]:
                lhs = hs_norm_lp(g, a + sigma, bank, normalized=True)
                rhs = hs_norm_lp(f, a, bank, normalized=True)
                err = abs(lhs - rhs) / rhs
                worst["isometry"] = max(worst["isometry"], err)
                rows.append(["isometry", i, sigma, a, p0.grid_size, err])
                if err > tol["isometry"]:
                    violations.append(f"isometry error {err:.3e} (sigma={sigma}, alpha={a}, function {i})")
    metrics.update({f"max_{k}_error": v for k, v in worst.items()})
    return ["check", "function", "order", "alpha", "grid_size", "value"], rows, metrics, violations


def _v_kernel_check(raw):
    c = _take(raw, {"domain": _REQUIRED, "s": _REQUIRED, "samples": 100_000, "mass_points": None,
                    "bound_seeds": [0, 1, 2], "radial_nodes": 400, "tolerances": None})
    d = _domain(c["domain"], ball_only=True)
    c["s"] = _number(c["s"], "s", 0, 1, open_interval=True)
    c["samples"] = _count(c["samples"], "samples", 10_000)
    c["radial_nodes"] = _count(c["radial_nodes"], "radial_nodes", 16)
    if c["mass_points"] is None:
        c["mass_points"] = _default_interior_points(d, 10)
    c["mass_points"] = _points(c["mass_points"], "mass_points", d.n)
    _inside(d, c["mass_points"], "mass_points")
    if not isinstance(c["bound_seeds"], list) or len(c["bound_seeds"]) < 1:
        raise ConfigError("bound_seeds must be a non-empty list of integers")
    c["bound_seeds"] = [_count(k, "bound_seeds entry", 0) for k in c["bound_seeds"]]
    c["tolerances"] = _tolerances(c["tolerances"], {"mass": 1e-3, "bounds_reproducibility": 0.1})
    c["_domain"] = d
    return c


def _default_interior_points(d: Domain, count: int) -> list:
    """Deterministic points at depths from the centre out to 90% of the radius."""
    c, r = d.center, d.circumradius
    out = []
    for i in range(count):
        ang = 2.399963229728653 * i
        rad = 0.9 * r * i / max(count - 1, 1)
        e = np.zeros(d.n)
        e[0], e[1] = np.cos(ang), np.sin(ang)
        if d.n == 3:
            e = np.array([np.cos(ang) * 0.8, np.sin(ang) * 0.8, 0.6 * (-1) ** i])
        out.append((c + rad * e).tolist())
    return out


def _r_kernel_check(c, ctx):
    d, tol = c["_domain"], c["tolerances"]
    k = make_ball_kernel(d.center, d.circumradius, c["s"])
    one = ExteriorData({"kind": "constant", "value": 1.0})
    rows, violations = [], []
    worst = 0.0
    for x in c["mass_points"]:
        mass = solve_ball_quadrature(k, one, x, radial_nodes=c["radial_nodes"])
        worst = max(worst, abs(mass - 1))
        rows.append(["mass", *x, mass, "", ""])
    if worst > tol["mass"]:
        violations.append(f"kernel mass error {worst:.3e} > {tol['mass']}")
    brackets = []
    for seed in c["bound_seeds"]:
        b = check_kernel_bounds(k, c["samples"], seed=seed)
        brackets.append((b.ratio_min, b.ratio_max))
        rows.append(["bounds", *([""] * d.n), "", b.ratio_min, b.ratio_max])
    br = np.array(brackets)
    if not np.all(np.isfinite(br)) or np.any(br <= 0):
        violations.append("kernel bound bracket is not finite and positive")
    spread = float(max(np.ptp(br[:, 0]) / br[:, 0].min(), np.ptp(br[:, 1]) / br[:, 1].min()))
    if spread > tol["bounds_reproducibility"]:
        violations.append(f"kernel bound brackets vary by {spread:.3e} across seeds")
    metrics = {"max_mass_error": worst, "ratio_min": float(br[:, 0].min()), "ratio_max": float(br[:, 1].max()),
               "bracket_seed_spread": spread, "normalization": k.normalization}
    header = ["row", *[f"x{i}" for i in range(d.n)], "mass", "ratio_min", "ratio_max"]
    return header, rows, metrics, violations


def _v_solve_wos(raw):
    c = _take(raw, {"domain": _REQUIRED, "s": _REQUIRED, "F": _REQUIRED, "points": _REQUIRED,
                    "samples": 100_000, "seed": 0, "beta": 1.0})
    d = _domain(c["domain"])
    c["s"] = _number(c["s"], "s", 0, 1, open_interval=True)
    c["points"] = _points(c["points"], "points", d.n)
    _inside(d, c["points"], "points")
    c["samples"] = _count(c["samples"], "samples", 2)
    c["seed"] = _count(c["seed"], "seed", 0)
    c["beta"] = _number(c["beta"], "beta", 0, 1)
    if c["beta"] == 0:
        raise ConfigError("beta must lie in (0, 1]")
    c["_domain"], c["_F"] = d, _data(c["F"])
    return c


def _r_solve_wos(c, ctx):
    d = c["_domain"]
    rows = []
    for x in c["points"]:
        est = wos_estimate(d, c["_F"], x, c["s"], c["samples"], ctx["seed"], beta=c["beta"], threads=ctx["threads"])
        rows.append([*x, est.mean, est.stderr, est.mean_steps])
    metrics = {"max_stderr": max(r[-2] for r in rows), "mean_steps": float(np.mean([r[-1] for r in rows]))}
    return [*[f"x{i}" for i in range(d.n)], "mean", "stderr", "mean_steps"], rows, metrics, []


def _v_solve_ball_quadrature(raw):
    c = _take(raw, {"domain": _REQUIRED, "s": _REQUIRED, "F": _REQUIRED, "points": _REQUIRED,
                    "radial_nodes": 400})
    d = _domain(c["domain"], ball_only=True)
    c["s"] = _number(c["s"], "s", 0, 1, open_interval=True)
    c["points"] = _points(c["points"], "points", d.n)
    _inside(d, c["points"], "points")
    c["radial_nodes"] = _count(c["radial_nodes"], "radial_nodes", 16)
    c["_domain"], c["_F"] = d, _data(c["F"])
    return c


def _r_solve_ball_quadrature(c, ctx):
    d = c["_domain"]
    k = make_ball_kernel(d.center, d.circumradius, c["s"])
    rows = [[*x, solve_ball_quadrature(k, c["_F"], x, radial_nodes=c["radial_nodes"])] for x in c["points"]]
    return [*[f"x{i}" for i in range(d.n)], "u"], rows, {"points": len(rows)}, []


_GALERKIN_KEYS = {"R_trunc": 10.0, "h": 0.0125, "layout": "graded", "h_bulk": 0.1, "data_radius": None}


def _galerkin_common(c, d):
    c["R_trunc"] = _positive(c["R_trunc"], "R_trunc")
    c["h"] = _positive(c["h"], "h")
    c["h_bulk"] = _positive(c["h_bulk"], "h_bulk")
    if c["layout"] not in ("graded", "lattice"):
        raise ConfigError("layout must be 'graded' or 'lattice'")
    if c["layout"] == "graded" and c["h"] > c["h_bulk"]:
        raise ConfigError("graded layout needs h <= h_bulk")
    if c["data_radius"] is not None:
        c["data_radius"] = _positive(c["data_radius"], "data_radius")
    if c["R_trunc"] <= d.circumradius:
        raise ConfigError("R_trunc must exceed the domain circumradius")


def _basis(c, d, h):
    if c["layout"] == "lattice":
        return ExteriorBasis.lattice(d, c["R_trunc"], h)
    return ExteriorBasis.graded(d, c["R_trunc"], h, c["h_bulk"], c["data_radius"])


def _v_solve_galerkin(raw):
    tol = {"linear_residual": 1e-10, "weak_residual": 5e-3}
    c = _take(raw, {"domain": _REQUIRED, "s": _REQUIRED, "F": _REQUIRED, "probes": _REQUIRED,
                    **_GALERKIN_KEYS, "grid_size": 128, "box_length": None, "tolerances": None})
    d = _domain(c["domain"])
    c["s"] = _number(c["s"], "s", 0, 1, open_interval=True)
    c["probes"] = _points(c["probes"], "probes", d.n)
    _inside(d, c["probes"], "probes")
    _galerkin_common(c, d)
    if c["box_length"] is None:
        c["box_length"] = 8.0 * d.circumradius
    c["box_length"] = _positive(c["box_length"], "box_length")
    c["_params"] = _grid(c, d.n)
    shift = c["_params"].center - d.center
    if not d.translated(shift).fits_in_half_box(c["box_length"]):
        raise ConfigError("domain does not fit the central half of the residual grid")
    c["tolerances"] = _tolerances(c["tolerances"], tol)
    c["_domain"], c["_F"] = d, _data(c["F"])
    return c


def _r_solve_galerkin(c, ctx):
    d, F, s, p, tol = c["_domain"], c["_F"], c["s"], c["_params"], c["tolerances"]
    basis = _basis(c, d, c["h"])
    system = assemble_gram(basis, s, F)
    coef = solve_exterior(system)
    lin = relative_residual(system, coef)
    rows = [[*x, u] for x, u in zip(c["probes"], evaluate_u(basis, coef, np.array(c["probes"]), s))]
    # residual grid: the domain is moved to the box centre, u and F move with it
    shift = p.center - d.center
    dc = d.translated(shift)
    u_grid = GridFunction(p, evaluate_u(basis, coef, grid_coords(p) - shift, s))
    bank = build_filter_bank(p)
    weak = weak_residual(u_grid, dc, s, bank)
    ratio = stability_ratio(u_grid, lambda y: F(y - shift), dc, s, bank)
    metrics = {"unknowns": len(basis), "gram_min_eig": system.min_eigenvalue(),
               "residuals": {"linear_relative": lin, "weak": weak}, "stability_ratio": ratio}
    violations = []
    if not metrics["gram_min_eig"] > 0:
        violations.append(f"Gram matrix not positive definite (min eigenvalue {metrics['gram_min_eig']:.3e})")
    if lin > tol["linear_residual"]:
        violations.append(f"linear residual {lin:.3e} > {tol['linear_residual']}")
    if weak > tol["weak_residual"]:
        violations.append(f"weak residual {weak:.3e} > {tol['weak_residual']}")
    return [*[f"x{i}" for i in range(d.n)], "u"], rows, metrics, violations


def _v_compare(raw):
    tol = {"quadrature": 1e-3, "mc_sigmas": 3.0}
    c = _take(raw, {"domain": _REQUIRED, "s": _REQUIRED, "F": _REQUIRED, "probes": _REQUIRED,
                    "samples": 1_000_000, "seed": 0, "radial_nodes": 400,
                    **{**_GALERKIN_KEYS, "h": 0.00625, "data_radius": 1.8}, "tolerances": None})
    d = _domain(c["domain"], ball_only=True)
    c["s"] = _number(c["s"], "s", 0, 1, open_interval=True)
    c["probes"] = _points(c["probes"], "probes", d.n)
    _inside(d, c["probes"], "probes")
    c["samples"] = _count(c["samples"], "samples", 2)
    c["seed"] = _count(c["seed"], "seed", 0)
    c["radial_nodes"] = _count(c["radial_nodes"], "radial_nodes", 16)
    _galerkin_common(c, d)
    c["tolerances"] = _tolerances(c["tolerances"], tol)
    c["_domain"], c["_F"] = d, _data(c["F"])
    return c


def _r_compare(c, ctx):
    d, F, s, tol = c["_domain"], c["_F"], c["s"], c["tolerances"]
    probes = np.array(c["probes"])
    k = make_ball_kernel(d.center, d.circumradius, s)
    uq = np.array([solve_ball_quadrature(k, F, x, radial_nodes=c["radial_nodes"]) for x in probes])
    wos = [wos_estimate(d, F, x, s, c["samples"], ctx["seed"], threads=ctx["threads"]) for x in probes]
    uw = np.array([e.mean for e in wos])
    sw = np.array([e.stderr for e in wos])
    levels = (4 * c["h"], 2 * c["h"], c["h"])
    vals, unknowns = [], []
    for h in levels:
        basis = _basis(c, d, h)
        system = assemble_gram(basis, s, F)
        vals.append(evaluate_u(basis, solve_exterior(system), probes, s))
        unknowns.append(len(basis))
    est = refinement_estimate(levels, vals, max_order=1 - s)
    ug, eg = vals[-1], est.error
    mc = tol["mc_sigmas"] * sw
    budgets = {"quad_wos": mc + tol["quadrature"], "quad_gal": tol["quadrature"] + eg, "wos_gal": mc + eg}
    deltas = {"quad_wos": np.abs(uq - uw), "quad_gal": np.abs(uq - ug), "wos_gal": np.abs(uw - ug)}
    violations = []
    for pair in deltas:
        for i in np.flatnonzero(deltas[pair] > budgets[pair]):
            violations.append(f"{pair} disagreement {deltas[pair][i]:.3e} > budget {budgets[pair][i]:.3e} "
                              f"at probe {probes[i].tolist()}")
    rows = [[*probes[i], uq[i], uw[i], sw[i], ug[i], eg[i],
             *[deltas[p][i] for p in deltas], *[budgets[p][i] for p in budgets]] for i in range(len(probes))]
    header = [*[f"x{i}" for i in range(d.n)], "u_quadrature", "u_wos", "wos_stderr", "u_galerkin",
              "galerkin_error", *[f"delta_{p}" for p in deltas], *[f"budget_{p}" for p in budgets]]
    metrics = {f"max_delta_{p}": float(v.max()) for p, v in deltas.items()}
    metrics.update(galerkin_observed_order=est.observed_order, galerkin_order=est.order,
                   galerkin_unknowns=unknowns, max_wos_stderr=float(sw.max()))
    return header, rows, metrics, violations


def _v_annulus_decay(raw):
    c = _take(raw, {"domain": _REQUIRED, "s": _REQUIRED, "x": _REQUIRED,
                    "offsets": [0.2, 0.1, 0.05, 0.025], "samples": 200_000, "seed": 0, "beta": 1.0,
                    "tolerances": None})
    d = _domain(c["domain"])
    c["s"] = _number(c["s"], "s", 0, 1, open_interval=True)
    c["x"] = _points([c["x"]], "x", d.n)[0]
    c["offsets"] = _numbers(c["offsets"], "offsets")
    try:
        fam = AnnulusFamily(d, tuple(c["offsets"]))
    except GeometryError as exc:
        raise ConfigError(str(exc)) from exc
    if not fam.contains(0, np.array(c["x"])):
        raise ConfigError("x must lie deeper than the largest offset")
    c["samples"] = _count(c["samples"], "samples", 2)
    c["seed"] = _count(c["seed"], "seed", 0)
    c["beta"] = _number(c["beta"], "beta", 0, 1)
    if c["beta"] == 0:
        raise ConfigError("beta must lie in (0, 1]")
    c["tolerances"] = _tolerances(c["tolerances"], {"mc_sigmas": 3.0})
    c["_domain"], c["_family"] = d, fam
    return c


def _r_annulus_decay(c, ctx):
    res = annulus_exit_mass(c["_domain"], c["_family"], c["x"], c["s"], c["samples"], ctx["seed"],
                            beta=c["beta"], threads=ctx["threads"])
    k = c["tolerances"]["mc_sigmas"]
    violations = []
    for i in range(1, len(res.p)):
        slack = k * np.hypot(res.stderr[i], res.stderr[i - 1])
        if res.p[i] > res.p[i - 1] + slack:
            violations.append(f"p increases from offset {res.offsets[i - 1]} to {res.offsets[i]}")
    rows = [[r, p, e] for r, p, e in zip(res.offsets, res.p, res.stderr)]
    metrics = {"p": res.p.tolist(), "stderr": res.stderr.tolist(), "p_last_over_first": float(res.p[-1] / res.p[0])}
    return ["offset", "p", "stderr"], rows, metrics, violations


_HANDLERS = {
    "norms": (_v_norms, _r_norms),
    "fraclap-check": (_v_fraclap_check, _r_fraclap_check),
    "kernel-check": (_v_kernel_check, _r_kernel_check),
    "solve-wos": (_v_solve_wos, _r_solve_wos),
    "solve-galerkin": (_v_solve_galerkin, _r_solve_galerkin),
    "solve-ball-quadrature": (_v_solve_ball_quadrature, _r_solve_ball_quadrature),
    "compare": (_v_compare, _r_compare),
    "annulus-decay": (_v_annulus_decay, _r_annulus_decay),
}


# ------------------------------------------------------------------- output

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items() if not str(k).startswith("_")}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v) if np.isfinite(v) else str(v)
    return v


def _write_atomic(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _versions():
    return {"fraclap": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run(command: str, config_path, out_dir, seed: int | None = None, threads: int = 1) -> int:
    """Validate, compute and write outputs; returns the process exit code."""
    try:
        if command not in _HANDLERS:
            raise ConfigError(f"unknown command {command!r}")
        if threads < 1:
            raise ConfigError("threads must be at least 1")
        try:
            text = Path(config_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        validate, compute = _HANDLERS[command]
        cfg = validate(raw)
        if seed is not None:
            if "seed" not in cfg:
                raise ConfigError(f"{command} takes no seed")
            cfg["seed"] = _count(seed, "seed", 0)
    except ConfigError as exc:
        print(f"fraclap: configuration error: {exc}", file=sys.stderr)
        return 1

    ctx = {"seed": cfg.get("seed"), "threads": threads}
    out = Path(out_dir)
    report = {"command": command, "config": _jsonable(cfg), "versions": _versions(), "seed": ctx["seed"],
              "threads": threads}
    t0 = time.perf_counter()
    csv_text, code = None, 0
    try:
        header, rows, metrics, violations = compute(cfg, ctx)
        csv_text = _csv_text(header, rows)
        code = 2 if violations else 0
    except (NumericalContractError, GeometryError, ValueError, ArithmeticError) as exc:
        metrics, violations, code = {}, [f"{type(exc).__name__}: {exc}"], 2
    report.update(wall_time=time.perf_counter() - t0, metrics=_jsonable(metrics), violations=violations,
                  status="ok" if code == 0 else "violation")
    try:
        out.mkdir(parents=True, exist_ok=True)
        if csv_text is not None:
            _write_atomic(out / "results.csv", csv_text)
        _write_atomic(out / "report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        print(f"fraclap: I/O error: {exc}", file=sys.stderr)
        return 3
    for v in violations:
        print(f"fraclap: violation: {v}", file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fraclap", description="Fractional Dirichlet problem solvers and checks.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the configured seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads for Monte Carlo shards")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"fraclap: {exc}", file=sys.stderr)
        return 1
    return run(args.command, args.config, args.out, seed=args.seed, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
