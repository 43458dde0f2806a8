"""Exterior data ``F`` described by small JSON-style specs.

Supported kinds::

    {"kind": "constant", "value": 1.0}
    {"kind": "annulus_bump", "center": [0, 0], "radius": 1.5, "width": 0.3, "amplitude": 1.0}
    {"kind": "angular_bump", "center": [0, 0], "radius": 1.5, "width": 0.3,
     "direction": [1, 0], "aperture": 1.0, "amplitude": 1.0}
    {"kind": "halfspace", "normal": [1, 0], "offset": 3.0, "amplitude": 1.0}
    {"kind": "truncated", "base": {...}, "center": [0, 0], "radius": 10.0}
    {"kind": "sum", "terms": [{...}, {...}]}

The bumps use the profile ``exp(1 - 1 / (1 - t^2))`` (peak value one).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_KEYS = {
    "constant": ({"value"}, set()),
    "annulus_bump": ({"center", "radius", "width"}, {"amplitude"}),
    "angular_bump": ({"center", "radius", "width", "direction", "aperture"}, {"amplitude"}),
    "halfspace": ({"normal", "offset"}, {"amplitude"}),
    "truncated": ({"base", "center", "radius"}, set()),
    "sum": ({"terms"}, set()),
}


def unit_bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = np.abs(t) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
    return out


@dataclass(frozen=True)
class ExteriorData:
    """Callable exterior data built from a spec dict; see the module docstring."""

    spec: dict

    def __post_init__(self):
        _validate(self.spec)

    def __call__(self, y) -> np.ndarray:
        return _evaluate(self.spec, np.asarray(y, dtype=float))

    @property
    def support_radius(self) -> float:
        """Radius about the origin outside which ``F`` vanishes (``inf`` when unbounded)."""
        return _support(self.spec)

    def is_zero(self) -> bool:
        sp = self.spec
        if sp["kind"] == "constant":
            return sp["value"] == 0
        if sp["kind"] == "sum":
            return all(ExteriorData(t).is_zero() for t in sp["terms"])
        return sp.get("amplitude", 1.0) == 0


def _validate(sp):
    if not isinstance(sp, dict) or sp.get("kind") not in _KEYS:
        raise ValueError(f"unknown exterior data kind in {sp!r}")
    required, optional = _KEYS[sp["kind"]]
    keys = set(sp) - {"kind"}
    if not required <= keys or not keys <= required | optional:
        raise ValueError(f"{sp['kind']} data expects {sorted(required)} (+ optional {sorted(optional)}), got {sorted(keys)}")
    if sp["kind"] in ("annulus_bump", "angular_bump") and not (0 < sp["width"] < sp["radius"]):
        raise ValueError("bump width must be positive and smaller than its radius")
    if sp["kind"] == "sum":
        for t in sp["terms"]:
            _validate(t)
    if sp["kind"] == "truncated":
        _validate(sp["base"])


def _evaluate(sp, y):
    kind = sp["kind"]
    amp = sp.get("amplitude", 1.0)
    if kind == "constant":
        return np.full(y.shape[:-1], float(sp["value"]))
    if kind == "sum":
        return sum(_evaluate(t, y) for t in sp["terms"])
    if kind == "truncated":
        inside = np.linalg.norm(y - np.asarray(sp["center"]), axis=-1) < sp["radius"]
        return np.where(inside, _evaluate(sp["base"], y), 0.0)
    if kind == "halfspace":
        nu = np.asarray(sp["normal"], dtype=float)
        nu = nu / np.linalg.norm(nu)
        return amp * ((y @ nu) > sp["offset"]).astype(float)
    rel = y - np.asarray(sp["center"], dtype=float)
    r = np.linalg.norm(rel, axis=-1)
    radial = unit_bump((r - sp["radius"]) / sp["width"])
    if kind == "annulus_bump":
        return amp * radial
    e = np.asarray(sp["direction"], dtype=float)
    e = e / np.linalg.norm(e)
    cosang = np.clip((rel @ e) / np.maximum(r, 1e-300), -1.0, 1.0)
    return amp * radial * unit_bump(np.arccos(cosang) / sp["aperture"])


def _support(sp) -> float:
    kind = sp["kind"]
    if kind in ("constant", "halfspace"):
        return np.inf
    if kind == "sum":
        return max(_support(t) for t in sp["terms"])
    if kind == "truncated":
        return float(np.linalg.norm(sp["center"]) + sp["radius"])
    return float(np.linalg.norm(sp["center"]) + sp["radius"] + sp["width"])


def smooth_cutoff_extension(F: ExteriorData, domain, coords: np.ndarray, eps: float) -> np.ndarray:
    """``F * chi`` sampled at ``coords`` with ``chi = 1`` on the exterior, fading to 0 inside.

    ``chi`` rises smoothly from 0 at depth ``eps`` inside the domain to 1 on
    the boundary, so ``F * chi`` is one admissible extension of ``F|_{exterior}``.
    """
    depth = np.where(domain.contains(coords), domain.boundary_distance(coords), 0.0)
    t = np.clip(depth / eps, 0.0, 1.0)
    return F(coords) * _smooth_step(1.0 - t)


def _smooth_step(x):
    """C-infinity step: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    def f(z):
        return np.where(z > 0, np.exp(-1.0 / np.maximum(z, 1e-300)), 0.0)
    return f(x) / (f(x) + f(1.0 - x))
