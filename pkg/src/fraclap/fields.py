"""Smooth test fields on the periodic grid, described by JSON-style specs.

Supported kinds::

    {"kind": "gaussian", "center": [4, 4], "width": 0.5}
    {"kind": "gaussian", "center": [4, 4], "width": 0.4, "scale": [1, 1.6], "amplitude": 2.0}
    {"kind": "hermite", "center": [4, 4], "width": 0.5, "axis": 0}
    {"kind": "sum", "terms": [{...}, {...}]}

``hermite`` is ``(x - c)_axis`` times a Gaussian and has zero mean by symmetry.
"""
from __future__ import annotations

import numpy as np

from .core_types import GridFunction, SolverParams

_KEYS = {
    "gaussian": ({"center", "width"}, {"scale", "amplitude"}),
    "hermite": ({"center", "width", "axis"}, {"amplitude"}),
    "sum": ({"terms"}, set()),
}


def validate_field(spec: dict, n: int) -> None:
    if not isinstance(spec, dict) or spec.get("kind") not in _KEYS:
        raise ValueError(f"unknown field kind in {spec!r}")
    required, optional = _KEYS[spec["kind"]]
    keys = set(spec) - {"kind"}
    if not required <= keys or not keys <= required | optional:
        raise ValueError(f"{spec['kind']} field expects {sorted(required)} (+ optional {sorted(optional)}), got {sorted(keys)}")
    if spec["kind"] == "sum":
        if not spec["terms"]:
            raise ValueError("sum field needs at least one term")
        for t in spec["terms"]:
            validate_field(t, n)
        return
    if len(spec["center"]) != n:
        raise ValueError(f"field center must have {n} coordinates")
    if not spec["width"] > 0:
        raise ValueError("field width must be positive")
    if spec["kind"] == "hermite" and spec["axis"] not in range(n):
        raise ValueError(f"hermite axis must be in 0..{n - 1}")


def _evaluate(spec: dict, x: np.ndarray) -> np.ndarray:
    if spec["kind"] == "sum":
        return sum(_evaluate(t, x) for t in spec["terms"])
    rel = x - np.asarray(spec["center"], dtype=float)
    amp = spec.get("amplitude", 1.0)
    w = spec["width"]
    if spec["kind"] == "gaussian":
        scaled = rel / np.asarray(spec.get("scale", np.ones(x.shape[-1])), dtype=float)
        return amp * np.exp(-(scaled ** 2).sum(-1) / (2 * w ** 2))
    return amp * rel[..., spec["axis"]] * np.exp(-(rel ** 2).sum(-1) / (2 * w ** 2))


def smooth_field(params: SolverParams, spec: dict, mean_free: bool = False) -> GridFunction:
    """Sample the field on the grid; ``mean_free`` removes the grid mean exactly."""
    validate_field(spec, params.n)
    f = GridFunction.from_function(params, lambda x: _evaluate(spec, x))
    if mean_free:
        f = GridFunction(params, f.values - f.values.mean())
    return f


def default_family(params: SolverParams) -> list[dict]:
    """Six smooth fields well inside the central half of the box.

    Widths scale with the box so the family is resolved the same way on any
    ``L`` at fixed ``L / N``.
    """
    c = params.center
    u = params.box_length / 8
    e = np.eye(params.n)
    aniso = np.ones(params.n)
    aniso[-1] = 1.6

    def at(offset):
        return (c + u * np.asarray(offset)).tolist()

    return [
        {"kind": "gaussian", "center": at(np.zeros(params.n)), "width": 0.5 * u},
        {"kind": "gaussian", "center": at(-0.4 * e[0] + 0.3 * e[1]), "width": 0.55 * u},
        {"kind": "gaussian", "center": at(np.zeros(params.n)), "width": 0.4 * u, "scale": aniso.tolist()},
        {"kind": "sum", "terms": [
            {"kind": "gaussian", "center": at(-0.5 * e[0]), "width": 0.4 * u},
            {"kind": "gaussian", "center": at(0.6 * e[0]), "width": 0.5 * u, "amplitude": -0.5},
        ]},
        {"kind": "hermite", "center": at(np.zeros(params.n)), "width": 0.5 * u, "axis": 0},
        {"kind": "gaussian", "center": at(np.zeros(params.n)), "width": 0.3 * u},
    ]
