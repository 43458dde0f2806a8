"""Bounded domains, boundary distance and exterior node layouts.

All queries are vectorized over a trailing coordinate axis: a point array of
shape ``(..., n)`` produces results of shape ``(...)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BOUNDARY_EPS = 1e-12


class GeometryError(ValueError):
    """Invalid domain description or node request."""


@dataclass(frozen=True)
class Domain:
    """A ball, an axis-aligned box, or (in 2-D) a simple polygon.

    Use :meth:`ball`, :meth:`box`, :meth:`polygon` or :meth:`from_spec`
    rather than the raw constructor.
    """

    shape: str
    data: dict = field(compare=False)
    n: int

    @classmethod
    def ball(cls, center, radius: float) -> "Domain":
        c = np.asarray(center, dtype=float)
        if c.ndim != 1 or c.size not in (2, 3):
            raise GeometryError("ball center must have 2 or 3 coordinates")
        if not radius > 0:
            raise GeometryError("ball radius must be positive")
        return cls("ball", {"center": c, "radius": float(radius)}, c.size)

    @classmethod
    def box(cls, lo, hi) -> "Domain":
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or lo.size not in (2, 3):
            raise GeometryError("box corners must have matching 2 or 3 coordinates")
        if np.any(lo >= hi):
            raise GeometryError("box requires lo < hi componentwise")
        return cls("box", {"lo": lo, "hi": hi}, lo.size)

    @classmethod
    def polygon(cls, vertices) -> "Domain":
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise GeometryError("polygon needs at least three 2-D vertices")
        if _signed_area(v) <= 0:
            raise GeometryError("polygon must be positively oriented (counter-clockwise)")
        if not _is_simple(v):
            raise GeometryError("polygon edges must not intersect")
        return cls("polygon", {"vertices": v}, 2)

    @classmethod
    def from_spec(cls, spec: dict) -> "Domain":
        """Build from a JSON-style dict such as ``{"shape": "ball", "center": [0, 0], "radius": 1}``."""
        spec = dict(spec)
        kind = spec.pop("shape", None)
        expected = {"ball": {"center", "radius"}, "box": {"lo", "hi"}, "polygon": {"vertices"}}
        if kind not in expected:
            raise GeometryError(f"unknown domain shape {kind!r}")
        if set(spec) != expected[kind]:
            raise GeometryError(f"{kind} domain expects keys {sorted(expected[kind])}, got {sorted(spec)}")
        return getattr(cls, kind)(**spec)

    def translated(self, offset) -> "Domain":
        off = np.asarray(offset, dtype=float)
        if self.shape == "ball":
            return Domain.ball(self.data["center"] + off, self.data["radius"])
        if self.shape == "box":
            return Domain.box(self.data["lo"] + off, self.data["hi"] + off)
        return Domain.polygon(self.data["vertices"] + off)

    def to_spec(self) -> dict:
        out = {"shape": self.shape}
        out.update({k: np.asarray(v).tolist() if isinstance(v, np.ndarray) else v
                    for k, v in self.data.items()})
        return out

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box ``(lo, hi)``."""
        if self.shape == "ball":
            c, r = self.data["center"], self.data["radius"]
            return c - r, c + r
        if self.shape == "box":
            return self.data["lo"].copy(), self.data["hi"].copy()
        v = self.data["vertices"]
        return v.min(axis=0), v.max(axis=0)

    @property
    def center(self) -> np.ndarray:
        if self.shape == "ball":
            return self.data["center"].copy()
        lo, hi = self.bounds
        return (lo + hi) / 2

    @property
    def circumradius(self) -> float:
        """Radius of the smallest ball about :attr:`center` containing the domain."""
        if self.shape == "ball":
            return self.data["radius"]
        if self.shape == "box":
            return float(np.linalg.norm(self.data["hi"] - self.data["lo"]) / 2)
        return float(np.linalg.norm(self.data["vertices"] - self.center, axis=1).max())

    def fits_in_half_box(self, box_length: float) -> bool:
        lo, hi = self.bounds
        return bool(np.all(lo > box_length / 4) and np.all(hi < 3 * box_length / 4))

    def _signed(self, x: np.ndarray) -> np.ndarray:
        """Signed distance, positive inside."""
        if self.shape == "ball":
            return self.data["radius"] - np.linalg.norm(x - self.data["center"], axis=-1)
        if self.shape == "box":
            lo, hi = self.data["lo"], self.data["hi"]
            inner = np.minimum(x - lo, hi - x)
            inside = np.all(inner > 0, axis=-1)
            outside_gap = np.linalg.norm(np.maximum(-inner, 0), axis=-1)
            return np.where(inside, inner.min(axis=-1), -outside_gap)
        v = self.data["vertices"]
        dist = _edge_distance(x, v)
        return np.where(_winding_inside(x, v), dist, -dist)

    def contains(self, x) -> np.ndarray | bool:
        """True for points of the open domain; points within 1e-12 of the boundary are excluded."""
        x = self._points(x)
        out = self._signed(x) > BOUNDARY_EPS
        return bool(out) if out.ndim == 0 else out

    def boundary_distance(self, x) -> np.ndarray | float:
        """Euclidean distance to the boundary, for interior and exterior points alike."""
        x = self._points(x)
        out = np.abs(self._signed(x))
        return float(out) if out.ndim == 0 else out

    def _points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise GeometryError(f"points must have {self.n} coordinates")
        return x


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_cross(p1, p2, q1, q2) -> bool:
    d1, d2 = _cross(q1, q2, p1), _cross(q1, q2, p2)
    d3, d4 = _cross(p1, p2, q1), _cross(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _is_simple(v: np.ndarray) -> bool:
    m = len(v)
    for i in range(m):
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue
            if _segments_cross(v[i], v[(i + 1) % m], v[j], v[(j + 1) % m]):
                return False
    return True


def _edge_distance(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    a = v
    b = np.roll(v, -1, axis=0)
    ab = b - a
    xa = x[..., None, :] - a
    t = np.clip((xa * ab).sum(-1) / (ab ** 2).sum(-1), 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(x[..., None, :] - closest, axis=-1).min(axis=-1)


def _winding_inside(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    a = v
    b = np.roll(v, -1, axis=0)
    px, py = x[..., 0, None], x[..., 1, None]
    upward = (a[:, 1] <= py) & (b[:, 1] > py)
    downward = (a[:, 1] > py) & (b[:, 1] <= py)
    side = (b[:, 0] - a[:, 0]) * (py - a[:, 1]) - (px - a[:, 0]) * (b[:, 1] - a[:, 1])
    winding = (upward & (side > 0)).sum(-1) - (downward & (side < 0)).sum(-1)
    return winding != 0


@dataclass(frozen=True)
class AnnulusFamily:
    """Inner subdomains ``Omega_k = {x in Omega : delta(x) > r_k}`` for decreasing offsets."""

    domain: Domain
    offsets: tuple

    def __post_init__(self):
        r = np.asarray(self.offsets, dtype=float)
        if r.ndim != 1 or len(r) == 0 or np.any(r <= 0):
            raise GeometryError("offsets must be a non-empty list of positive numbers")
        if np.any(np.diff(r) >= 0):
            raise GeometryError("offsets must be strictly decreasing")
        object.__setattr__(self, "offsets", tuple(float(t) for t in r))

    def __len__(self):
        return len(self.offsets)

    def contains(self, k: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.domain.contains(x) & (self.domain.boundary_distance(x) > self.offsets[k])

    def inner_distance(self, k: int, x) -> np.ndarray:
        """Radius of a ball about ``x`` that stays inside ``Omega_k``.

        Exact for balls; a lower bound in general because ``delta`` is 1-Lipschitz.
        """
        return self.domain.boundary_distance(x) - self.offsets[k]


def _lattice(center: np.ndarray, radius: float, h: float) -> np.ndarray:
    m = int(np.ceil(radius / h))
    k = np.arange(-m, m + 1) * h
    mesh = np.meshgrid(*([k] * center.size), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1) + center


def exterior_annulus_nodes(d: Domain, R_trunc: float, h: float, box_length: float | None = None) -> np.ndarray:
    """Lattice nodes of spacing ``h`` in ``B(center, R_trunc)`` outside the closed domain.

    The lattice is anchored at the domain center. Each node is farther than
    ``h/2`` from the boundary. When ``box_length`` is given the annulus must
    fit in the central half of that periodic box.
    """
    if not h > 0:
        raise GeometryError("spacing must be positive")
    c = d.center
    if box_length is not None:
        if np.any(c - R_trunc <= box_length / 4) or np.any(c + R_trunc >= 3 * box_length / 4):
            raise GeometryError("annulus escapes the central half-box")
    pts = _lattice(c, R_trunc, h)
    keep = (np.linalg.norm(pts - c, axis=1) < R_trunc) & ~d.contains(pts)
    pts = pts[keep]
    return pts[d.boundary_distance(pts) > h / 2]


def graded_exterior_nodes(d: Domain, R_trunc: float, h_min: float, h_bulk: float,
                          data_radius: float, ratio: float = 0.9, growth: float = 0.5):
    """Dyadically graded exterior layout: returns ``(nodes, radii)``.

    The target size at ``y`` is ``min(ratio * delta(y), h_bulk + growth * (|y - c| - data_radius)_+)``.
    Sizes are rounded down to ``h_min * 2^j``; a node of size ``h_j`` sits on
    the lattice of spacing ``h_j`` and its bump has support radius ``h_j``,
    so it never reaches the domain.
    """
    if not 0 < h_min <= h_bulk:
        raise GeometryError("need 0 < h_min <= h_bulk")
    c = d.center
    levels = [h_min]
    while levels[-1] < max(h_bulk, growth * R_trunc + h_bulk):
        levels.append(levels[-1] * 2)
    levels = np.array(levels)
    nodes, radii = [], []
    for hl in levels:
        pts = _lattice(c, R_trunc, hl)
        r = np.linalg.norm(pts - c, axis=1)
        pts = pts[(r < R_trunc) & ~d.contains(pts)]
        delta = d.boundary_distance(pts)
        pts, delta = pts[delta > hl * (1 + 1e-9)], delta[delta > hl * (1 + 1e-9)]
        far = np.maximum(np.linalg.norm(pts - c, axis=1) - data_radius, 0.0)
        target = np.minimum(ratio * delta, h_bulk + growth * far)
        j = np.searchsorted(levels, target * (1 + 1e-12), side="right") - 1
        keep = (j >= 0) & (levels[np.clip(j, 0, None)] == hl)
        nodes.append(pts[keep])
        radii.append(np.full(keep.sum(), hl))
    return np.concatenate(nodes), np.concatenate(radii)
