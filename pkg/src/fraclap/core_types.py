"""Shared parameter, grid and normalization types.

Every field lives on the periodic box ``[0, L)^n`` sampled by an ``N^n``
uniform lattice. Functions of interest are kept inside the central half of
the box so that periodic images of slowly decaying kernels stay a measured,
controlled error.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.special import gamma

SUPPORTED_DIMS = (2, 3)

GRID_MAGIC = b"FLGF"
_HEADER = struct.Struct("<4sIIdd")


class ParameterError(ValueError):
    """Raised when solver parameters fall outside their documented ranges."""


class NumericalContractError(RuntimeError):
    """A numerical guarantee of a solver was violated."""


@dataclass(frozen=True)
class SolverParams:
    """Validated problem parameters.

    Parameters
    ----------
    n : int
        Spatial dimension, 2 or 3.
    s : float
        Fractional order, strictly inside (0, 1).
    grid_size : int
        Points per axis; a power of two, at least 16.
    box_length : float
        Period of the torus.
    """

    n: int
    s: float
    grid_size: int
    box_length: float

    def __post_init__(self):
        if self.n not in SUPPORTED_DIMS:
            raise ParameterError(f"unsupported dimension n={self.n}; expected 2 or 3")
        if not np.isfinite(self.s) or not 0.0 < self.s < 1.0:
            raise ParameterError(f"s out of open interval (0, 1): s={self.s}")
        N = self.grid_size
        if int(N) != N or N < 16 or (int(N) & (int(N) - 1)) != 0:
            raise ParameterError(f"grid_size must be a power of two >= 16, got {N}")
        if not np.isfinite(self.box_length) or self.box_length <= 0:
            raise ParameterError(f"box_length must be positive, got {self.box_length}")
        object.__setattr__(self, "grid_size", int(N))
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "box_length", float(self.box_length))

    @property
    def h(self) -> float:
        """Grid spacing."""
        return self.box_length / self.grid_size

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.grid_size,) * self.n

    @property
    def center(self) -> np.ndarray:
        return np.full(self.n, self.box_length / 2)

    def with_grid(self, grid_size: int) -> "SolverParams":
        return SolverParams(self.n, self.s, grid_size, self.box_length)

    def with_s(self, s: float) -> "SolverParams":
        return SolverParams(self.n, s, self.grid_size, self.box_length)


def make_params(n: int, s: float, grid_size: int, box_length: float) -> SolverParams:
    return SolverParams(n, s, grid_size, box_length)


def grid_coords(params: SolverParams) -> np.ndarray:
    """Node coordinates, shape ``(N, ..., N, n)``."""
    axis = np.arange(params.grid_size) * params.h
    mesh = np.meshgrid(*([axis] * params.n), indexing="ij")
    return np.stack(mesh, axis=-1)


def frequencies(params: SolverParams) -> np.ndarray:
    """Frequency vectors ``xi = k / L`` matching ``numpy.fft.fftn`` ordering."""
    k = np.fft.fftfreq(params.grid_size, d=params.h)
    mesh = np.meshgrid(*([k] * params.n), indexing="ij")
    return np.stack(mesh, axis=-1)


def frequency_norm(params: SolverParams) -> np.ndarray:
    return np.sqrt((frequencies(params) ** 2).sum(axis=-1))


class GridFunction:
    """A real scalar field on the periodic lattice.

    Values are copied on construction and frozen, so instances can be shared
    between threads.
    """

    __slots__ = ("params", "values", "__dict__")

    def __init__(self, params: SolverParams, values):
        values = np.array(values, dtype=np.float64)
        if values.size != params.grid_size ** params.n:
            raise ValueError(
                f"expected {params.grid_size ** params.n} values, got {values.size}"
            )
        values = values.reshape(params.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        values.flags.writeable = False
        self.params = params
        self.values = values

    @classmethod
    def from_function(cls, params: SolverParams, func) -> "GridFunction":
        """Sample ``func`` (vectorized over a trailing coordinate axis) on the grid."""
        return cls(params, func(grid_coords(params)))

    @classmethod
    def zeros(cls, params: SolverParams) -> "GridFunction":
        return cls(params, np.zeros(params.shape))

    @cached_property
    def fft(self) -> np.ndarray:
        """Continuous-transform approximation ``h^n * DFT(values)``."""
        return np.fft.fftn(self.values) * self.params.h ** self.params.n

    def mean(self) -> float:
        return float(self.values.mean())

    def l2_norm(self) -> float:
        return float(np.sqrt((self.values ** 2).sum() * self.params.h ** self.params.n))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same(self, other)
        return GridFunction(self.params, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same(self, other)
        return GridFunction(self.params, self.values - other.values)

    def __mul__(self, a: float) -> "GridFunction":
        return GridFunction(self.params, a * self.values)

    __rmul__ = __mul__

    def __repr__(self):
        p = self.params
        return f"GridFunction(n={p.n}, N={p.grid_size}, L={p.box_length}, s={p.s})"


def _check_same(a: GridFunction, b: GridFunction):
    if a.params != b.params:
        raise ValueError("grid functions live on different grids")


def write_grid(path, f: GridFunction) -> None:
    """Write ``f`` in the little-endian FLGF binary format."""
    p = f.params
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(GRID_MAGIC, p.n, p.grid_size, p.box_length, p.s))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes(order="C"))


def read_grid(path) -> GridFunction:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("truncated grid file")
    magic, n, N, L, s = _HEADER.unpack_from(data)
    if magic != GRID_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    params = SolverParams(n, s, N, L)
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if values.size != N ** n:
        raise ValueError(f"expected {N ** n} values, found {values.size}")
    return GridFunction(params, values.astype(np.float64))


def c_delta(n: int, s: float) -> float:
    """Constant of the second-difference form of the fractional Laplacian.

    With this constant, ``-(c_delta / 2) * int (u(x+y) - 2u(x) + u(x-y)) |y|^(-n-2s) dy``
    has Fourier symbol ``(2 pi |xi|)^(2s)``.
    """
    return 4.0 ** s * gamma(n / 2 + s) / (np.pi ** (n / 2) * abs(gamma(-s)))


def c_riesz(n: int, sigma: float) -> float:
    """Constant of the Riesz kernel ``c |x|^(sigma - n)`` with symbol ``(2 pi |xi|)^(-sigma)``."""
    if not 0 < sigma < n:
        raise ParameterError(f"Riesz order must lie in (0, {n}), got {sigma}")
    return gamma((n - sigma) / 2) / (2.0 ** sigma * np.pi ** (n / 2) * gamma(sigma / 2))


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2 * np.pi ** (n / 2) / gamma(n / 2)
