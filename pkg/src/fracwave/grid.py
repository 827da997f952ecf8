"""Dirichlet box, sine-basis fields and the diagonal representation of -Laplace.

Fields live on (0, L)^dim with homogeneous Dirichlet data and are stored as
coefficients of the orthogonal basis prod_i sin(k_i pi x_i / L), 1 <= k_i <= N.
The physical evaluation grid has M = pad_factor * N interior points per axis,
x_j = j L / (M+1); on that grid the DST-I diagonalises both transforms and
-Laplace exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.fft import dstn

__all__ = [
    "BoxDomain",
    "SpectralField",
    "to_grid",
    "from_grid",
    "laplacian_eigenvalues",
    "gradient_grids",
    "boundary_trapezoid",
    "l2_norm",
    "inner",
    "grid_quadrature",
]


@dataclass(frozen=True)
class BoxDomain:
    """Box (0, L)^dim with N sine modes and an M-point padded grid per axis."""

    dim: int
    side_length: float
    modes_per_axis: int
    pad_factor: int = 3

    def __post_init__(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.side_length <= 0:
            raise ValueError("side_length must be positive")
        if self.modes_per_axis < 1:
            raise ValueError("modes_per_axis must be >= 1")
        if self.pad_factor < 1:
            raise ValueError("pad_factor must be >= 1")

    @property
    def grid_per_axis(self) -> int:
        return self.pad_factor * self.modes_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.modes_per_axis,) * self.dim

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.grid_per_axis,) * self.dim

    @property
    def grid_spacing(self) -> float:
        return self.side_length / (self.grid_per_axis + 1)

    @cached_property
    def axis_points(self) -> np.ndarray:
        """Interior grid points of one axis, x_j = j L / (M+1), j = 1..M."""
        M = self.grid_per_axis
        return self.grid_spacing * np.arange(1, M + 1)

    def grid_points(self) -> tuple[np.ndarray, ...]:
        """Meshgrid (ij indexing) of the physical evaluation points."""
        return tuple(np.meshgrid(*([self.axis_points] * self.dim), indexing="ij"))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """mu_k = sum_i (k_i pi / L)^2, shape (N,)*dim."""
        k = np.arange(1, self.modes_per_axis + 1)
        per_axis = (k * np.pi / self.side_length) ** 2
        mu = np.zeros(self.shape)
        for axis in range(self.dim):
            sh = [1] * self.dim
            sh[axis] = self.modes_per_axis
            mu = mu + per_axis.reshape(sh)
        return mu

    @property
    def cell_volume(self) -> float:
        return self.grid_spacing**self.dim

    @property
    def mode_l2_weight(self) -> float:
        """L2 norm^2 of one basis function: (L/2)^dim."""
        return (self.side_length / 2.0) ** self.dim


@dataclass(frozen=True)
class SpectralField:
    """Scalar field on a BoxDomain stored as real sine coefficients."""

    domain: BoxDomain
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != self.domain.shape:
            raise ValueError(
                f"coefficient shape {c.shape} does not match domain {self.domain.shape}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zero(cls, domain: BoxDomain) -> "SpectralField":
        return cls(domain, np.zeros(domain.shape))

    @classmethod
    def single_mode(cls, domain: BoxDomain, k, amplitude: float = 1.0) -> "SpectralField":
        c = np.zeros(domain.shape)
        idx = tuple(np.atleast_1d(k) - 1)
        if len(idx) != domain.dim:
            raise ValueError("mode index must have one entry per axis")
        c[idx] = amplitude
        return cls(domain, c)

    def with_coefficients(self, c: np.ndarray) -> "SpectralField":
        return replace(self, coefficients=c)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coefficients(self.coefficients + other.coefficients)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coefficients(self.coefficients - other.coefficients)

    def __mul__(self, scalar: float) -> "SpectralField":
        return self.with_coefficients(self.coefficients * scalar)

    __rmul__ = __mul__


def to_grid(field: SpectralField) -> np.ndarray:
    """Evaluate the field at the M^dim physical grid points.

    Exact on basis functions: pads coefficients with zeros and applies a
    DST-I along every axis (factor 1/2 per axis compensates scipy's 2x).
    """
    dom = field.domain
    padded = np.zeros(dom.grid_shape)
    padded[tuple(slice(0, n) for n in dom.shape)] = field.coefficients
    return dstn(padded, type=1) * 0.5**dom.dim


def from_grid(grid: np.ndarray, domain: BoxDomain) -> SpectralField:
    """Project grid values back onto the first N sine modes per axis.

    Inverse of to_grid on band-limited input; higher grid content is
    projected (and, below mode M, represented exactly before truncation).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.shape != domain.grid_shape:
        raise ValueError(
            f"grid shape {grid.shape} does not match domain grid {domain.grid_shape}"
        )
    full = dstn(grid, type=1) / float(domain.grid_per_axis + 1) ** domain.dim
    return SpectralField(domain, full[tuple(slice(0, n) for n in domain.shape)].copy())


def laplacian_eigenvalues(domain: BoxDomain) -> np.ndarray:
    """Eigenvalues mu_k of -Laplace on the sine basis, shape (N,)*dim."""
    return domain.eigenvalues


def _cosine_axis_eval(
    coeff: np.ndarray, axis: int, domain: BoxDomain, include_boundary: bool = False
) -> np.ndarray:
    """Evaluate sum_k b_k cos(k pi x/L) along one axis at the grid points.

    Uses a DST-I-compatible DCT-I of length M+2 so the cosine frequencies sit
    over the same denominator M+1 as the sine grid; with include_boundary the
    two endpoint planes x = 0 and x = L are kept (axis length M+2).
    """
    from scipy.fft import dct

    M = domain.grid_per_axis
    shape = list(coeff.shape)
    shape[axis] = M + 2
    padded = np.zeros(shape)
    sl = [slice(None)] * coeff.ndim
    sl[axis] = slice(1, 1 + coeff.shape[axis])
    padded[tuple(sl)] = coeff
    values = dct(padded, type=1, axis=axis) * 0.5
    if include_boundary:
        return values
    sl[axis] = slice(1, M + 1)
    return values[tuple(sl)]


def gradient_grids(field: SpectralField, include_boundary: bool = False) -> list[np.ndarray]:
    """Pointwise gradient components on the padded grid, one array per axis.

    d/dx_i of the sine series is a cosine series along axis i and a sine
    series along the others; both are evaluated exactly. With include_boundary
    each component keeps the two endpoint planes of its own axis (that axis
    then has length M+2), which quadratures need because cosines do not vanish
    on the boundary.
    """
    from scipy.fft import dst

    dom = field.domain
    L = dom.side_length
    M = dom.grid_per_axis
    k = np.arange(1, dom.modes_per_axis + 1) * np.pi / L
    out = []
    for axis in range(dom.dim):
        sh = [1] * dom.dim
        sh[axis] = dom.modes_per_axis
        d = field.coefficients * k.reshape(sh)
        # sine-evaluate the other axes first (zero padding to M)
        for other in range(dom.dim):
            if other == axis:
                continue
            shape = list(d.shape)
            shape[other] = M
            padded = np.zeros(shape)
            sl = [slice(None)] * d.ndim
            sl[other] = slice(0, d.shape[other])
            padded[tuple(sl)] = d
            d = dst(padded, type=1, axis=other) * 0.5
        out.append(_cosine_axis_eval(d, axis, dom, include_boundary))
    return out


def boundary_trapezoid(values: np.ndarray, axis: int, domain: BoxDomain) -> float:
    """Integral of grid values whose `axis` includes the boundary planes.

    Trapezoid weights h/2 at the two endpoint planes of `axis`, plain h
    elsewhere; the remaining axes are interior-only (their integrand is
    assumed to vanish on the boundary, as sine factors do).
    """
    M = domain.grid_per_axis
    if values.shape[axis] != M + 2:
        raise ValueError("axis must carry the two boundary planes (length M+2)")
    w = np.ones(M + 2)
    w[0] = w[-1] = 0.5
    sh = [1] * values.ndim
    sh[axis] = M + 2
    return float(np.sum(values * w.reshape(sh)) * domain.cell_volume)


def l2_norm(field: SpectralField) -> float:
    """Exact L2 norm over the box from coefficients (Parseval)."""
    return float(np.sqrt(np.sum(field.coefficients**2) * field.domain.mode_l2_weight))


def inner(f: SpectralField, g: SpectralField) -> float:
    """Exact L2 inner product from coefficients."""
    return float(np.sum(f.coefficients * g.coefficients) * f.domain.mode_l2_weight)


def grid_quadrature(values: np.ndarray, domain: BoxDomain) -> float:
    """Integral of grid values over the box (integrand vanishing on the boundary)."""
    return float(np.sum(values) * domain.cell_volume)
