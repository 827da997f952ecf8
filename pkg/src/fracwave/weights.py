"""Weight functions of exponential growth and the norms built from them.

The workhorse weight is phi_{eps,x0}(x) = exp(-eps sqrt(1 + |x - x0|^2)),
a weight of exponential growth eps with C_phi = 1; the compactly supported
companion psi_{x0} is a smooth cutoff, identically 1 on the unit ball and
supported in the 2-ball around x0. Uniformly local norms are realized as
sups of weighted norms over a lattice of centers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .grid import (
    BoxDomain,
    SpectralField,
    boundary_trapezoid,
    gradient_grids,
    grid_quadrature,
    to_grid,
)

__all__ = [
    "WeightSpec",
    "EnergyNorms",
    "weight_eval",
    "weight_grid",
    "weight_grid_extended",
    "weighted_lp_norm",
    "weighted_gradient_norm2",
    "uniformly_local_norm",
    "energy_norm",
    "check_growth_axiom",
    "center_lattice",
]

SUPPORTED_P = (2, 3, 4, 6, 10, 12)


@dataclass(frozen=True)
class WeightSpec:
    """Either a smooth exponential weight or a compactly supported bump."""

    kind: str
    epsilon: float = 0.0
    center: tuple[float, ...] = (0.0,)

    def __post_init__(self) -> None:
        if self.kind not in ("smooth_exp", "bump"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


# transition profile of the bump: integral of the mollifier kernel
# exp(-1/(1-t^2)) on (-1, 1), tabulated once and interpolated.
_T_TABLE = np.linspace(-1.0, 1.0, 20001)
with np.errstate(divide="ignore"):
    _K_TABLE = np.where(np.abs(_T_TABLE) < 1.0, np.exp(-1.0 / (1.0 - _T_TABLE**2)), 0.0)
_CUM = np.concatenate(([0.0], np.cumsum((_K_TABLE[1:] + _K_TABLE[:-1]) * 0.5 * np.diff(_T_TABLE))))
_CUM /= _CUM[-1]


def _bump_radial(r: np.ndarray) -> np.ndarray:
    """C-infinity profile: 1 on [0,1], 0 on [2,inf), mollifier transition between."""
    r = np.asarray(r, dtype=float)
    # map the transition zone r in (1,2) onto t in (-1,1) and take the
    # complementary mass of the kernel; all derivatives vanish at both seams.
    t = np.clip(2.0 * (r - 1.5), -1.0, 1.0)
    return 1.0 - np.interp(t, _T_TABLE, _CUM)


def _radial_distance(spec: WeightSpec, points: Sequence[np.ndarray]) -> np.ndarray:
    d2 = np.zeros_like(points[0])
    for xi, ci in zip(points, spec.center):
        d2 = d2 + (xi - ci) ** 2
    return np.sqrt(d2)


def weight_eval(spec: WeightSpec, x) -> np.ndarray:
    """Evaluate the weight at points x (array of shape (..., dim) or scalar list)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    comps = [x[..., i] for i in range(x.shape[-1])]
    r = _radial_distance(spec, comps)
    if spec.kind == "smooth_exp":
        out = np.exp(-spec.epsilon * np.sqrt(1.0 + r**2))
    else:
        out = _bump_radial(r)
    return out if out.size > 1 else float(out.ravel()[0])


def weight_grid(spec: WeightSpec, domain: BoxDomain) -> np.ndarray:
    """Weight values on the domain's padded physical grid."""
    pts = domain.grid_points()
    r = _radial_distance(spec, pts)
    if spec.kind == "smooth_exp":
        return np.exp(-spec.epsilon * np.sqrt(1.0 + r**2))
    return _bump_radial(r)


def weight_grid_extended(spec: WeightSpec, domain: BoxDomain, axis: int) -> np.ndarray:
    """Weight values on the grid with the two boundary planes of one axis."""
    ext = np.concatenate(([0.0], domain.axis_points, [domain.side_length]))
    axes = [ext if a == axis else domain.axis_points for a in range(domain.dim)]
    pts = np.meshgrid(*axes, indexing="ij")
    r = _radial_distance(spec, pts)
    if spec.kind == "smooth_exp":
        return np.exp(-spec.epsilon * np.sqrt(1.0 + r**2))
    return _bump_radial(r)


def weighted_gradient_norm2(field: SpectralField, spec: WeightSpec) -> float:
    """|phi grad u|^2 with trapezoid boundary mass (cosines do not vanish)."""
    dom = field.domain
    grads = gradient_grids(field, include_boundary=True)
    total = 0.0
    for axis, g in enumerate(grads):
        phi = weight_grid_extended(spec, dom, axis)
        total += boundary_trapezoid((phi * g) ** 2, axis, dom)
    return total


def weighted_lp_norm(field: SpectralField, spec: WeightSpec, p: int) -> float:
    """(int phi^p |u|^p)^(1/p) by quadrature on the padded grid."""
    if p not in SUPPORTED_P:
        raise ValueError(f"p must be one of {SUPPORTED_P}, got {p}")
    phi = weight_grid(spec, field.domain)
    u = to_grid(field)
    return grid_quadrature((phi * np.abs(u)) ** p, field.domain) ** (1.0 / p)


def center_lattice(domain: BoxDomain, spacing: float = 1.0) -> list[tuple[float, ...]]:
    """Uniform lattice of weight centers inside the box."""
    axis = np.arange(0.5 * spacing, domain.side_length, spacing)
    grids = np.meshgrid(*([axis] * domain.dim), indexing="ij")
    return [tuple(float(g[idx]) for g in grids) for idx in np.ndindex(grids[0].shape)]


def uniformly_local_norm(
    field: SpectralField, epsilon: float, p: int, centers: Iterable[Sequence[float]]
) -> float:
    """sup over centers of the phi_{eps,x0}-weighted L^p norm."""
    centers = list(centers)
    if not centers:
        raise ValueError("centers must be nonempty")
    return max(
        weighted_lp_norm(field, WeightSpec("smooth_exp", epsilon, tuple(c)), p)
        for c in centers
    )


@dataclass(frozen=True)
class EnergyNorms:
    """Components of the weighted energy norm of a pair xi = (xi1, xi2)."""

    grad_part: float
    mass_part: float
    velocity_part: float

    def __post_init__(self) -> None:
        for v in (self.grad_part, self.mass_part, self.velocity_part):
            if v < 0 or not np.isfinite(v):
                raise ValueError("energy components must be finite and >= 0")

    @property
    def total(self) -> float:
        return self.grad_part + self.mass_part + self.velocity_part


def energy_norm(
    xi1: SpectralField, xi2: SpectralField, spec: WeightSpec, lambda0: float
) -> EnergyNorms:
    """|phi grad xi1|^2 + lambda0 |phi xi1|^2 + |phi xi2|^2 (squared pieces)."""
    dom = xi1.domain
    phi = weight_grid(spec, dom)
    grad_part = weighted_gradient_norm2(xi1, spec)
    mass_part = lambda0 * grid_quadrature((phi * to_grid(xi1)) ** 2, dom)
    vel_part = grid_quadrature((phi * to_grid(xi2)) ** 2, dom)
    return EnergyNorms(grad_part, mass_part, vel_part)


@dataclass(frozen=True)
class GrowthReport:
    mu: float
    max_ratio: float
    passed: bool


def check_growth_axiom(
    spec: WeightSpec, mu: float, sample_pairs: np.ndarray, tol: float = 1e-12
) -> GrowthReport:
    """Check phi(x+y) <= e^{mu |y|} phi(x) on sampled pairs (C_phi = 1).

    sample_pairs has shape (n, 2, dim): rows of (x, y).
    """
    if spec.kind != "smooth_exp":
        raise ValueError("growth axiom check applies to smooth_exp weights")
    pairs = np.asarray(sample_pairs, dtype=float)
    x, y = pairs[:, 0, :], pairs[:, 1, :]
    phi_x = np.asarray(weight_eval(spec, x))
    phi_xy = np.asarray(weight_eval(spec, x + y))
    ynorm = np.sqrt(np.sum(y**2, axis=-1))
    ratio = phi_xy / (np.exp(mu * ynorm) * phi_x)
    max_ratio = float(np.max(ratio))
    return GrowthReport(mu=mu, max_ratio=max_ratio, passed=max_ratio <= 1.0 + tol)
