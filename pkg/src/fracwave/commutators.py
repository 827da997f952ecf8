"""Commutators [phi, A^theta] and numerical verification of their eps-scaling.

For the smooth exponential weight the commutator norm is bounded by

    C eps^{(1+s)/2} 2^{(1+s)/2-theta} Gamma((1+s)/2-theta)/|Gamma(-theta)|
        * |phi A^{s/2} u|,

so the ratio |[A^theta, phi_eps]u| / |phi_eps A^{s/2} u| should scale like
eps^{(1+s)/2}; for the compactly supported bump the ratio against
|phi_eps u| stays bounded with no eps decay. Both are measured on random
field ensembles and summarized by a log-log slope fit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as _gamma

from .fracops import apply_spectral, gamma_reciprocal
from .grid import BoxDomain, SpectralField, from_grid, l2_norm, to_grid
from .weights import WeightSpec, weight_grid

__all__ = [
    "CommutatorReport",
    "commutator_apply",
    "bound_constant",
    "scaling_study",
    "field_ensemble",
]


def commutator_apply(spec: WeightSpec, theta: float, field: SpectralField) -> SpectralField:
    """[phi, A^theta]u = phi (A^theta u) - A^theta (phi u), projected to N modes."""
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    dom = field.domain
    phi = weight_grid(spec, dom)
    phi_Au = from_grid(phi * to_grid(apply_spectral(field, theta)), dom)
    A_phiu = apply_spectral(from_grid(phi * to_grid(field), dom), theta)
    return phi_Au - A_phiu


def bound_constant(theta: float, s: float, epsilon: float) -> float:
    """The explicit factor of the commutator bound, excluding the generic constant.

    eps^{(1+s)/2} * 2^{(1+s)/2 - theta} * Gamma((1+s)/2 - theta) / |Gamma(-theta)|,
    valid for 0 < theta < (1+s)/2 with s in [0, 1).
    """
    if not 0.0 <= s < 1.0:
        raise ValueError(f"s must lie in [0, 1), got {s}")
    if not 0.0 < theta < (1.0 + s) / 2.0:
        raise ValueError(f"need 0 < theta < (1+s)/2, got theta={theta}, s={s}")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    expo = (1.0 + s) / 2.0
    return (
        epsilon**expo
        * 2.0 ** (expo - theta)
        * _gamma(expo - theta)
        * abs(gamma_reciprocal(theta))
    )


def field_ensemble(
    domain: BoxDomain, n_fields: int, seed: int = 0, decay: float = 1.5
) -> list[SpectralField]:
    """Random fields with coefficients ~ |k|^(-decay) * N(0,1), fixed seed."""
    rng = np.random.default_rng(seed)
    k2 = np.zeros(domain.shape)
    for axis in range(domain.dim):
        k = np.arange(1, domain.modes_per_axis + 1, dtype=float) ** 2
        sh = [1] * domain.dim
        sh[axis] = domain.modes_per_axis
        k2 = k2 + k.reshape(sh)
    profile = np.sqrt(k2) ** (-decay)
    return [
        SpectralField(domain, profile * rng.standard_normal(domain.shape))
        for _ in range(n_fields)
    ]


@dataclass
class CommutatorReport:
    """Per-epsilon worst-case ratios of a commutator scaling study."""

    theta: float
    s: float
    weight_kind: str
    epsilon_list: list[float]
    ratio_list: list[float]
    slope: float
    n_fields: int = 0
    modes: int = 0
    details: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        eps = np.asarray(self.epsilon_list)
        if not np.all(np.diff(eps) < 0):
            raise ValueError("epsilon_list must be strictly decreasing")
        if not all(r > 0 for r in self.ratio_list):
            raise ValueError("ratios must be positive")

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "s": self.s,
            "weight_kind": self.weight_kind,
            "epsilon_list": list(self.epsilon_list),
            "ratio_list": list(self.ratio_list),
            "slope": self.slope,
            "n_fields": self.n_fields,
            "modes": self.modes,
            "details": self.details,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _fit_slope(eps: np.ndarray, ratios: np.ndarray) -> float:
    coeffs = np.polyfit(np.log(eps), np.log(ratios), 1)
    return float(coeffs[0])


def scaling_study(
    theta: float,
    s: float,
    fields: list[SpectralField],
    epsilon_list: list[float],
    weight_kind: str = "smooth_exp",
    center: tuple[float, ...] | None = None,
) -> CommutatorReport:
    """Worst-case commutator ratio per epsilon and its fitted log-log slope.

    smooth_exp: ratio = |[A^theta, phi_eps]u| / |phi_eps A^{s/2} u|.
    bump:       ratio = |[A^theta, psi]u| / |phi_eps u| (bounded, no decay).
    """
    if any(e > 0.2 + 1e-15 for e in epsilon_list):
        raise ValueError("epsilon values must stay <= 0.2")
    if not fields:
        raise ValueError("field ensemble is empty")
    dom = fields[0].domain
    if center is None:
        center = (dom.side_length / 2.0,) * dom.dim
    if all(l2_norm(f) == 0.0 for f in fields):
        raise ValueError("degenerate ensemble: all fields vanish")

    ratios = []
    for eps in epsilon_list:
        phi_spec = WeightSpec("smooth_exp", eps, center)
        if weight_kind == "smooth_exp":
            com_spec = phi_spec
        else:
            com_spec = WeightSpec("bump", 0.0, center)
        phi = weight_grid(phi_spec, dom)
        worst = 0.0
        for f in fields:
            num = l2_norm(commutator_apply(com_spec, theta, f))
            ref_field = apply_spectral(f, s / 2.0) if (weight_kind == "smooth_exp" and s > 0) else f
            ref = np.sqrt(np.sum((phi * to_grid(ref_field)) ** 2) * dom.cell_volume)
            worst = max(worst, num / ref)
        ratios.append(worst)

    eps_arr = np.asarray(epsilon_list, dtype=float)
    slope = _fit_slope(eps_arr, np.asarray(ratios))
    return CommutatorReport(
        theta=theta,
        s=s,
        weight_kind=weight_kind,
        epsilon_list=list(epsilon_list),
        ratio_list=ratios,
        slope=slope,
        n_fields=len(fields),
        modes=dom.modes_per_axis,
    )
