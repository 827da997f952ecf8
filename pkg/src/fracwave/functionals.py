"""Monitored functionals: weighted energies, the Lyapunov multiplier psi_n,
regularity window integrals, twin-trajectory factors, and the energy ledger.

The ledger records, per sample time and per (eps, center) pair, every
integrand needed by the dissipative, regularity, uniqueness and smoothing
experiments; window quantities are trapezoidal integrals of ledger columns
with a final sup over centers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .dynamics import Physics, State, pde_residual, unweighted_energy
from .fracops import apply_spectral
from .grid import (
    BoxDomain,
    SpectralField,
    boundary_trapezoid,
    from_grid,
    gradient_grids,
    grid_quadrature,
    to_grid,
)
from .weights import WeightSpec, weight_grid, weight_grid_extended

__all__ = [
    "psi_n",
    "Psi_n",
    "lyapunov_psi",
    "appendix_energy",
    "additive_constant",
    "EnergyLedger",
    "LedgerRecorder",
    "window_integrals",
    "twin_factor_AT",
    "uloc_energy_norm2",
    "e1_uloc_norm2",
    "dtstate_uloc_norm2",
]


# --- the C1 truncation of r^3 and its companion --------------------------------


def psi_n(r, n: float):
    """C1 odd truncation of r^3: r^3 for |r| <= n, tangent lines beyond."""
    if n <= 0:
        raise ValueError("n must be positive")
    r = np.asarray(r, dtype=float)
    out = np.where(
        np.abs(r) <= n, r**3, np.where(r > 0, 3 * n**2 * r - 2 * n**3, 3 * n**2 * r + 2 * n**3)
    )
    return out if out.ndim else float(out)


def Psi_n(r, n: float):
    """Even companion with (Psi_n')^2 = psi_n': sqrt(3)/2 r^2 capped linearly."""
    if n <= 0:
        raise ValueError("n must be positive")
    r = np.asarray(r, dtype=float)
    s = np.sqrt(3.0)
    out = np.where(np.abs(r) <= n, 0.5 * s * r**2, s * n * np.abs(r) - 0.5 * s * n**2)
    return out if out.ndim else float(out)


def psi_n_prime(r, n: float):
    r = np.asarray(r, dtype=float)
    out = np.where(np.abs(r) <= n, 3.0 * r**2, 3.0 * n**2)
    return out if out.ndim else float(out)


def Psi_n_prime(r, n: float):
    r = np.asarray(r, dtype=float)
    s = np.sqrt(3.0)
    out = np.where(np.abs(r) <= n, s * r, s * n * np.sign(r))
    return out if out.ndim else float(out)


# --- pointwise functionals ------------------------------------------------------


def lyapunov_psi(
    state: State, weight_eps: float, x0: Sequence[float], n: float, physics: Physics
) -> float:
    """(phi v, phi^3 psi_n(u)) + gamma (phi A^{1/2} u, phi^3 psi_n(u))."""
    dom = state.domain
    phi = weight_grid(WeightSpec("smooth_exp", weight_eps, tuple(x0)), dom)
    u = to_grid(state.u)
    v = to_grid(state.v)
    a12u = to_grid(apply_spectral(state.u, 0.5))
    return grid_quadrature(phi**4 * (v + physics.gamma * a12u) * psi_n(u, n), dom)


def additive_constant(physics: Physics, eps: float, x0: Sequence[float], domain: BoxDomain) -> float:
    """C_eps making the shifted energy dominate half the weighted energy norm.

    Built from the constructive lower bound F(u) >= -(lambda0/8) u^2 - C_F:
    C_eps = max(2 C_F int phi^2, 8/lambda0).
    """
    phi = weight_grid(WeightSpec("smooth_exp", eps, tuple(x0)), domain)
    c_f = physics.nonlinearity.lower_bound_constant(physics.lambda0)
    return max(2.0 * c_f * grid_quadrature(phi**2, domain), 8.0 / physics.lambda0)


def appendix_energy(
    state: State,
    eps: float,
    x0: Sequence[float],
    delta: float,
    physics: Physics,
    c_eps: float | None = None,
) -> float:
    """Shifted weighted energy  E_{eps,x0} + C_eps (1 + |phi g|^2)  with

    E = |xi|^2 + 2(phi^2, F(u)) - 2(phi g, phi u) + 2 delta (phi v, phi u)
        + delta gamma |phi A^{1/4} u|^2.

    Satisfies  >= 1/2 |xi|^2 once C_eps is the constructive constant.
    """
    delta_max = min(physics.gamma, physics.lambda0) / 10.0
    if not 0.0 <= delta <= delta_max + 1e-15:
        raise ValueError(f"delta must lie in [0, {delta_max:.4g}]")
    dom = state.domain
    spec = WeightSpec("smooth_exp", eps, tuple(x0))
    phi = weight_grid(spec, dom)
    phi2 = phi * phi
    u = to_grid(state.u)
    v = to_grid(state.v)
    g = to_grid(physics.source)
    from .weights import weighted_gradient_norm2

    en2 = (
        weighted_gradient_norm2(state.u, spec)
        + physics.lambda0 * grid_quadrature(phi2 * u**2, dom)
        + grid_quadrature(phi2 * v**2, dom)
    )
    a14u = to_grid(apply_spectral(state.u, 0.25))
    if c_eps is None:
        c_eps = additive_constant(physics, eps, x0, dom)
    value = (
        en2
        + 2.0 * grid_quadrature(phi2 * physics.nonlinearity.antiderivative(u), dom)
        - 2.0 * grid_quadrature(phi2 * g * u, dom)
        + 2.0 * delta * grid_quadrature(phi2 * v * u, dom)
        + delta * physics.gamma * grid_quadrature(phi2 * a14u**2, dom)
        + c_eps * (1.0 + grid_quadrature(phi2 * g**2, dom))
    )
    return float(value)


def e1_uloc_norm2(
    state: State, eps: float, centers: Sequence[Sequence[float]], physics: Physics
) -> float:
    """sup over centers of |phi A u|^2 + |phi A^{1/2} v|^2 (one-higher energy)."""
    dom = state.domain
    au = to_grid(apply_spectral(state.u, 1.0))
    a12v = to_grid(apply_spectral(state.v, 0.5))
    best = 0.0
    for c in centers:
        phi2 = weight_grid(WeightSpec("smooth_exp", eps, tuple(c)), dom) ** 2
        best = max(
            best,
            grid_quadrature(phi2 * au**2, dom) + grid_quadrature(phi2 * a12v**2, dom),
        )
    return best


def _sup_weighted_pair_norm2(
    field1: SpectralField,
    extra_grid: np.ndarray,
    eps: float,
    centers: Sequence[Sequence[float]],
    lambda0: float,
) -> float:
    """sup over centers of |phi grad f1|^2 + lambda0 |phi f1|^2 + |phi extra|^2."""
    dom = field1.domain
    f1 = to_grid(field1)
    grads = gradient_grids(field1, include_boundary=True)
    best = 0.0
    for c in centers:
        spec = WeightSpec("smooth_exp", eps, tuple(c))
        phi2 = weight_grid(spec, dom) ** 2
        val = lambda0 * grid_quadrature(phi2 * f1**2, dom) + grid_quadrature(
            phi2 * extra_grid**2, dom
        )
        for axis, g in enumerate(grads):
            phi_ext = weight_grid_extended(spec, dom, axis)
            val += boundary_trapezoid((phi_ext * g) ** 2, axis, dom)
        best = max(best, val)
    return best


def dtstate_uloc_norm2(
    state: State, eps: float, centers: Sequence[Sequence[float]], physics: Physics
) -> float:
    """sup over centers of the weighted energy norm^2 of xi_{du/dt} = (v, u_tt),
    with u_tt reconstructed from the equation."""
    w = to_grid(pde_residual(state, physics))
    return _sup_weighted_pair_norm2(state.v, w, eps, centers, physics.lambda0)


def uloc_energy_norm2(
    state: State, eps: float, centers: Sequence[Sequence[float]], physics: Physics
) -> float:
    """sup over centers of the squared weighted energy norm of (u, v)."""
    return _sup_weighted_pair_norm2(
        state.u, to_grid(state.v), eps, centers, physics.lambda0
    )


# --- the ledger -----------------------------------------------------------------

PER_PAIR = ("en2", "Ebb", "d14v", "d14u", "l12w4", "h32", "utt", "l10", "l6", "lyap", "lyap3")
PER_CENTER = ("l12b2w4",)

_DESCRIPTIONS = {
    "t": "sample time",
    "E_kinetic": "1/2 |du/dt|^2 over the box",
    "E_gradient": "1/2 |grad u|^2",
    "E_mass": "lambda0/2 |u|^2",
    "E_potential": "integral of F(u)",
    "E_quadratic": "kinetic + gradient + mass parts",
    "E_total": "quadratic energy plus potential",
    "diss_quarter": "gamma |A^{1/4} du/dt|^2 over the box",
    "u_max": "max |u| on the grid",
    "psi_level": "truncation level n used for the Lyapunov column",
    "en2": "weighted energy norm^2 of (u, du/dt)",
    "Ebb": "shifted weighted energy (appendix functional)",
    "d14v": "|phi A^{1/4} du/dt|^2",
    "d14u": "|phi A^{1/4} u|^2",
    "l12w4": "|phi u|_L12^4",
    "h32": "|phi A^{3/4} u|^2",
    "utt": "|A^{-1/4}(phi u_tt)|^2",
    "l10": "|phi u|_L10",
    "l6": "|phi u|_L6",
    "lyap": "Lyapunov pairing with psi_n(u)",
    "lyap3": "Lyapunov pairing with u^3",
    "l12b2w4": "|u|_{L12(B^2_x0)}^4 (unweighted, 2-ball restriction)",
}


@dataclass
class EnergyLedger:
    """Time series of monitored functionals, one CSV row per sample."""

    columns: list[str]
    meta: dict = field(default_factory=dict)
    rows: list[np.ndarray] = field(default_factory=list)

    def append(self, values: dict[str, float]) -> None:
        row = np.array([values[c] for c in self.columns], dtype=float)
        if not np.all(np.isfinite(row)):
            bad = [c for c, v in zip(self.columns, row) if not np.isfinite(v)]
            raise ValueError(f"non-finite ledger entries: {bad}")
        if self.rows and row[0] <= self.rows[-1][0]:
            raise ValueError("sample times must be strictly increasing")
        self.rows.append(row)

    def as_array(self) -> np.ndarray:
        return np.vstack(self.rows) if self.rows else np.empty((0, len(self.columns)))

    def column(self, name: str) -> np.ndarray:
        return self.as_array()[:, self.columns.index(name)]

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def manifest(self) -> dict:
        return {
            "columns": [
                {"name": c, "description": _DESCRIPTIONS.get(c.split("_e")[0].split("_c")[0], c)}
                for c in self.columns
            ],
            "meta": self.meta,
        }

    def write(self, directory: str | Path, name: str = "ledger") -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{name}.csv"
        man_path = directory / "manifest.json"
        arr = self.as_array()
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in arr:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
        with open(man_path, "w", encoding="utf-8") as fh:
            json.dump(self.manifest(), fh, indent=1)
        return csv_path, man_path

    @classmethod
    def read(cls, csv_path: str | Path, manifest_path: str | Path | None = None) -> "EnergyLedger":
        csv_path = Path(csv_path)
        with open(csv_path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2) if csv_path.stat().st_size else None
        meta: dict = {}
        if manifest_path is not None:
            with open(manifest_path, encoding="utf-8") as fh:
                man = json.load(fh)
            names = [c["name"] for c in man["columns"]]
            if names != header:
                raise ValueError("CSV header does not match manifest columns")
            meta = man.get("meta", {})
        ledger = cls(columns=header, meta=meta)
        if data is not None and data.size:
            ledger.rows = [row for row in data]
        return ledger


def pair_key(base: str, eps_idx: int, center_idx: int) -> str:
    return f"{base}_e{eps_idx}_c{center_idx}"


def center_key(base: str, center_idx: int) -> str:
    return f"{base}_c{center_idx}"


def sup_key(base: str, eps_idx: int | None = None) -> str:
    return f"sup_{base}_e{eps_idx}" if eps_idx is not None else f"sup_{base}"


class LedgerRecorder:
    """Callable recorder that appends one ledger row per sampled state."""

    def __init__(
        self,
        domain: BoxDomain,
        physics: Physics,
        eps_list: Sequence[float],
        centers: Sequence[Sequence[float]],
        delta: float | None = None,
        ball_radius: float = 2.0,
    ) -> None:
        self.domain = domain
        self.physics = physics
        self.eps_list = [float(e) for e in eps_list]
        self.centers = [tuple(float(x) for x in c) for c in centers]
        self.delta = (
            min(physics.gamma, physics.lambda0) / 20.0 if delta is None else float(delta)
        )
        self._psi_level = 1.0

        pts = domain.grid_points()
        self.g_grid = to_grid(physics.source)
        self.phi: dict[tuple[int, int], np.ndarray] = {}
        self.phi_ext: dict[tuple[int, int], list[np.ndarray]] = {}
        self.c_eps: dict[tuple[int, int], float] = {}
        self.phig2: dict[tuple[int, int], float] = {}
        self.masks: list[np.ndarray] = []
        c_f = physics.nonlinearity.lower_bound_constant(physics.lambda0)
        for j, c in enumerate(self.centers):
            d2 = sum((p - ci) ** 2 for p, ci in zip(pts, c))
            self.masks.append(d2 <= ball_radius**2)
            for i, eps in enumerate(self.eps_list):
                spec = WeightSpec("smooth_exp", eps, c)
                phi = weight_grid(spec, domain)
                self.phi[(i, j)] = phi
                self.phi_ext[(i, j)] = [
                    weight_grid_extended(spec, domain, axis) for axis in range(domain.dim)
                ]
                self.c_eps[(i, j)] = max(
                    2.0 * c_f * grid_quadrature(phi**2, domain), 8.0 / physics.lambda0
                )
                self.phig2[(i, j)] = grid_quadrature((phi * self.g_grid) ** 2, domain)

        cols = [
            "t",
            "E_kinetic",
            "E_gradient",
            "E_mass",
            "E_potential",
            "E_quadratic",
            "E_total",
            "diss_quarter",
            "u_max",
            "psi_level",
        ]
        for i in range(len(self.eps_list)):
            for j in range(len(self.centers)):
                cols += [pair_key(b, i, j) for b in PER_PAIR]
            cols += [sup_key(b, i) for b in PER_PAIR]
        for j in range(len(self.centers)):
            cols += [center_key(b, j) for b in PER_CENTER]
        cols += [sup_key(b) for b in PER_CENTER]
        self.ledger = EnergyLedger(
            columns=cols,
            meta={
                "eps_list": self.eps_list,
                "centers": [list(c) for c in self.centers],
                "delta": self.delta,
                "ball_radius": ball_radius,
                "c_eps": {f"{i},{j}": v for (i, j), v in self.c_eps.items()},
            },
        )

    def __call__(self, state: State) -> None:
        dom = self.domain
        phys = self.physics
        vol = dom.cell_volume
        u = to_grid(state.u)
        v = to_grid(state.v)
        grads_full = gradient_grids(state.u, include_boundary=True)
        a14v = to_grid(apply_spectral(state.v, 0.25))
        a14u = to_grid(apply_spectral(state.u, 0.25))
        a34u = to_grid(apply_spectral(state.u, 0.75))
        a12u = to_grid(apply_spectral(state.u, 0.5))
        utt_grid = to_grid(pde_residual(state, phys))
        F = phys.nonlinearity.antiderivative(u)

        u2 = u * u
        u4 = u2 * u2
        u6 = u4 * u2
        u10 = u6 * u4
        u12 = u6 * u6
        umax = float(np.max(np.abs(u))) if u.size else 0.0
        self._psi_level = max(self._psi_level, 10.0 * umax)
        n_level = self._psi_level
        psin_u = psi_n(u, n_level)
        u3 = u2 * u
        lyap_core = v + phys.gamma * a12u

        vals = dict(unweighted_energy(state, phys))
        row: dict[str, float] = {
            "t": state.t,
            "E_kinetic": vals["kinetic"],
            "E_gradient": vals["gradient"],
            "E_mass": vals["mass"],
            "E_potential": vals["potential"],
            "E_quadratic": vals["quadratic"],
            "E_total": vals["total"],
            "diss_quarter": phys.gamma * float(np.sum(a14v * a14v)) * vol,
            "u_max": umax,
            "psi_level": n_level,
        }

        for i, _eps in enumerate(self.eps_list):
            sups = {b: 0.0 for b in PER_PAIR}
            for j in range(len(self.centers)):
                phi = self.phi[(i, j)]
                phi2 = phi * phi
                phi4 = phi2 * phi2
                phi6 = phi4 * phi2
                phi10 = phi6 * phi4
                phi12 = phi6 * phi6
                grad_part = sum(
                    boundary_trapezoid((pe * g) ** 2, axis, dom)
                    for axis, (pe, g) in enumerate(zip(self.phi_ext[(i, j)], grads_full))
                )
                en2 = grad_part + float(np.sum(phi2 * (phys.lambda0 * u2 + v * v))) * vol
                d14v = float(np.sum(phi2 * a14v * a14v)) * vol
                d14u = float(np.sum(phi2 * a14u * a14u)) * vol
                l12w4 = (float(np.sum(phi12 * u12)) * vol) ** (1.0 / 3.0)
                h32 = float(np.sum(phi2 * a34u * a34u)) * vol
                wutt = from_grid(phi * utt_grid, dom)
                utt_n = apply_spectral(wutt, -0.25)
                uttv = float(np.sum(utt_n.coefficients**2)) * dom.mode_l2_weight
                l10 = (float(np.sum(phi10 * np.abs(u10))) * vol) ** 0.1
                l6 = (float(np.sum(phi6 * u6)) * vol) ** (1.0 / 6.0)
                lyap = float(np.sum(phi4 * lyap_core * psin_u)) * vol
                lyap3 = float(np.sum(phi4 * lyap_core * u3)) * vol
                Ebb = (
                    en2
                    + 2.0 * float(np.sum(phi2 * F)) * vol
                    - 2.0 * float(np.sum(phi2 * self.g_grid * u)) * vol
                    + 2.0 * self.delta * float(np.sum(phi2 * v * u)) * vol
                    + self.delta * phys.gamma * d14u
                    + self.c_eps[(i, j)] * (1.0 + self.phig2[(i, j)])
                )
                local = {
                    "en2": en2,
                    "Ebb": Ebb,
                    "d14v": d14v,
                    "d14u": d14u,
                    "l12w4": l12w4,
                    "h32": h32,
                    "utt": uttv,
                    "l10": l10,
                    "l6": l6,
                    "lyap": lyap,
                    "lyap3": lyap3,
                }
                for b, val in local.items():
                    row[pair_key(b, i, j)] = val
                    if b in ("lyap", "lyap3"):
                        sups[b] = max(sups[b], abs(val))
                    else:
                        sups[b] = max(sups[b], val)
            for b in PER_PAIR:
                row[sup_key(b, i)] = sups[b]

        sup_ball = 0.0
        for j, mask in enumerate(self.masks):
            val = (float(np.sum(u12[mask])) * vol) ** (1.0 / 3.0)
            row[center_key("l12b2w4", j)] = val
            sup_ball = max(sup_ball, val)
        row[sup_key("l12b2w4")] = sup_ball

        self.ledger.append(row)


# --- window quantities ------------------------------------------------------------


def _window_slice(times: np.ndarray, t: float, window: float) -> slice:
    start = max(0.0, t - window)
    tol = 1e-9 * max(1.0, abs(t))
    if times[0] > start + tol or times[-1] < t - tol:
        raise ValueError(f"ledger does not cover the window [{start}, {t}]")
    i0 = int(np.searchsorted(times, start - tol))
    i1 = int(np.searchsorted(times, t + tol))
    return slice(i0, i1)


def window_integrals(
    ledger: EnergyLedger, t: float, window: float = 1.0
) -> dict[str, list[float]]:
    """Trapezoidal integrals over [max(0, t-window), t], then sup over centers.

    Returns, per eps index, the sup over centers of the integrated
    L12^4, |phi A^{3/4}u|^2, |A^{-1/4}(phi u_tt)|^2 and |phi A^{1/4}v|^2
    columns.
    """
    times = ledger.times
    sl = _window_slice(times, t, window)
    arr = ledger.as_array()[sl]
    tt = times[sl]
    eps_list = ledger.meta["eps_list"]
    n_centers = len(ledger.meta["centers"])
    out: dict[str, list[float]] = {b: [] for b in ("l12w4", "h32", "utt", "d14v")}
    for base in out:
        for i in range(len(eps_list)):
            best = 0.0
            for j in range(n_centers):
                col = ledger.columns.index(pair_key(base, i, j))
                best = max(best, float(np.trapezoid(arr[:, col], tt)))
            out[base].append(best)
    return out


def twin_factor_AT(
    ledger1: EnergyLedger, ledger2: EnergyLedger, T: float, C: float = 1.0
) -> float:
    """sup over centers of exp(C int_0^T (1 + |u1|_L12(B2)^4 + |u2|_L12(B2)^4))."""
    if ledger1.meta["centers"] != ledger2.meta["centers"]:
        raise ValueError("ledgers must share the same center lattice")
    t1, t2 = ledger1.times, ledger2.times
    sl1 = _window_slice(t1, T, T)
    sl2 = _window_slice(t2, T, T)
    a1, a2 = ledger1.as_array()[sl1], ledger2.as_array()[sl2]
    tt1, tt2 = t1[sl1], t2[sl2]
    best = -np.inf
    for j in range(len(ledger1.meta["centers"])):
        c1 = ledger1.columns.index(center_key("l12b2w4", j))
        c2 = ledger2.columns.index(center_key("l12b2w4", j))
        integrand = 1.0 + a1[:, c1] + np.interp(tt1, tt2, a2[:, c2])
        best = max(best, float(np.trapezoid(integrand, tt1)))
    return float(np.exp(C * best))
