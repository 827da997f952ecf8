"""Time integration of u_tt + gamma A^{1/2} u_t - Lap u + lambda0 u + f(u) = g.

With A = -Lap + 1 diagonal on the sine basis, the linear part decouples into
damped oscillators  c_k'' + a_k c_k' + b_k c_k = g_k  with a_k = gamma
sqrt(1+mu_k), b_k = mu_k + lambda0, which are propagated exactly (matrix
exponential per mode, constant forcing removed by variation of constants).
The nonlinearity enters through Strang splitting: half linear step, full
pseudospectral kick v <- v - dt f(u) on the padded grid, half linear step.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .grid import BoxDomain, SpectralField, from_grid, to_grid

__all__ = [
    "NonlinearitySpec",
    "Physics",
    "State",
    "DivergedRunError",
    "LinearPropagator",
    "linear_halfstep",
    "nonlinear_kick",
    "step",
    "simulate",
    "Trajectory",
    "pde_residual",
    "unweighted_energy",
    "initial_state",
]

DIVERGENCE_GUARD = 1e6


class DivergedRunError(RuntimeError):
    """Raised when grid values blow past the divergence guard."""

    def __init__(self, time: float, message: str = "") -> None:
        super().__init__(message or f"run diverged at t = {time:.6g}")
        self.time = time


# --- nonlinearity -------------------------------------------------------------


def _sin5_antiderivative(u: np.ndarray) -> np.ndarray:
    """F(u) = int_0^u sin(v^5)/v dv = Si(u^5)/5 (substitute w = v^5), odd in u."""
    from scipy.special import sici

    si, _ = sici(np.abs(u) ** 5)
    return np.sign(u) * si / 5.0


@dataclass(frozen=True)
class NonlinearitySpec:
    """f(u): quintic family u^5 + c3 u^3 + c1 u, sin5 = sin(u^5)/u, or zero."""

    kind: str = "quintic"
    c3: float = 0.0
    c1: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("quintic", "sin5", "zero"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")

    def f(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == "quintic":
            u2 = u * u
            out = u2 * u2 * u
            if self.c3:
                out = out + self.c3 * (u2 * u)
            if self.c1:
                out = out + self.c1 * u
            return out
        if self.kind == "sin5":
            u2 = u * u
            with np.errstate(invalid="ignore", divide="ignore"):
                out = np.where(u != 0.0, np.sin(u2 * u2 * u) / np.where(u != 0.0, u, 1.0), 0.0)
            return out
        return np.zeros_like(u)

    def antiderivative(self, u: np.ndarray) -> np.ndarray:
        """F(u) = int_0^u f."""
        u = np.asarray(u, dtype=float)
        if self.kind == "quintic":
            return u**6 / 6.0 + self.c3 * u**4 / 4.0 + self.c1 * u**2 / 2.0
        if self.kind == "sin5":
            return _sin5_antiderivative(u)
        return np.zeros_like(u)

    def dissipativity_bound(self) -> float:
        """M with f(s) s >= -M for all s."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "sin5":
            return 1.0  # f(s)s = sin(s^5) >= -1
        # quintic: minimise w^3 + c3 w^2 + c1 w over w = s^2 >= 0
        roots = np.roots([3.0, 2.0 * self.c3, self.c1])
        cand = [0.0] + [float(r.real) for r in roots if abs(r.imag) < 1e-12 and r.real > 0]
        vals = [w**3 + self.c3 * w**2 + self.c1 * w for w in cand]
        return max(0.0, -min(vals))

    def growth_constant(self) -> float:
        """C with |f'(s)| <= C (1 + s^4), from the closed-form derivative."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "sin5":
            # |f'| <= 5|u|^3 + min(1, |u|^3) <= 6 (1 + u^4)
            return 6.0
        return 5.0 + 3.0 * abs(self.c3) + abs(self.c1)

    def lower_bound_constant(self, lambda0: float) -> float:
        """C with F(u) >= -(lambda0/8) u^2 - C for all u."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "quintic":
            # G(w) = w^3/6 + c3 w^2/4 + (c1/2 + lambda0/8) w in w = u^2 >= 0
            a2 = self.c1 / 2.0 + lambda0 / 8.0
            roots = np.roots([0.5, 0.5 * self.c3, a2])  # dG/dw
            cand = [0.0] + [float(r.real) for r in roots if abs(r.imag) < 1e-12 and r.real > 0]
            vals = [w**3 / 6.0 + self.c3 * w**2 / 4.0 + a2 * w for w in cand]
            return max(0.0, -min(vals))
        # sin5: minimise numerically on a dense symmetric grid (F is odd and
        # |F| <= pi/2 + 1, so beyond u_guard the quadratic term dominates)
        u_guard = max(8.0, 8.0 / np.sqrt(lambda0))
        u = np.linspace(-u_guard, u_guard, 40001)
        G = self.antiderivative(u) + lambda0 / 8.0 * u**2
        grid_min = float(np.min(G))
        return max(0.0, -grid_min)


# --- physics and state --------------------------------------------------------


@dataclass(frozen=True)
class Physics:
    """Coefficients of the evolution; the damping exponent is fixed at 1/2."""

    gamma: float
    lambda0: float
    nonlinearity: NonlinearitySpec
    source: SpectralField

    theta: float = 0.5

    def __post_init__(self) -> None:
        if self.gamma <= 0 or self.lambda0 <= 0:
            raise ValueError("gamma and lambda0 must be strictly positive")
        if self.theta != 0.5:
            raise ValueError("the damping exponent is fixed at 1/2")


@dataclass(frozen=True)
class State:
    """Pair xi_u = (u, du/dt) at time t."""

    u: SpectralField
    v: SpectralField
    t: float = 0.0

    def __post_init__(self) -> None:
        if self.u.domain != self.v.domain:
            raise ValueError("u and v must share a domain")
        if self.t < 0:
            raise ValueError("time must be >= 0")

    @property
    def domain(self) -> BoxDomain:
        return self.u.domain


# --- exact linear flow ----------------------------------------------------------


@dataclass(frozen=True)
class LinearPropagator:
    """Exact flow of the linear part over a fixed time step tau.

    Entries are e^{-a tau/2} times the trig/hyperbolic fundamental system;
    over-, under- and critically damped modes share one stable evaluation
    through C = cosh(sqrt(d) tau), S = sinh(sqrt(d) tau)/sqrt(d) with
    d = a^2/4 - b, switching to a series for |d| tau^2 below 1e-8.
    """

    tau: float
    p11: np.ndarray = field(repr=False)
    p12: np.ndarray = field(repr=False)
    p21: np.ndarray = field(repr=False)
    p22: np.ndarray = field(repr=False)
    u_eq: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, domain: BoxDomain, physics: Physics, tau: float) -> "LinearPropagator":
        mu = domain.eigenvalues
        a = physics.gamma * np.sqrt(1.0 + mu)
        b = mu + physics.lambda0
        d = a**2 / 4.0 - b
        z = d * tau**2
        decay = np.exp(-a * tau / 2.0)

        EC = np.empty_like(d)
        ES = np.empty_like(d)
        series = np.abs(z) <= 1e-8
        over = (d > 0) & ~series
        under = (d < 0) & ~series

        # overdamped: use the (nonpositive) root exponents to avoid cosh overflow
        s = np.sqrt(np.where(over, d, 1.0))
        e_slow = np.exp((s[over] - a[over] / 2.0) * tau)
        e_fast = np.exp(-(s[over] + a[over] / 2.0) * tau)
        EC[over] = 0.5 * (e_slow + e_fast)
        ES[over] = 0.5 * (e_slow - e_fast) / s[over]
        w = np.sqrt(np.where(under, -d, 1.0))
        EC[under] = decay[under] * np.cos(w[under] * tau)
        ES[under] = decay[under] * np.sin(w[under] * tau) / w[under]
        zs = z[series]
        EC[series] = decay[series] * (1.0 + zs / 2.0 + zs**2 / 24.0)
        ES[series] = decay[series] * tau * (1.0 + zs / 6.0 + zs**2 / 120.0)

        return cls(
            tau=tau,
            p11=EC + 0.5 * a * ES,
            p12=ES,
            p21=-b * ES,
            p22=EC - 0.5 * a * ES,
            u_eq=physics.source.coefficients / b,
        )

    def apply(self, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        du = u - self.u_eq
        return (
            self.u_eq + self.p11 * du + self.p12 * v,
            self.p21 * du + self.p22 * v,
        )


def linear_halfstep(state: State, tau: float, physics: Physics) -> State:
    """Advance the linear flow exactly by tau (the caller passes dt/2)."""
    if tau == 0.0:
        return state
    prop = LinearPropagator.build(state.domain, physics, tau)
    u, v = prop.apply(state.u.coefficients, state.v.coefficients)
    return State(state.u.with_coefficients(u), state.v.with_coefficients(v), state.t + tau)


def _kick(state: State, dt: float, physics: Physics) -> State:
    u_grid = to_grid(state.u)
    peak = float(np.max(np.abs(u_grid))) if u_grid.size else 0.0
    if not np.isfinite(peak) or peak > DIVERGENCE_GUARD:
        raise DivergedRunError(state.t)
    fu = physics.nonlinearity.f(u_grid)
    v = state.v.coefficients - dt * from_grid(fu, state.domain).coefficients
    return replace(state, v=state.v.with_coefficients(v))


def nonlinear_kick(state: State, dt: float, physics: Physics) -> State:
    """v <- v - dt f(u) on the padded grid, re-projected; u and t unchanged."""
    return _kick(state, dt, physics)


def step(
    state: State, dt: float, physics: Physics, _prop: LinearPropagator | None = None
) -> State:
    """One Strang step: half linear, nonlinear kick, half linear."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    prop = _prop or LinearPropagator.build(state.domain, physics, dt / 2.0)
    u, v = prop.apply(state.u.coefficients, state.v.coefficients)
    mid = State(state.u.with_coefficients(u), state.v.with_coefficients(v), state.t)
    mid = _kick(mid, dt, physics)
    u, v = prop.apply(mid.u.coefficients, mid.v.coefficients)
    return State(state.u.with_coefficients(u), state.v.with_coefficients(v), state.t + dt)


# --- trajectories ----------------------------------------------------------------


@dataclass
class Trajectory:
    """States sampled at the configured cadence, plus the final state."""

    times: list[float]
    states: list[State]
    final: State


def simulate(
    state0: State,
    physics: Physics,
    dt: float,
    n_steps: int,
    sample_every: int = 1,
    recorder: Callable[[State], None] | None = None,
    keep_states: bool = True,
) -> Trajectory:
    """March n_steps of size dt, sampling every sample_every steps (and t=0).

    The recorder is called on each sampled state; a divergence aborts the run
    and reports the last good time on the raised error. The inner loop works
    on raw coefficient arrays, so sampled states are the only allocations.
    """
    from scipy.fft import dstn

    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    dom = state0.domain
    prop = LinearPropagator.build(dom, physics, dt / 2.0)
    f = physics.nonlinearity.f
    pad = np.zeros(dom.grid_shape)
    pad_slice = tuple(slice(0, n) for n in dom.shape)
    grid_scale = 0.5**dom.dim
    proj_scale = 1.0 / float(dom.grid_per_axis + 1) ** dom.dim

    def sample(u_c: np.ndarray, v_c: np.ndarray, t: float) -> State:
        return State(
            SpectralField(dom, u_c.copy()), SpectralField(dom, v_c.copy()), t
        )

    times = [state0.t]
    states = [state0] if keep_states else []
    if recorder is not None:
        recorder(state0)
    u_c = state0.u.coefficients.copy()
    v_c = state0.v.coefficients.copy()
    state = state0
    for n in range(1, n_steps + 1):
        u_c, v_c = prop.apply(u_c, v_c)
        pad[pad_slice] = u_c
        u_grid = dstn(pad, type=1) * grid_scale
        peak = float(np.max(np.abs(u_grid)))
        if not np.isfinite(peak) or peak > DIVERGENCE_GUARD:
            raise DivergedRunError(
                state0.t + (n - 1) * dt, f"diverged at step {n}, t = {state0.t + (n-1)*dt:.6g}"
            )
        fu_c = (dstn(f(u_grid), type=1) * proj_scale)[pad_slice]
        v_c = v_c - dt * fu_c
        u_c, v_c = prop.apply(u_c, v_c)
        if n % sample_every == 0 or n == n_steps:
            state = sample(u_c, v_c, state0.t + n * dt)
            times.append(state.t)
            if keep_states:
                states.append(state)
            if recorder is not None:
                recorder(state)
    return Trajectory(times=times, states=states, final=state)


def pde_residual(state: State, physics: Physics) -> SpectralField:
    """u_tt reconstructed from the equation:

    g - gamma A^{1/2} v + Lap u - lambda0 u - f(u), all in coefficients.
    """
    dom = state.domain
    mu = dom.eigenvalues
    fu = from_grid(physics.nonlinearity.f(to_grid(state.u)), dom).coefficients
    c = (
        physics.source.coefficients
        - physics.gamma * np.sqrt(1.0 + mu) * state.v.coefficients
        - (mu + physics.lambda0) * state.u.coefficients
        - fu
    )
    return SpectralField(dom, c)


def unweighted_energy(state: State, physics: Physics) -> dict[str, float]:
    """Energy ledger entries: kinetic, gradient, mass, potential and total.

    E = 1/2 |v|^2 + 1/2 |grad u|^2 + lambda0/2 |u|^2 + int F(u).
    """
    dom = state.domain
    w = dom.mode_l2_weight
    mu = dom.eigenvalues
    kin = 0.5 * float(np.sum(state.v.coefficients**2)) * w
    grad = 0.5 * float(np.sum(mu * state.u.coefficients**2)) * w
    mass = 0.5 * physics.lambda0 * float(np.sum(state.u.coefficients**2)) * w
    u_grid = to_grid(state.u)
    pot = float(np.sum(physics.nonlinearity.antiderivative(u_grid))) * dom.cell_volume
    quad = kin + grad + mass
    return {
        "kinetic": kin,
        "gradient": grad,
        "mass": mass,
        "potential": pot,
        "quadratic": quad,
        "total": quad + pot,
    }


def initial_state(
    domain: BoxDomain,
    physics: Physics,
    seed: int,
    r_u: float = 1.5,
    r_v: float = 1.0,
    target_energy: float = 1.0,
    v_weight: float = 1.0,
) -> State:
    """Random initial data with |k|^-r coefficient decay, scaled to a target
    energy norm sqrt(|grad u|^2 + lambda0 |u|^2 + |v|^2)."""
    rng = np.random.default_rng(seed)
    k2 = np.zeros(domain.shape)
    for axis in range(domain.dim):
        k = np.arange(1, domain.modes_per_axis + 1, dtype=float) ** 2
        sh = [1] * domain.dim
        sh[axis] = domain.modes_per_axis
        k2 = k2 + k.reshape(sh)
    kabs = np.sqrt(k2)
    u_c = kabs ** (-r_u) * rng.standard_normal(domain.shape)
    v_c = v_weight * kabs ** (-r_v) * rng.standard_normal(domain.shape)
    w = domain.mode_l2_weight
    mu = domain.eigenvalues
    norm2 = (
        float(np.sum(mu * u_c**2)) * w
        + physics.lambda0 * float(np.sum(u_c**2)) * w
        + float(np.sum(v_c**2)) * w
    )
    scale = target_energy / np.sqrt(norm2) if norm2 > 0 else 0.0
    return State(SpectralField(domain, u_c * scale), SpectralField(domain, v_c * scale), 0.0)
