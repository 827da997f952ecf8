import numpy as np
import pytest

from fracwave.dynamics import (
    DivergedRunError,
    LinearPropagator,
    NonlinearitySpec,
    Physics,
    State,
    initial_state,
    linear_halfstep,
    nonlinear_kick,
    pde_residual,
    simulate,
    step,
    unweighted_energy,
)
from fracwave.grid import BoxDomain, SpectralField, from_grid, l2_norm, to_grid


def closed_form_mode(a, b, c0, v0, t):
    """Damped-oscillator oracle from the explicit roots; the limit formula is
    used when |a^2 - 4b| < 1e-12."""
    disc = a * a - 4.0 * b
    if abs(disc) < 1e-12:
        B = v0 + 0.5 * a * c0
        c = (c0 + B * t) * np.exp(-0.5 * a * t)
        v = (B - 0.5 * a * (c0 + B * t)) * np.exp(-0.5 * a * t)
        return c, v
    root = np.sqrt(complex(disc))
    rp, rm = (-a + root) / 2.0, (-a - root) / 2.0
    alpha = (v0 - rm * c0) / (rp - rm)
    beta = (rp * c0 - v0) / (rp - rm)
    c = alpha * np.exp(rp * t) + beta * np.exp(rm * t)
    v = alpha * rp * np.exp(rp * t) + beta * rm * np.exp(rm * t)
    return c.real, v.real


def make_physics(dom, gamma=1.0, lambda0=1.0, kind="zero", g=None, **kw):
    src = g if g is not None else SpectralField.zero(dom)
    return Physics(gamma, lambda0, NonlinearitySpec(kind, **kw), src)


@pytest.mark.parametrize(
    "gamma,label",
    [(1.0, "underdamped"), (10.0, "overdamped"), (2.0, "critical"), (2.0 + 1e-9, "near-critical")],
)
def test_linear_single_mode_exact(gamma, label):
    dom = BoxDomain(1, np.pi, 4, 3)
    phys = make_physics(dom, gamma=gamma)
    mu1 = float(dom.eigenvalues[0])
    a, b = gamma * np.sqrt(1.0 + mu1), mu1 + 1.0
    state = State(SpectralField.single_mode(dom, 1, 0.7), SpectralField.single_mode(dom, 1, -0.3))
    dt = 0.01
    worst = 0.0
    for n in range(1, 1001):
        state = step(state, dt, phys)
        ce, ve = closed_form_mode(a, b, 0.7, -0.3, n * dt)
        worst = max(worst, abs(state.u.coefficients[0] - ce), abs(state.v.coefficients[0] - ve))
    assert worst < 1e-10, f"{label}: {worst}"


def test_halfstep_zero_dt_identity():
    dom = BoxDomain(1, 2.0, 8, 3)
    phys = make_physics(dom)
    st = initial_state(dom, phys, seed=0)
    out = linear_halfstep(st, 0.0, phys)
    assert out is st


def test_equilibrium_fixed_point_of_linear_flow():
    dom = BoxDomain(1, 5.0, 16, 3)
    rng = np.random.default_rng(1)
    g = SpectralField(dom, rng.standard_normal(dom.shape))
    phys = make_physics(dom, g=g)
    u_eq = g.coefficients / (dom.eigenvalues + phys.lambda0)
    st = State(SpectralField(dom, u_eq), SpectralField.zero(dom))
    out = linear_halfstep(st, 0.37, phys)
    assert np.max(np.abs(out.u.coefficients - u_eq)) < 1e-14
    assert np.max(np.abs(out.v.coefficients)) < 1e-14


def test_kick_zero_nonlinearity_identity():
    dom = BoxDomain(1, 2.0, 8, 3)
    phys = make_physics(dom, kind="zero")
    st = initial_state(dom, phys, seed=2)
    out = nonlinear_kick(st, 0.1, phys)
    assert np.array_equal(out.v.coefficients, st.v.coefficients)
    assert np.array_equal(out.u.coefficients, st.u.coefficients)


def test_kick_quintic_pointwise():
    # u built from modes 1 and 3 only: u^5 stays within 15 <= N modes, so the
    # kick equals -dt u^5 pointwise and exactly
    dom = BoxDomain(1, 2.0, 16, 3)
    phys = make_physics(dom, kind="quintic")
    x = dom.axis_points
    profile = 0.7 * np.sin(np.pi * x / 2.0) ** 3  # modes 1 and 3
    st = State(from_grid(profile, dom), SpectralField.zero(dom))
    dt = 0.05
    out = nonlinear_kick(st, dt, phys)
    u_grid = to_grid(st.u)
    dv = to_grid(out.v) - to_grid(st.v)
    assert np.max(np.abs(dv + dt * u_grid**5)) < 1e-13
    # for arbitrary fields the identity holds after projection
    rng = np.random.default_rng(3)
    st2 = State(SpectralField(dom, 0.3 * rng.standard_normal(dom.shape)), SpectralField.zero(dom))
    out2 = nonlinear_kick(st2, dt, phys)
    expected = -dt * from_grid(to_grid(st2.u) ** 5, dom).coefficients
    assert np.allclose(out2.v.coefficients - st2.v.coefficients, expected, atol=1e-14)


def test_kick_sin5_zero_value():
    spec = NonlinearitySpec("sin5")
    assert spec.f(np.array([0.0]))[0] == 0.0
    # continuous extension: f(u) ~ u^4 near zero
    u = np.array([1e-4])
    assert spec.f(u)[0] == pytest.approx(u[0] ** 4, rel=1e-6)


def test_step_convergence_order():
    dom = BoxDomain(1, 20.0, 64, 3)
    phys = make_physics(dom, kind="quintic")
    st0 = initial_state(dom, phys, seed=1, target_energy=2.0)

    def final(dt):
        n = int(round(1.0 / dt))
        return simulate(st0, phys, dt, n, sample_every=n).final

    f1, f2, f3 = final(4e-3), final(2e-3), final(1e-3)
    e12 = l2_norm(f1.u - f2.u) + l2_norm(f1.v - f2.v)
    e23 = l2_norm(f2.u - f3.u) + l2_norm(f2.v - f3.v)
    order = np.log2(e12 / e23)
    assert 1.7 <= order <= 2.3


def test_linear_energy_monotone():
    dom = BoxDomain(1, 20.0, 64, 3)
    phys = make_physics(dom, kind="zero")
    st = initial_state(dom, phys, seed=4, target_energy=1.0)
    e_prev = unweighted_energy(st, phys)["total"]
    for _ in range(300):
        st = step(st, 1e-3, phys)
        e = unweighted_energy(st, phys)["total"]
        assert e <= e_prev + 1e-14
        e_prev = e


def test_quintic_energy_monotone_within_tolerance():
    dom = BoxDomain(1, 20.0, 128, 3)
    phys = make_physics(dom, kind="quintic")
    st = initial_state(dom, phys, seed=5, target_energy=2.0)
    e0 = unweighted_energy(st, phys)["total"]
    e_prev = e0
    for _ in range(1000):
        st = step(st, 1e-3, phys)
        e = unweighted_energy(st, phys)["total"]
        assert e <= e_prev + 1e-6 * e0
        e_prev = e


def test_determinism_bitwise():
    dom = BoxDomain(1, 10.0, 32, 3)
    phys = make_physics(dom, kind="quintic", c3=0.5)
    st = initial_state(dom, phys, seed=6, target_energy=1.5)
    t1 = simulate(st, phys, 1e-3, 200, sample_every=50)
    t2 = simulate(st, phys, 1e-3, 200, sample_every=50)
    for a, b in zip(t1.states, t2.states):
        assert np.array_equal(a.u.coefficients, b.u.coefficients)
        assert np.array_equal(a.v.coefficients, b.v.coefficients)


def test_fast_loop_matches_step_composition():
    dom = BoxDomain(1, 10.0, 32, 3)
    phys = make_physics(dom, kind="quintic")
    st = initial_state(dom, phys, seed=7, target_energy=1.0)
    manual = st
    for _ in range(40):
        manual = step(manual, 2e-3, phys)
    traj = simulate(st, phys, 2e-3, 40, sample_every=40)
    assert np.array_equal(manual.u.coefficients, traj.final.u.coefficients)
    assert np.array_equal(manual.v.coefficients, traj.final.v.coefficients)


def test_divergence_guard():
    dom = BoxDomain(1, 5.0, 16, 3)
    phys = make_physics(dom, kind="quintic")
    huge = State(
        SpectralField(dom, np.full(dom.shape, 1e5)), SpectralField.zero(dom)
    )
    with pytest.raises(DivergedRunError) as err:
        simulate(huge, phys, 1e-2, 100, sample_every=10)
    assert err.value.time >= 0.0


def test_simulate_zero_data_stays_zero():
    dom = BoxDomain(1, 5.0, 16, 3)
    phys = make_physics(dom, kind="quintic")
    z = State(SpectralField.zero(dom), SpectralField.zero(dom))
    traj = simulate(z, phys, 1e-2, 100, sample_every=20)
    for st in traj.states:
        assert np.all(st.u.coefficients == 0.0) and np.all(st.v.coefficients == 0.0)


def test_simulate_linear_matches_closed_form_with_forcing():
    dom = BoxDomain(1, np.pi, 8, 3)
    rng = np.random.default_rng(8)
    g = SpectralField(dom, rng.standard_normal(dom.shape))
    phys = make_physics(dom, gamma=1.3, lambda0=0.7, g=g)
    u0 = rng.standard_normal(dom.shape)
    v0 = rng.standard_normal(dom.shape)
    st = State(SpectralField(dom, u0), SpectralField(dom, v0))
    traj = simulate(st, phys, 1e-3, 2000, sample_every=500)
    mu = dom.eigenvalues
    for sampled in traj.states[1:]:
        t = sampled.t
        for k in range(dom.modes_per_axis):
            a = phys.gamma * np.sqrt(1.0 + mu[k])
            b = mu[k] + phys.lambda0
            ceq = g.coefficients[k] / b
            ce, ve = closed_form_mode(a, b, u0[k] - ceq, v0[k], t)
            assert sampled.u.coefficients[k] == pytest.approx(ce + ceq, abs=1e-8)
            assert sampled.v.coefficients[k] == pytest.approx(ve, abs=1e-8)


def test_residual_zero_at_equilibrium():
    dom = BoxDomain(1, 6.0, 32, 3)
    phys = make_physics(dom, kind="quintic")
    rng = np.random.default_rng(9)
    # build an equilibrium by picking u* and defining g := -lap u* + lam u* + f(u*)
    u_star = SpectralField(dom, 0.2 * rng.standard_normal(dom.shape) * np.arange(1, 33) ** -2.0)
    fu = from_grid(phys.nonlinearity.f(to_grid(u_star)), dom)
    g = SpectralField(
        dom, (dom.eigenvalues + phys.lambda0) * u_star.coefficients + fu.coefficients
    )
    phys_eq = make_physics(dom, kind="quintic", g=g)
    st = State(u_star, SpectralField.zero(dom))
    res = pde_residual(st, phys_eq)
    assert l2_norm(res) < 1e-10


def test_residual_matches_linear_closed_form():
    dom = BoxDomain(1, np.pi, 4, 3)
    phys = make_physics(dom, gamma=1.0, lambda0=1.0)
    mu1 = float(dom.eigenvalues[0])
    a, b = np.sqrt(1.0 + mu1) * phys.gamma, mu1 + phys.lambda0
    st0 = State(SpectralField.single_mode(dom, 1, 0.9), SpectralField.single_mode(dom, 1, 0.1))
    traj = simulate(st0, phys, 1e-3, 1000, sample_every=250)
    for sampled in traj.states:
        res = pde_residual(sampled, phys)
        # analytic second derivative: u_tt = -a v - b u per mode
        expect = -a * sampled.v.coefficients[0] - b * sampled.u.coefficients[0]
        assert res.coefficients[0] == pytest.approx(expect, abs=1e-8)


def test_residual_matches_centered_difference():
    dom = BoxDomain(1, 10.0, 32, 3)
    phys = make_physics(dom, kind="quintic")
    st = initial_state(dom, phys, seed=10, target_energy=1.0)
    dt = 1e-4
    s1 = step(st, dt, phys)
    s2 = step(s1, dt, phys)
    fd = (s2.v.coefficients - st.v.coefficients) / (2.0 * dt)
    res = pde_residual(s1, phys).coefficients
    scale = max(1.0, np.max(np.abs(res)))
    assert np.max(np.abs(fd - res)) / scale < 50.0 * dt**2 + 1e-6


def test_dissipativity_and_growth_constants():
    q = NonlinearitySpec("quintic")
    assert q.dissipativity_bound() == 0.0
    q2 = NonlinearitySpec("quintic", c3=-2.0, c1=0.5)
    M = q2.dissipativity_bound()
    s = np.linspace(-3, 3, 10001)
    assert np.all(q2.f(s) * s >= -M - 1e-9)
    s5 = NonlinearitySpec("sin5")
    assert s5.dissipativity_bound() == 1.0
    assert np.all(s5.f(s) * s >= -1.0 - 1e-12)
    # growth: |f'| <= C (1 + s^4), finite differences as the derivative probe
    for spec in (q, q2, s5):
        C = spec.growth_constant()
        h = 1e-6
        fp = (spec.f(s + h) - spec.f(s - h)) / (2 * h)
        assert np.all(np.abs(fp) <= C * (1.0 + s**4) * (1 + 1e-3) + 1e-3)


def test_f_lower_bound_constant():
    lambda0 = 1.0
    for spec in (
        NonlinearitySpec("quintic"),
        NonlinearitySpec("quintic", c3=-3.0, c1=-1.0),
        NonlinearitySpec("sin5"),
        NonlinearitySpec("zero"),
    ):
        C = spec.lower_bound_constant(lambda0)
        u = np.linspace(-12, 12, 200001)
        F = spec.antiderivative(u)
        assert np.all(F >= -(lambda0 / 8.0) * u**2 - C - 1e-7)


def test_sin5_antiderivative():
    # oracle 1: adaptive quadrature of sin(v^5)/v on the mildly oscillatory range
    spec = NonlinearitySpec("sin5")
    u = np.array([-2.0, 2.0])
    F = spec.antiderivative(u)
    assert F[0] == pytest.approx(-F[1], rel=1e-12)
    import scipy.integrate as si

    val, err = si.quad(lambda v: np.sin(v**5) / v, 1e-12, 2.0, limit=400)
    assert F[1] == pytest.approx(val, abs=max(1e-10, 10 * err))
    # oracle 2: extended-precision sine integral, F(u) = Si(u^5)/5
    import mpmath

    exact = float(mpmath.si(mpmath.mpf(7) ** 5) / 5)
    assert spec.antiderivative(np.array([7.0]))[0] == pytest.approx(exact, rel=1e-12)
