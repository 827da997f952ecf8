import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracwave.dynamics import NonlinearitySpec, Physics, State, initial_state
from fracwave.functionals import (
    EnergyLedger,
    LedgerRecorder,
    Psi_n,
    Psi_n_prime,
    appendix_energy,
    additive_constant,
    center_key,
    lyapunov_psi,
    pair_key,
    psi_n,
    psi_n_prime,
    sup_key,
    twin_factor_AT,
    window_integrals,
)
from fracwave.grid import BoxDomain, SpectralField
from fracwave.weights import WeightSpec, center_lattice, energy_norm


@pytest.fixture
def dom():
    return BoxDomain(1, 20.0, 64, 3)


def make_physics(dom, kind="quintic", g=None, gamma=1.0, lambda0=1.0):
    src = g if g is not None else SpectralField.zero(dom)
    return Physics(gamma, lambda0, NonlinearitySpec(kind), src)


# --- psi_n / Psi_n ---------------------------------------------------------------


def test_psi_examples():
    assert psi_n(1.0, 2.0) == pytest.approx(1.0)  # r^3 branch
    assert psi_n(3.0, 2.0) == pytest.approx(20.0)  # 3 n^2 r - 2 n^3 = 36 - 16
    assert psi_n(-3.0, 2.0) == pytest.approx(-20.0)


def test_psi_prime_is_Psi_prime_squared():
    for n in (1.0, 2.0, 10.0):
        for r in (0.5 * n, n, 2.0 * n, -1.3 * n):
            assert psi_n_prime(r, n) == pytest.approx(Psi_n_prime(r, n) ** 2, abs=1e-12)


def test_psi_properties_dense_grid():
    r = np.linspace(-50, 50, 20001)
    for n in (1.0, 2.0, 10.0):
        psi = psi_n(r, n)
        Psi = Psi_n(r, n)
        assert np.all(np.abs(psi) <= 3.0 * n**2 * np.abs(r) + 1e-12)
        assert np.all(psi_n_prime(r, n) >= 0.0)
        assert np.all(Psi**2 <= psi * r + 1e-10)
        # C1 continuity at the seam
        h = 1e-7
        for seam in (n, -n):
            left = (psi_n(seam, n) - psi_n(seam - h, n)) / h
            right = (psi_n(seam + h, n) - psi_n(seam, n)) / h
            assert left == pytest.approx(right, rel=1e-5)
    with pytest.raises(ValueError):
        psi_n(1.0, 0.0)


def test_psi_odd_Psi_even():
    r = np.linspace(-9, 9, 101)
    assert np.allclose(psi_n(r, 2.0), -psi_n(-r, 2.0))
    assert np.allclose(Psi_n(r, 2.0), Psi_n(-r, 2.0))


@given(
    r=st.floats(-1e6, 1e6, allow_nan=False),
    n=st.floats(1e-3, 1e3, allow_nan=False),
)
@settings(max_examples=300, deadline=None)
def test_psi_invariants_property(r, n):
    psi = psi_n(r, n)
    Psi = Psi_n(r, n)
    assert abs(psi) <= 3.0 * n**2 * abs(r) * (1 + 1e-12)
    assert psi_n_prime(r, n) >= 0.0
    assert Psi**2 <= psi * r * (1 + 1e-9) + 1e-12
    assert psi_n_prime(r, n) == pytest.approx(Psi_n_prime(r, n) ** 2, rel=1e-12, abs=1e-12)


# --- lyapunov functional -----------------------------------------------------------


def test_lyapunov_zero_state(dom):
    phys = make_physics(dom)
    z = State(SpectralField.zero(dom), SpectralField.zero(dom))
    assert lyapunov_psi(z, 0.05, (10.0,), 2.0, phys) == 0.0


def test_lyapunov_large_n_matches_cubic(dom):
    phys = make_physics(dom)
    st = initial_state(dom, phys, seed=1, target_energy=1.0)
    from fracwave.grid import to_grid

    umax = np.max(np.abs(to_grid(st.u)))
    val_n = lyapunov_psi(st, 0.05, (10.0,), 10.0 * umax, phys)
    # same expression with psi replaced by u^3 once n exceeds max|u|
    from fracwave.fracops import apply_spectral
    from fracwave.grid import grid_quadrature
    from fracwave.weights import weight_grid

    phi = weight_grid(WeightSpec("smooth_exp", 0.05, (10.0,)), dom)
    u = to_grid(st.u)
    v = to_grid(st.v)
    a12 = to_grid(apply_spectral(st.u, 0.5))
    cubic = grid_quadrature(phi**4 * (v + phys.gamma * a12) * u**3, dom)
    assert val_n == pytest.approx(cubic, rel=1e-12)


def test_lyapunov_state_flip_symmetry(dom):
    # psi_n odd and A^{1/2} linear make both pairings products of two
    # sign-flips: the functional is even under (u, v) -> (-u, -v), and the
    # velocity pairing alone is odd in v at fixed u
    phys = make_physics(dom)
    st = initial_state(dom, phys, seed=2, target_energy=1.0)
    flipped = State(-1.0 * st.u, -1.0 * st.v, st.t)
    a = lyapunov_psi(st, 0.05, (7.0,), 2.0, phys)
    b = lyapunov_psi(flipped, 0.05, (7.0,), 2.0, phys)
    assert a == pytest.approx(b, rel=1e-12)
    v_flipped = State(st.u, -1.0 * st.v, st.t)
    c = lyapunov_psi(v_flipped, 0.05, (7.0,), 2.0, phys)
    gamma_part = (a + c) / 2.0  # the v-pairing cancels in the average
    v_pairing = a - gamma_part
    v_pairing_flipped = c - gamma_part
    assert v_pairing == pytest.approx(-v_pairing_flipped, rel=1e-9)


# --- appendix energy ---------------------------------------------------------------


def test_appendix_energy_zero_state(dom):
    phys = make_physics(dom)
    z = State(SpectralField.zero(dom), SpectralField.zero(dom))
    c_eps = additive_constant(phys, 0.05, (10.0,), dom)
    val = appendix_energy(z, 0.05, (10.0,), 0.0, phys)
    assert val == pytest.approx(c_eps)
    assert c_eps > 0


def test_appendix_energy_collapses_without_extras(dom):
    phys = make_physics(dom, kind="zero")
    st = initial_state(dom, phys, seed=3, target_energy=2.0)
    c_eps = additive_constant(phys, 0.05, (10.0,), dom)
    val = appendix_energy(st, 0.05, (10.0,), 0.0, phys)
    en = energy_norm(st.u, st.v, WeightSpec("smooth_exp", 0.05, (10.0,)), phys.lambda0)
    assert val - c_eps == pytest.approx(en.total, rel=1e-12)


def test_appendix_energy_delta_range(dom):
    phys = make_physics(dom)
    st = initial_state(dom, phys, seed=3)
    with pytest.raises(ValueError):
        appendix_energy(st, 0.05, (10.0,), 1.0, phys)  # delta > min(gamma, lambda0)/10


def test_appendix_energy_sandwich_random_states(dom):
    phys = make_physics(dom, kind="quintic")
    delta = min(phys.gamma, phys.lambda0) / 20.0
    rng = np.random.default_rng(4)
    for trial in range(50):
        st = initial_state(dom, phys, seed=int(rng.integers(1 << 30)),
                           target_energy=float(rng.uniform(0.2, 4.0)))
        x0 = (float(rng.uniform(0, 20.0)),)
        en = energy_norm(st.u, st.v, WeightSpec("smooth_exp", 0.05, x0), phys.lambda0)
        val = appendix_energy(st, 0.05, x0, delta, phys)
        assert val >= 0.5 * en.total - 1e-9


def test_appendix_energy_upper_sandwich(dom):
    # E_{3 eps}^{1/3} <= c^{-1} (|xi|^2_eps + C_eps (1 + |phi g|^2)); boundedness
    # of the measured quotient is the checked shape, c is recorded
    rng = np.random.default_rng(5)
    g = SpectralField(dom, 0.3 * rng.standard_normal(dom.shape) * np.arange(1, 65) ** -2.0)
    phys = make_physics(dom, kind="quintic", g=g)
    delta = min(phys.gamma, phys.lambda0) / 20.0
    from fracwave.grid import grid_quadrature, to_grid
    from fracwave.weights import weight_grid

    quotients = []
    for trial in range(20):
        st = initial_state(dom, phys, seed=trial, target_energy=float(rng.uniform(0.5, 3.0)))
        x0 = (float(rng.uniform(0, 20.0)),)
        lhs = appendix_energy(st, 0.15, x0, delta, phys) ** (1.0 / 3.0)
        en = energy_norm(st.u, st.v, WeightSpec("smooth_exp", 0.05, x0), phys.lambda0)
        phi = weight_grid(WeightSpec("smooth_exp", 0.15, x0), dom)
        c_eps = additive_constant(phys, 0.15, x0, dom)
        rhs = en.total + c_eps * (1.0 + grid_quadrature((phi * to_grid(phys.source)) ** 2, dom))
        quotients.append(lhs / rhs)
    assert max(quotients) <= 50.0  # module constant c^{-1} = 50 at desk scale


# --- ledger -----------------------------------------------------------------------


def build_ledger(dom, phys, n_rows=6, seed=6):
    rec = LedgerRecorder(dom, phys, [0.05, 0.15], [(5.0,), (10.0,), (15.0,)])
    from fracwave.dynamics import simulate

    st = initial_state(dom, phys, seed=seed, target_energy=1.5)
    simulate(st, phys, 1e-2, 10 * (n_rows - 1), sample_every=10, recorder=rec)
    return rec


def test_ledger_columns_match_manifest(dom):
    phys = make_physics(dom)
    rec = build_ledger(dom, phys)
    man = rec.ledger.manifest()
    assert [c["name"] for c in man["columns"]] == rec.ledger.columns
    assert all("description" in c for c in man["columns"])


def test_ledger_roundtrip(tmp_path, dom):
    phys = make_physics(dom)
    rec = build_ledger(dom, phys)
    csv_path, man_path = rec.ledger.write(tmp_path)
    back = EnergyLedger.read(csv_path, man_path)
    assert back.columns == rec.ledger.columns
    assert np.array_equal(back.as_array(), rec.ledger.as_array())  # %.17g is lossless


def test_ledger_rejects_nonfinite(dom):
    led = EnergyLedger(columns=["t", "x"])
    led.append({"t": 0.0, "x": 1.0})
    with pytest.raises(ValueError):
        led.append({"t": 1.0, "x": np.nan})
    with pytest.raises(ValueError):
        led.append({"t": 0.0, "x": 2.0})  # non-increasing time


def test_ledger_sup_columns(dom):
    phys = make_physics(dom)
    rec = build_ledger(dom, phys)
    led = rec.ledger
    arr = led.as_array()
    for base in ("en2", "Ebb", "l12w4"):
        per_center = np.stack(
            [led.column(pair_key(base, 0, j)) for j in range(3)], axis=1
        )
        assert np.allclose(led.column(sup_key(base, 0)), per_center.max(axis=1))
    ball = np.stack([led.column(center_key("l12b2w4", j)) for j in range(3)], axis=1)
    assert np.allclose(led.column(sup_key("l12b2w4")), ball.max(axis=1))
    assert arr.shape[0] == 6


# --- window integrals ----------------------------------------------------------------


def test_window_integrals_zero_trajectory(dom):
    phys = make_physics(dom)
    rec = LedgerRecorder(dom, phys, [0.05], [(10.0,)])
    from fracwave.dynamics import simulate

    z = State(SpectralField.zero(dom), SpectralField.zero(dom))
    simulate(z, phys, 1e-2, 100, sample_every=10, recorder=rec)
    out = window_integrals(rec.ledger, 1.0)
    assert all(v == [0.0] for v in out.values())


def test_window_integrals_constant_integrand():
    led = EnergyLedger(
        columns=["t", pair_key("l12w4", 0, 0), pair_key("h32", 0, 0),
                 pair_key("utt", 0, 0), pair_key("d14v", 0, 0)],
        meta={"eps_list": [0.05], "centers": [[1.0]]},
    )
    for i in range(11):
        led.append({
            "t": 0.1 * i,
            pair_key("l12w4", 0, 0): 3.0,
            pair_key("h32", 0, 0): 1.0,
            pair_key("utt", 0, 0): 2.0,
            pair_key("d14v", 0, 0): 0.5,
        })
    out = window_integrals(led, 1.0, window=1.0)
    assert out["l12w4"][0] == pytest.approx(3.0)
    assert out["utt"][0] == pytest.approx(2.0)


def test_window_integrals_coverage_error(dom):
    phys = make_physics(dom)
    rec = build_ledger(dom, phys, n_rows=4)
    with pytest.raises(ValueError):
        window_integrals(rec.ledger, 5.0)


def test_window_refinement(dom):
    # halving an already-resolving cadence changes window integrals by < 1%
    phys = make_physics(dom)
    from fracwave.dynamics import simulate

    vals = {}
    for cadence in (4, 2):
        rec = LedgerRecorder(dom, phys, [0.05], [(10.0,)])
        st = initial_state(dom, phys, seed=8, target_energy=1.0)
        simulate(st, phys, 5e-3, 320, sample_every=cadence, recorder=rec)
        vals[cadence] = window_integrals(rec.ledger, 1.5)["l12w4"][0]
    assert vals[2] == pytest.approx(vals[4], rel=1e-2)


# --- twin factor -----------------------------------------------------------------------


def constant_ledger(value, centers=((1.0,), (2.0,)), n=11, t_max=1.0):
    cols = ["t"] + [center_key("l12b2w4", j) for j in range(len(centers))]
    led = EnergyLedger(columns=cols, meta={"eps_list": [0.05], "centers": [list(c) for c in centers]})
    for i in range(n):
        row = {"t": t_max * i / (n - 1)}
        for j in range(len(centers)):
            row[center_key("l12b2w4", j)] = value
        led.append(row)
    return led


def test_twin_factor_zero_trajectories():
    l1 = constant_ledger(0.0, t_max=2.0)
    l2 = constant_ledger(0.0, t_max=2.0)
    assert twin_factor_AT(l1, l2, 2.0, C=1.0) == pytest.approx(np.exp(2.0))
    assert twin_factor_AT(l1, l2, 2.0, C=0.0) == pytest.approx(1.0)


def test_twin_factor_monotone_in_T():
    l1 = constant_ledger(1.0, t_max=4.0, n=41)
    l2 = constant_ledger(0.5, t_max=4.0, n=41)
    vals = [twin_factor_AT(l1, l2, T, C=0.3) for T in (1.0, 2.0, 4.0)]
    assert vals[0] < vals[1] < vals[2]


def test_twin_factor_center_mismatch():
    l1 = constant_ledger(1.0, centers=((1.0,),))
    l2 = constant_ledger(1.0, centers=((2.0,),))
    with pytest.raises(ValueError):
        twin_factor_AT(l1, l2, 1.0)
