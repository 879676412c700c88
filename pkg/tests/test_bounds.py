import numpy as np
import pytest
import scipy.integrate
import scipy.optimize
import scipy.special
from hypothesis import given, settings, strategies as st

from chanclone import bounds as bd
from chanclone import channels as ch
from chanclone import linalg as la
from chanclone import metrics as mt

SZ = la.PAULI[3]


def _a_oracle(z):
    # bounded 1-D max over R of ½(arccos e^{−R} − √(2Rz))
    g = lambda r: -0.5 * (np.arccos(np.exp(-r)) - np.sqrt(2 * r * z))
    res = scipy.optimize.minimize_scalar(g, bounds=(0, 60), method="bounded",
                                         options={"xatol": 1e-12})
    return max(-res.fun, 0.0)


def test_lambert_examples():
    assert bd.lambert_w_m1(-1 / np.e) == pytest.approx(-1.0)
    assert bd.lambert_w_m1(-2 * np.exp(-2)) == pytest.approx(-2.0, abs=1e-12)
    w = bd.lambert_w_m1(-0.1)
    assert abs(w * np.exp(w) + 0.1) < 1e-13
    with pytest.raises(ValueError):
        bd.lambert_w_m1(0.1)


@settings(max_examples=60, deadline=None)
@given(st.floats(-1 / np.e + 1e-12, -1e-200))
def test_lambert_residual_and_branch(y):
    w = bd.lambert_w_m1(y)
    assert w <= -1
    assert abs(w * np.exp(w) - y) <= 1e-13


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.36, -1e-200))
def test_lambert_matches_scipy(y):
    # scipy loses digits right at the branch point, so stay away from it
    ref = scipy.special.lambertw(y, -1).real
    assert bd.lambert_w_m1(y) == pytest.approx(ref, rel=1e-10)


def test_a_function_examples():
    assert bd.a_function(1.0) == 0.0
    assert bd.a_function(3.0) == 0.0
    assert bd.a_function(0.0) == pytest.approx(np.pi / 4)
    assert bd.a_function(1e-14) == pytest.approx(np.pi / 4, abs=1e-5)
    assert bd.a_function(0.5) == pytest.approx(_a_oracle(0.5), abs=1e-8)
    with pytest.raises(ValueError):
        bd.a_function(-0.1)


def test_a_function_matches_direct_max():
    for z in np.arange(1, 10) / 10:
        assert bd.a_function(z) == pytest.approx(_a_oracle(z), abs=1e-8)


def test_a_function_monotone():
    zs = np.linspace(0, 1.2, 100)
    vals = [bd.a_function(z) for z in zs]
    assert np.all(np.diff(vals) <= 1e-10)


def test_a_tilde_examples():
    assert bd.a_tilde(1.0) == 0.0
    vals = [bd.a_tilde(z) for z in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] == pytest.approx(np.pi / 4, abs=1e-3)
    xs = np.linspace(0, 1, 10 ** 6 + 1)
    grid = np.max(0.5 * (np.arccos(xs ** 2) - np.arccos(xs)))
    assert bd.a_tilde(0.5) == pytest.approx(grid, abs=1e-6)
    with pytest.raises(ValueError):
        bd.a_tilde(0.0)


def test_alpha_beta_examples():
    for g in (0.2, 0.5, 0.8):
        ab = bd.alpha_beta(ch.ad_curve(), g)
        assert ab.beta_norm < 1e-12
        assert ab.alpha_norm == pytest.approx(1 / (4 * g * (1 - g)))
    assert bd.alpha_beta(ch.pauli_curve(), 0.3).beta_norm < 1e-12
    ab = bd.alpha_beta(ch.phase_curve(), 0.4)
    assert np.allclose(ab.beta, -1j * SZ)
    assert ab.beta_norm == pytest.approx(1.0)
    with pytest.raises(ValueError):
        bd.alpha_beta(ch.ad_curve(), 1.0)


def test_beta_removable_examples():
    assert bd.beta_removable(ch.ad_curve(), 0.4)[0]
    ok, res, _ = bd.beta_removable(ch.phase_curve(), 0.4)
    assert not ok and res > 0.1
    for p in (0.1, 0.3):
        assert not bd.beta_removable(ch.noisy_phase_B_curve(p), 0.5)[0]


def test_f_n_examples():
    for n in (1, 2, 5):
        assert bd.f_n(ch.ad_curve(), 0.5, n) == pytest.approx(n)
        assert bd.f_n(ch.phase_curve(), 0.3, n) == pytest.approx(n * n)
    c = ch.noisy_phase_A_curve(0.2)
    assert bd.f_n(c, 0.7, 1) == pytest.approx(bd.alpha_beta(c, 0.7).alpha_norm)


def test_qfi_examples():
    g = 0.3
    assert bd.cj_qfi(ch.ad_curve(), g) == pytest.approx(1 / (2 * g * (1 - g)), rel=1e-3)
    x = 0.3
    assert bd.cj_qfi(ch.pauli_curve(), x) == pytest.approx(1 / x + 1 / (1 - x), rel=1e-3)
    d = ch.pauli_curve(direction=(-1, 0.5, 0.25, 0.25))
    p = np.array([1 - x, 0.5 * x, 0.25 * x, 0.25 * x])
    pd = np.array([-1, 0.5, 0.25, 0.25])
    assert bd.cj_qfi(d, x) == pytest.approx(np.sum(pd ** 2 / p), rel=1e-3)
    plus = np.array([1, 1]) / np.sqrt(2)

    def state(th):
        v = ch.phase_unitary(th) @ plus
        return np.outer(v, v.conj())

    q, status = bd.qfi_state(state, 0.2)
    assert status == "ok"
    assert q == pytest.approx(4.0, abs=1e-4)
    with pytest.warns(UserWarning):
        assert bd.qfi_state(state, 0.2, dx=1e-9)[1] == "ill-conditioned"


def _curves():
    return [ch.ad_curve(), ch.pauli_curve(), ch.phase_curve(),
            ch.noisy_phase_A_curve(0.2), ch.noisy_phase_B_curve(0.2)]


def test_f1_dominates_cj_qfi():
    for c in _curves():
        lo, hi = c.domain
        if not np.isfinite(hi):
            lo, hi = 0.0, np.pi
        for x in np.linspace(lo, hi, 22)[1:-1]:
            q = bd.cj_qfi(c, x)
            assert 4 * bd.f_n(c, x, 1) >= q * (1 - 1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 0.9))
def test_gauge_covariance(seed, x):
    rng = np.random.default_rng(seed)
    c = ch.noisy_phase_A_curve(0.3)
    ks = list(c.kraus_at(x).kraus)
    h = la.random_hermitian(len(ks), rng)
    a0, a1 = bd.alpha_beta(c, x), bd.alpha_beta(c, x, h)
    shift = sum(h[i, j] * ks[i].conj().T @ ks[j] for i in range(len(ks)) for j in range(len(ks)))
    assert np.allclose(a1.beta, a0.beta - 1j * shift, atol=1e-10)
    assert np.linalg.eigvalsh(a1.alpha)[0] >= -1e-10


def test_state_cloning_lower_examples():
    rng = np.random.default_rng(0)
    r = la.random_density(2, rng)
    assert bd.state_cloning_lower(r, r, 1, 5) == pytest.approx(0.0, abs=1e-7)
    s = la.random_density(2, rng)
    assert bd.state_cloning_lower(r, s, 3, 3) == 0.0
    a = np.array([1.0, 0.0])
    b = np.array([0.99, np.sqrt(1 - 0.99 ** 2)])
    ra, rb = np.outer(a, a), np.outer(b, b)
    want = 0.5 * (np.arccos(0.99 ** 100) - np.arccos(0.99 ** 10))
    assert bd.state_cloning_lower(ra, rb, 10, 100) == pytest.approx(want, abs=1e-9)


def test_discrimination_bound_examples():
    e = ch.phase_gate(0.3)
    assert bd.cloning_lower_discrimination(e, e, 1, 3) == pytest.approx(0.0, abs=1e-12)
    # Θ = π/2, M = 2 : MΘ = π
    u0, u1 = ch.phase_gate(0.0), ch.phase_gate(np.pi / 4)
    assert bd.cloning_lower_discrimination(u0, u1, 1, 2) >= np.pi / 8 - 1e-12
    with pytest.raises(ValueError):
        bd.cloning_lower_discrimination(ch.amplitude_damping(0.1), ch.amplitude_damping(0.2), 1, 2)


def test_metrology_bound_ad_matches_quadrature():
    n, m, a, b = 4, 40, 0.3, 0.31
    val = bd.cloning_lower_metrology(ch.ad_curve(), (a, b), n, m)
    integral, _ = scipy.integrate.quad(lambda g: np.sqrt(n / (4 * g * (1 - g))), a, b, epsabs=1e-12)
    target = np.arccos(mt.ad_cj_fidelity(a, b) ** m)
    assert val >= 0
    assert val == pytest.approx(max(0.5 * (target - integral), 0.0), abs=1e-7)
    assert bd.metrology_integral(ch.ad_curve(), a, b, n) == pytest.approx(integral, abs=1e-8)


def test_prop5_examples():
    for lam in (0.5, 1.0, 3.0):
        assert bd.prop5_linear(ch.pauli_curve(), 0.3, lam) == pytest.approx(bd.a_function(1 / (1 + lam)), abs=1e-5)
        assert bd.prop5_linear(ch.ad_curve(), 0.4, lam) == pytest.approx(bd.a_function(2 / (1 + lam)), abs=1e-5)
    assert bd.prop5_linear(ch.ad_curve(), 0.4, 1e12) == pytest.approx(np.pi / 4, abs=1e-4)
    assert bd.pauli_bound(1e12) == pytest.approx(np.pi / 4, abs=1e-4)
    assert bd.prop5_quadratic(ch.noisy_phase_B_curve(0.2), 0.5, 1.0) >= 0
    with pytest.raises(ValueError):
        bd.prop5_quadratic(ch.ad_curve(), 0.4, 1.0)
    with pytest.raises(ValueError):
        bd.prop5_linear(ch.phase_curve(), 0.4, 1.0)


def test_unitary_diamond_lower():
    assert bd.unitary_diamond_lower(3, 3) == 0.0
    assert bd.unitary_diamond_lower(1, 10 ** 9) == pytest.approx(np.pi / 4)
    assert bd.unitary_diamond_lower(1, 2) == pytest.approx(np.pi / 8)
    with pytest.raises(ValueError):
        bd.unitary_diamond_lower(3, 2)


def test_simpson_and_golden():
    assert bd.adaptive_simpson(np.sin, 0, np.pi) == pytest.approx(2.0, abs=1e-9)
    x, fx = bd.golden_max(lambda t: -(t - 0.3) ** 2, 0, 1)
    assert x == pytest.approx(0.3, abs=1e-6)
