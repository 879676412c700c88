import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from chanclone import channels as ch
from chanclone import linalg as la
from chanclone import metrics as mt

seeds = st.integers(0, 2**31 - 1)


def _sqrtm_fidelity(rho, sigma):
    # textbook route: tr sqrt(√ρ σ √ρ)
    s = scipy.linalg.sqrtm(rho)
    return float(np.real(np.trace(scipy.linalg.sqrtm(s @ sigma @ s))))


def test_state_fidelity_examples():
    z0, z1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    assert mt.state_fidelity(z0, z0) == pytest.approx(1.0)
    assert mt.state_fidelity(z0, z1) == pytest.approx(0.0, abs=1e-15)
    assert mt.state_fidelity(z0, np.eye(2) / 2) == pytest.approx(1 / np.sqrt(2), abs=1e-14)


def test_state_fidelity_rejects_bad_input():
    with pytest.raises(ValueError):
        mt.state_fidelity(np.eye(2), np.eye(2) / 2)
    with pytest.raises(ValueError):
        mt.state_fidelity(np.diag([1.5, -0.5]), np.eye(2) / 2)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 4))
def test_fidelity_matches_sqrtm_route(seed, d):
    rng = np.random.default_rng(seed)
    rho, sigma = la.random_density(d, rng), la.random_density(d, rng)
    assert mt.state_fidelity(rho, sigma) == pytest.approx(_sqrtm_fidelity(rho, sigma), abs=1e-8)
    assert mt.state_fidelity(rho, sigma) == pytest.approx(mt.state_fidelity(sigma, rho), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_data_processing(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = la.random_density(2, rng), la.random_density(2, rng)
    lam = ch.random_channel(2, 2, rng)
    assert mt.state_fidelity(lam(rho), lam(sigma)) >= mt.state_fidelity(rho, sigma) - 1e-9


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_multiplicativity(seed):
    rng = np.random.default_rng(seed)
    r1, s1, r2, s2 = (la.random_density(2, rng) for _ in range(4))
    lhs = mt.state_fidelity(np.kron(r1, r2), np.kron(s1, s2))
    assert lhs == pytest.approx(mt.state_fidelity(r1, s1) * mt.state_fidelity(r2, s2), abs=1e-9)


def test_rank_deficient_fidelity():
    # pure states: F = |<a|b>|
    a = np.array([1, 1j]) / np.sqrt(2)
    b = np.array([np.cos(0.3), np.sin(0.3)])
    f = mt.state_fidelity(np.outer(a, a.conj()), np.outer(b, b.conj()))
    assert f == pytest.approx(abs(np.vdot(a, b)), abs=1e-12)


def test_cj_fidelity_examples():
    rng = np.random.default_rng(2)
    e = ch.random_channel(2, 2, rng)
    assert mt.cj_fidelity(e, e) == pytest.approx(1.0, abs=1e-10)
    t = ch.trash_and_replace(np.eye(2) / 2)
    for _ in range(5):
        u = ch.unitary_channel(la.random_unitary(2, rng))
        assert mt.cj_fidelity(t, u) == pytest.approx(0.5, abs=1e-10)


def test_ad_closed_form_matches_choi():
    grid = np.linspace(0, 1, 11)
    for g1 in grid:
        for g2 in grid:
            gen = mt.cj_fidelity(ch.amplitude_damping(g1), ch.amplitude_damping(g2))
            assert mt.ad_cj_fidelity(g1, g2) == pytest.approx(gen, abs=1e-10)
    assert mt.ad_cj_fidelity(0.3, 0.3) == pytest.approx(1.0)
    assert mt.ad_cj_fidelity(0.0, 1.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        mt.ad_cj_fidelity(-0.1, 0.5)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_pauli_closed_form_matches_choi(seed):
    rng = np.random.default_rng(seed)
    p, q = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    assert mt.pauli_cj_fidelity(p, q) == pytest.approx(mt.cj_fidelity(ch.pauli(p), ch.pauli(q)), abs=1e-10)


def test_pauli_closed_form_grid():
    xs = np.linspace(0, 1, 11)
    for a in xs:
        for b in xs:
            gen = mt.cj_fidelity(ch.bit_flip(a), ch.bit_flip(b))
            assert mt.pauli_cj_fidelity([1 - a, a, 0, 0], [1 - b, b, 0, 0]) == pytest.approx(gen, abs=1e-10)
    assert mt.pauli_cj_fidelity([1, 0, 0, 0], [0, 1, 0, 0]) == 0.0


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_cj_fidelity_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    a, b = ch.random_channel(2, 2, rng), ch.random_channel(2, 2, rng)
    u = la.random_unitary(2, rng)
    v = ch.unitary_channel(u)
    vd = ch.unitary_channel(u.conj().T)
    a2 = ch.compose_channels(v, ch.compose_channels(a, vd))
    b2 = ch.compose_channels(v, ch.compose_channels(b, vd))
    assert mt.cj_fidelity(a2, b2) == pytest.approx(mt.cj_fidelity(a, b), abs=1e-9)


def test_unitary_theta_examples():
    assert mt.unitary_theta(np.eye(2)) == pytest.approx(0.0)
    for th in (0.1, 0.5, 1.2):
        assert mt.unitary_theta(ch.phase_unitary(th)) == pytest.approx(min(2 * th, 2 * np.pi - 2 * th))
    assert mt.unitary_theta(np.diag([1, 1j])) == pytest.approx(np.pi / 2)
    with pytest.raises(ValueError):
        mt.unitary_theta(np.array([[1, 1], [0, 1]]))


def test_unitary_discrimination_examples():
    u = ch.phase_unitary(0.4)
    d, f, _ = mt.unitary_discrimination(u, u, 3)
    assert d == pytest.approx(0) and f == pytest.approx(1)
    d, f, _ = mt.unitary_discrimination(np.eye(2), ch.phase_unitary(np.pi / 8), 2)
    assert d == pytest.approx(np.pi / 4)
    # NΘ = π makes them perfectly distinguishable
    d, f, _ = mt.unitary_discrimination(np.eye(2), ch.phase_unitary(np.pi / 8), 4)
    assert f == pytest.approx(0, abs=1e-12)


def test_fvg_examples_and_report():
    assert mt.fuchs_van_de_graaf(0.0) == pytest.approx((0, 0))
    assert mt.fuchs_van_de_graaf(np.pi / 2) == pytest.approx((1, 1))
    assert mt.fuchs_van_de_graaf(np.pi / 4) == pytest.approx((1 - 1 / np.sqrt(2), 1 / np.sqrt(2)))
    with pytest.raises(ValueError):
        mt.fuchs_van_de_graaf(2.0)
    r = mt.distance_report(ch.amplitude_damping(0.2), ch.amplitude_damping(0.6))
    assert r.bures_angle == pytest.approx(np.arccos(r.fidelity), abs=1e-12)
    assert r.fvg_lower <= r.fvg_upper


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1))
def test_report_invariants(f):
    r = mt.DistanceReport.from_fidelity(f)
    assert r.bures_angle == pytest.approx(np.arccos(f), abs=1e-12)
    assert r.fvg_lower <= r.fvg_upper + 1e-15
