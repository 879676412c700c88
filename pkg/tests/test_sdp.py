import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from chanclone import channels as ch
from chanclone import linalg as la
from chanclone import metrics as mt
from chanclone import protocols as pr
from chanclone.sdp import hermitian as hm
from chanclone.sdp import process as pc
from chanclone.sdp.fidelity import (build_cloning_problem, evaluate_process, feasibility_sdp,
                                    worst_case_sdp)
from chanclone.sdp.problem import ProblemBuilder, SdpProblem
from chanclone.sdp.solver import SolverConfig, real_embedding, solve

seeds = st.integers(0, 2**31 - 1)


# --- Hermitian coordinates -------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 6))
def test_coordinates_are_isometric(seed, n):
    rng = np.random.default_rng(seed)
    x, y = la.random_hermitian(n, rng), la.random_hermitian(n, rng)
    assert np.allclose(hm.to_mat(hm.to_vec(x), n), x)
    assert hm.to_vec(x) @ hm.to_vec(y) == pytest.approx(np.trace(x @ y).real, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_embed_block_selects_principal_block(seed):
    rng = np.random.default_rng(seed)
    z = la.random_hermitian(5, rng)
    m = hm.embed_block(2, 5, 3, 3)
    assert np.allclose(hm.to_mat(m @ hm.to_vec(z), 2), z[3:, 3:])


# --- toy problems -----------------------------------------------------------------

def _rayleigh(cm):
    n = cm.shape[0]
    b = ProblemBuilder()
    b.add_block("X", n, "psd")
    b.add_constraints({"X": sp.csr_matrix(hm.to_vec(np.eye(n))[None, :])}, [1.0])
    b.add_objective("X", -hm.to_vec(cm))
    return b.build()


def test_rayleigh_toy():
    rng = np.random.default_rng(0)
    cm = la.random_hermitian(4, rng)
    sol = solve(_rayleigh(cm))
    assert sol.status == "optimal"
    assert -sol.objective == pytest.approx(np.linalg.eigvalsh(cm)[-1], abs=1e-6)
    assert np.linalg.eigvalsh(sol.blocks[0])[0] > -1e-7


def _fidelity_toy(rho, sigma):
    n = rho.shape[0]
    b = ProblemBuilder()
    b.add_block("Z", 2 * n, "psd")
    b.add_constraints({"Z": hm.embed_block(n, 2 * n, 0, 0)}, hm.to_vec(rho))
    b.add_constraints({"Z": hm.embed_block(n, 2 * n, n, n)}, hm.to_vec(sigma))
    c = np.zeros(4 * n * n)
    for a in range(n):
        u, _ = hm.offdiag_index(2 * n, a, n + a)
        c[u] = -1 / hm.SQ2
    b.add_objective("Z", c)
    return b.build()


@settings(max_examples=8, deadline=None)
@given(seeds)
def test_fidelity_block_reproduces_state_fidelity(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = la.random_density(2, rng), la.random_density(2, rng)
    sol = solve(_fidelity_toy(rho, sigma))
    assert sol.status == "optimal"
    assert -sol.objective == pytest.approx(mt.state_fidelity(rho, sigma), abs=1e-6)


def test_infeasible_toy():
    b = ProblemBuilder()
    b.add_block("X", 2, "psd")
    b.add_constraints({"X": sp.csr_matrix(hm.to_vec(np.eye(2))[None, :])}, [-1.0])
    b.add_objective("X", np.zeros(4))
    sol = solve(b.build(), SolverConfig(max_iters=20000))
    assert sol.status in ("infeasible", "max_iters")
    assert sol.status != "optimal"
    assert sol.primal_residual > 1e-2


def test_json_roundtrip_and_validation():
    rng = np.random.default_rng(1)
    prob = _fidelity_toy(la.random_density(2, rng), la.random_density(2, rng))
    back = SdpProblem.from_json(prob.to_json())
    assert back.dims == prob.dims and back.kinds == prob.kinds
    assert np.allclose(back.A.toarray(), prob.A.toarray())
    assert np.allclose(back.b, prob.b) and np.allclose(back.c, prob.c)
    with pytest.raises(ValueError):
        SdpProblem([2], ["psd"], sp.csr_matrix((1, 3)), [0.0], np.zeros(4))


def test_real_embedding_consistency():
    rng = np.random.default_rng(2)
    for prob in (_rayleigh(la.random_hermitian(3, rng)),
                 _fidelity_toy(la.random_density(2, rng), la.random_density(2, rng))):
        tight = SolverConfig(tol=1e-10)
        direct = solve(prob, tight)
        emb, extract = real_embedding(prob)
        back = extract(solve(emb, tight))
        assert prob.objective(back) == pytest.approx(direct.objective, abs=1e-7)
        via_flag = solve(prob, tight, embedding="real")
        assert via_flag.objective == pytest.approx(direct.objective, abs=1e-7)


# --- projectors -------------------------------------------------------------------

QUBIT2 = pc.factor_dims(2, 2, [2, 2], [2, 2])
QUBIT1 = pc.factor_dims(2, 2, [2], [2])


@pytest.mark.parametrize("kind,n,dims", [("parallel", 1, QUBIT1), ("parallel", 2, QUBIT2),
                                         ("sequential", 2, QUBIT2), ("noncausal", 2, QUBIT2)])
def test_projector_idempotent_and_trace_preserving(kind, n, dims):
    rng = np.random.default_rng(3)
    P = pc.projector(kind, n, dims)
    x = la.random_hermitian(int(np.prod(dims)), rng)
    px = P(x)
    assert np.allclose(P(px), px, atol=1e-10)
    assert np.trace(px) == pytest.approx(np.trace(x), abs=1e-10)


def test_one_slot_kinds_coincide():
    rng = np.random.default_rng(4)
    x = la.random_hermitian(16, rng)
    ref = pc.projector("parallel", 1, QUBIT1)(x)
    for kind in ("sequential", "noncausal"):
        assert np.allclose(pc.projector(kind, 1, QUBIT1)(x), ref)
    with pytest.raises(pc.ProcessError):
        pc.projector("parallel", 3, QUBIT1)


def test_projector_range_inclusions():
    rng = np.random.default_rng(5)
    par, seq, nc = (pc.projector(k, 2, QUBIT2) for k in ("parallel", "sequential", "noncausal"))
    for _ in range(3):
        x = la.random_hermitian(64, rng)
        assert np.allclose(seq(par(x)), par(x), atol=1e-10)
        assert np.allclose(nc(seq(x)), seq(x), atol=1e-10)


def _channel_span(d1, d2):
    # Hermitian operators on (1, 2) whose 2-marginal-trace is proportional to 1
    n = d1 * d2
    rows = []
    for k in range(n * n):
        e = np.zeros(n * n)
        e[k] = 1
        r = la.partial_trace(hm.to_mat(e, n), [d1, d2], [1])
        v = hm.to_vec(r - np.trace(r).real / d1 * np.eye(d1))
        rows.append(v)
    u, s, vt = np.linalg.svd(np.array(rows).T)
    rank = int(np.sum(s > 1e-10))
    return [hm.to_mat(v, n) for v in vt[rank:]]


def _transformer_dimension(n_slots, d=2):
    # dim of {W : every product of channel-like slot maps goes to a channel-like
    # output, with a common normalization}, by brute-force linear algebra
    span = _channel_span(d, d)
    dims = pc.factor_dims(d, d, [d] * n_slots, [d] * n_slots)
    D = int(np.prod(dims))
    basis_w = [hm.to_mat(np.eye(D * D)[k], D) for k in range(D * D)]
    eqs = []
    for combo in itertools.product(span, repeat=n_slots):
        cb = pc.slot_choi(list(combo), [d] * n_slots, [d] * n_slots)
        lam = np.prod([np.trace(a).real / d for a in combo])
        blk = np.array([hm.to_vec(la.partial_trace(pc.contract(w, cb, d * d), [d, d], [1]))
                        for w in basis_w]).T
        eqs.append(np.hstack([blk, -lam * hm.to_vec(np.eye(d))[:, None]]))
    m = np.vstack(eqs)
    s = np.linalg.svd(m, compute_uv=False)
    return m.shape[1] - int(np.sum(s > 1e-9 * s[0]))


def test_projector_rank_matches_brute_force_one_slot():
    assert pc.projector_rank("parallel", 1, QUBIT1) == _transformer_dimension(1) == 205


@pytest.mark.slow
def test_noncausal_rank_matches_brute_force():
    assert pc.projector_rank("noncausal", 2, QUBIT2) == _transformer_dimension(2) == 3421


def test_projector_ranks_frozen():
    assert pc.projector_rank("parallel", 2, QUBIT2) == 3133
    assert pc.projector_rank("sequential", 2, QUBIT2) == 3277
    assert pc.projector_rank("noncausal", 2, QUBIT2) == 3421
    assert pc.projector_rank("parallel", 1, pc.factor_dims(4, 4, [2], [2])) == 3889


# --- process examples -------------------------------------------------------------

def test_identity_and_constant_processes():
    rng = np.random.default_rng(6)
    e = ch.random_channel(2, 2, rng)
    p = pc.identity_process(2)
    assert np.allclose(pc.apply_process(p, [e]).matrix, ch.kraus_to_choi(e).matrix)
    lam = ch.random_channel(2, 2, rng)
    q = pc.constant_process(lam, [2], [2])
    for _ in range(3):
        out = pc.apply_process(q, [ch.random_channel(2, 2, rng)]).matrix
        assert np.allclose(out, ch.kraus_to_choi(lam).matrix)
    assert evaluate_process(p, [ch.amplitude_damping(g) for g in (0.1, 0.5)], 1)[:2] == pytest.approx((1, 1))


def test_dummy_process():
    half = ch.amplitude_damping(0.5)
    p = pc.dummy_process(half, 2)
    for g in (0.0, 0.3, 0.9):
        e = ch.amplitude_damping(g)
        want = ch.kraus_to_choi(ch.tensor_channels(e, half)).matrix
        assert np.allclose(pc.apply_process(p, [e]).matrix, want)
    net = [ch.amplitude_damping(g) for g in np.linspace(0, 1, 101)]
    fmin, favg, _ = evaluate_process(p, net, 2)
    assert fmin == pytest.approx((2 + np.sqrt(2)) / 4, abs=1e-10)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_hand_built_process_is_valid(seed):
    rng = np.random.default_rng(seed)
    pre = ch.random_channel(2, 4, rng)    # in -> 1 ⊗ mem
    post = ch.random_channel(4, 2, rng)   # 2 ⊗ mem -> out
    p = pc.process_choi_from_channels(pre, post, 2, 2, 2, 2, 2)
    p.validate()
    out = pc.apply_process(p, [ch.random_channel(2, 2, rng)])
    out.validate(1e-9)


def test_process_errors_and_json():
    p = pc.identity_process(2)
    back = pc.ProcessChoi.from_json(p.to_json())
    assert np.allclose(back.matrix, p.matrix)
    with pytest.raises(pc.ProcessError):
        pc.ProcessChoi.create(np.eye(16), 2, 2, [2], [2])
    with pytest.raises(pc.ProcessError):
        pc.ProcessChoi.create(np.eye(8), 2, 2, [2], [2])
    with pytest.raises(pc.ProcessError):
        pc.apply_process(p, [ch.identity_channel(), ch.identity_channel()])


# --- cloning SDP ------------------------------------------------------------------

def test_two_point_ad_net():
    net = [ch.amplitude_damping(0.0), ch.amplitude_damping(1.0)]
    r = worst_case_sdp(net)
    assert r.ok and r.info["valid"]
    assert r.t_star == pytest.approx(1.0, abs=1e-3)
    ev = [ch.amplitude_damping(g) for g in np.linspace(0, 1, 101)]
    for e in ev[::10]:
        pc.apply_process(r.process, [e]).validate(1e-6)


def test_feasibility_trivial_threshold():
    net = [ch.amplitude_damping(g) for g in (0.2, 0.7)]
    ok, res = feasibility_sdp(net, 0.0)
    assert ok


def test_build_errors():
    with pytest.raises(ValueError):
        build_cloning_problem([])
    with pytest.raises(pc.ProcessError):
        build_cloning_problem([ch.amplitude_damping(0.1)], n=3, m=3)
    with pytest.raises(ValueError):
        worst_case_sdp([ch.amplitude_damping(0.1)], backend="nope")


@pytest.mark.slow
def test_monotone_in_net_and_ppt_below_general():
    g2 = [0.1, 0.9]
    g5 = g2 + [0.3, 0.5, 0.7]
    g11 = g5 + [0.05, 0.2, 0.4, 0.6, 0.8, 0.95]
    ts = []
    for gs in (g2, g5, g11):
        r = worst_case_sdp([ch.amplitude_damping(g) for g in gs])
        assert r.ok
        ts.append(r.info["objective"])
    assert ts[0] >= ts[1] - 1e-5 and ts[1] >= ts[2] - 1e-5
    rp = worst_case_sdp([ch.amplitude_damping(g) for g in g5], ppt=True)
    assert rp.info["objective"] <= ts[1] + 1e-5
    assert rp.info["process_residuals"]["ppt_min_eig"] >= -1e-6
    # estimate-and-prepare processes are PPT, so they bound the relaxation from below
    est = pr.optimize_estimator("ad", "ep", g5, 1, 2, pr.natural_ad_estimator(1), restarts=3)
    assert rp.info["objective"] >= pr.ad_ep_fidelity(g5, 1, 2, est).worst_case_fidelity - 1e-5


def test_cvxpy_cross_check():
    pytest.importorskip("cvxpy")
    net = [ch.amplitude_damping(g) for g in (0.2, 0.5, 0.8)]
    a = worst_case_sdp(net)
    b = worst_case_sdp(net, backend="cvxpy")
    assert b.status == "optimal"
    assert a.info["objective"] == pytest.approx(b.info["objective"], abs=1e-4)
