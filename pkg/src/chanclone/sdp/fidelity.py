"""Worst-case cloning-fidelity SDP over higher-order processes.

Variables: the process Choi ``W``, one fidelity block per net channel::

    Z_i = [[CJ[P(E_i)],  Y_i        ],
           [Y_i†,        CJ[E_i^⊗M] ]] ⪰ 0,     Re tr Y_i ≥ t

and the free scalar ``t`` which is maximized. ``CJ[P(E_i)]`` is linear in
``W``; it is routed through free blocks ``G_k = S(B_k)/d_in`` for an
orthonormal basis ``B_k`` of the span of the slot Chois, so every ``Z_i`` only
touches a handful of shared variables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import logging
import time

import numpy as np
import scipy.sparse as sp

from .. import linalg as la
from ..channels import KrausChannel, kraus_to_choi, tensor_power
from ..metrics import choi_fidelity
from . import hermitian as hm
from .problem import ProblemBuilder, SdpProblem, SdpSolution
from .process import (KINDS, ProcessChoi, ProcessError, apply_process, complement_basis,
                      projector, slot_choi)
from .solver import SolverConfig, solve

log = logging.getLogger(__name__)

BACKENDS = ("dr", "cvxpy")


@dataclass(frozen=True)
class CloningSdpConfig:
    n: int = 1
    m: int = 2
    kind: str = "parallel"
    ppt: bool = False
    backend: str = "dr"
    solver: SolverConfig = field(default_factory=SolverConfig)
    polish: bool = True


@dataclass
class CloningSdpResult:
    t_star: float
    process: ProcessChoi | None
    status: str
    fidelities: np.ndarray
    solution: SdpSolution | None
    seconds: float
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _slot_dims(d: int, n: int, m: int):
    return d ** m, d ** m, [d] * n, [d] * n


def _span_basis(mats, rel: float = 1e-10):
    vecs = np.array([hm.to_vec(x) for x in mats])
    u, s, vt = np.linalg.svd(vecs, full_matrices=False)
    r = int(np.sum(s > rel * s[0]))
    basis = vt[:r]
    coef = vecs @ basis.T  # mats[i] = Σ_k coef[i, k] B_k
    n = mats[0].shape[0]
    return [hm.to_mat(b, n) for b in basis], coef


def _support(m: np.ndarray, rel: float = 1e-12):
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    keep = w > rel * w[-1]
    return v[:, keep], w[keep]


def _contraction_map(bk: np.ndarray, dio: int, ds: int, d_in: int) -> sp.csr_matrix:
    # coordinates of tr_{slots}[(1 ⊗ Bᵀ) W] / d_in as a function of the W coordinates
    a, b = np.nonzero(np.abs(bk) > 1e-15)
    vals = bk[a, b] / d_in
    p, q = np.meshgrid(np.arange(dio), np.arange(dio), indexing="ij")
    p, q = p.ravel(), q.ravel()
    keep = p <= q
    p, q = p[keep], q[keep]
    P = np.repeat(p, a.size)
    Q = np.repeat(q, a.size)
    A = np.tile(a, p.size)
    B = np.tile(b, p.size)
    V = np.tile(vals, p.size)
    return hm.entrywise_map(dio, dio * ds, P, Q, P * ds + A, Q * ds + B, V)


def _partial_transpose_map(dio: int, ds: int) -> sp.csr_matrix:
    # Wpt[(x, s), (y, s')] = W[(y, s), (x, s')]
    D = dio * ds
    p, q = np.meshgrid(np.arange(D), np.arange(D), indexing="ij")
    p, q = p.ravel(), q.ravel()
    keep = p <= q
    p, q = p[keep], q[keep]
    x, s = np.divmod(p, ds)
    y, s2 = np.divmod(q, ds)
    return hm.entrywise_map(D, D, p, q, y * ds + s, x * ds + s2, np.ones(p.size))


def build_cloning_problem(net, n: int = 1, m: int = 2, kind: str = "parallel",
                          ppt: bool = False):
    """Assemble the max-min fidelity SDP; returns ``(problem, layout)``."""
    net = list(net)
    if not net:
        raise ValueError("net must contain at least one channel")
    if n not in (1, 2):
        raise ProcessError("only one- or two-slot processes are supported")
    if kind not in KINDS:
        raise ProcessError(f"unknown process kind {kind!r}")
    d = net[0].d_in
    for e in net:
        if not isinstance(e, KrausChannel):
            raise TypeError("net entries must be KrausChannel values")
        if (e.d_in, e.d_out) != (d, d):
            raise ValueError("net channels must act on one common space")
    d_in, d_out, d1, d2 = _slot_dims(d, n, m)
    dims = [d_in, d_out] + d1 + d2
    dio = d_in * d_out
    ds = int(np.prod(d1) * np.prod(d2))
    D = dio * ds

    slot = [slot_choi([e] * n, d1, d2) for e in net]
    basis, coef = _span_basis(slot)
    targets = [kraus_to_choi(tensor_power(e, m)).matrix for e in net]

    bld = ProblemBuilder()
    bld.add_block("W", D, "psd")
    if ppt:
        bld.add_block("Wpt", D, "psd")
    for k in range(len(basis)):
        bld.add_block(f"G{k}", dio, "free")
    # the fidelity blocks only need the support of each target (facial
    # reduction), which restores strict feasibility
    supports = [_support(tg) for tg in targets]
    for i, (_, wi) in enumerate(supports):
        bld.add_block(f"Z{i}", dio + wi.size, "psd")
    for i in range(len(net)):
        bld.add_block(f"s{i}", 1, "psd")
    bld.add_block("t", 1, "free")

    # process constraints
    rows = complement_basis(kind, n, tuple(dims))
    bld.add_constraints({"W": sp.csr_matrix(rows)}, np.zeros(rows.shape[0]))
    bld.add_constraints({"W": sp.csr_matrix(hm.to_vec(np.eye(D))[None, :])},
                        [d_in * float(np.prod(d2))])
    if ppt:
        ptm = _partial_transpose_map(dio, ds)
        bld.add_constraints({"Wpt": sp.identity(D * D, format="csr"), "W": -ptm},
                            np.zeros(D * D))
    # G_k = S(B_k) / d_in
    nio = dio * dio
    for k, bk in enumerate(basis):
        bld.add_constraints({f"G{k}": sp.identity(nio, format="csr"),
                             "W": -_contraction_map(bk, dio, ds, d_in)}, np.zeros(nio))
    one = sp.csr_matrix(np.ones((1, 1)))
    for i, (vi, wi) in enumerate(supports):
        r = wi.size
        nz = dio + r
        terms = {f"Z{i}": hm.embed_block(dio, nz, 0, 0)}
        for k in range(len(basis)):
            if abs(coef[i, k]) > 1e-14:
                terms[f"G{k}"] = -coef[i, k] * sp.identity(nio, format="csr")
        bld.add_constraints(terms, np.zeros(nio))
        bld.add_constraints({f"Z{i}": hm.embed_block(r, nz, dio, dio)},
                            hm.to_vec(np.diag(wi)))
        # Re tr(Y) with Y = Y' V†, i.e. Σ Re(conj(V[a, k]) Z[a, dio + k])
        retr = np.zeros((1, nz * nz))
        for a in range(dio):
            for k in range(r):
                u, v = hm.offdiag_index(nz, a, dio + k)
                retr[0, u] += vi[a, k].real / hm.SQ2
                retr[0, v] += vi[a, k].imag / hm.SQ2
        bld.add_constraints({f"Z{i}": sp.csr_matrix(retr), f"s{i}": -one, "t": -one}, [0.0])
    bld.add_objective("t", [-1.0])
    prob = bld.build()
    layout = {"dims": dims, "d_in": d_in, "d_out": d_out, "d1": d1, "d2": d2,
              "kind": kind, "n": n, "m": m, "ppt": ppt, "targets": targets,
              "slot": slot, "rank": len(basis)}
    return prob, layout


def polish_process(w: np.ndarray, kind: str, n: int, dims, trace: float, rounds: int = 50):
    """Alternate projections onto the affine process set and the PSD cone."""
    P = projector(kind, n, dims)
    D = w.shape[0]
    for _ in range(rounds):
        w = P(0.5 * (w + w.conj().T))
        w = w + (trace - np.trace(w).real) / D * np.eye(D)
        ev = np.linalg.eigvalsh(w)
        if ev[0] >= -1e-12:
            break
        w = la.psd_project(w)
    return w


def evaluate_process(p: ProcessChoi, eval_net, m: int | None = None):
    """Per-channel fidelities of ``p`` over ``eval_net`` and their (min, mean)."""
    if m is None:
        m = int(round(np.log(p.d_in) / np.log(eval_net[0].d_in)))
    f = np.array([choi_fidelity(apply_process(p, [e] * p.n_slots).matrix,
                                kraus_to_choi(tensor_power(e, m)).matrix) for e in eval_net])
    return float(f.min()), float(f.mean()), f


def _solve_cvxpy(prob: SdpProblem, cfg: SolverConfig) -> SdpSolution:
    import cvxpy as cp

    xs, coords, cons = [], [], []
    for dim, kind in zip(prob.dims, prob.kinds):
        X = cp.Variable((dim, dim), hermitian=True)
        xs.append(X)
        if kind == "psd":
            cons.append(X >> 0)
        coords.append(_coord_expr(X, dim, cp))
    x = cp.hstack(coords)
    cons.append(prob.A @ x == prob.b)
    obj = cp.Minimize(prob.c @ x + prob.constant)
    problem = cp.Problem(obj, cons)
    # Clarabel first; SCS as the fallback when the interior-point method stalls
    for name, kw in (("CLARABEL", {}), ("SCS", {"eps": 1e-9, "max_iters": 200000})):
        try:
            problem.solve(solver=name, **kw)
        except cp.error.SolverError as exc:  # pragma: no cover - depends on install
            log.warning("cvxpy/%s failed: %s", name, exc)
            continue
        if problem.status in ("optimal", "optimal_inaccurate"):
            break
    ok = problem.status in ("optimal", "optimal_inaccurate")
    status = "optimal" if ok else ("infeasible" if "infeasible" in str(problem.status) else "max_iters")
    xv = np.concatenate([hm.to_vec(X.value) for X in xs]) if ok else np.zeros(prob.n_vars)
    rp = float(np.linalg.norm(prob.A @ xv - prob.b) / (1 + np.linalg.norm(prob.b)))
    return SdpSolution(prob.split(xv), xv, prob.objective(xv), rp, float("nan"), float("nan"),
                       status, 0)


def _coord_expr(X, n, cp):
    iu, ju = hm.layout(n)
    # vec in column-major order: entry (r, c) sits at c*n + r
    rows = np.arange(n)
    sel_d = sp.csr_matrix((np.ones(n), (rows, rows * n + rows)), shape=(n, n * n))
    m_up = iu.size
    sel_u = sp.csr_matrix((np.full(m_up, hm.SQ2), (np.arange(m_up), ju * n + iu)),
                          shape=(m_up, n * n))
    re = cp.vec(cp.real(X), order="F")
    im = cp.vec(cp.imag(X), order="F")
    parts = [sel_d @ re]
    if m_up:
        u = sel_u @ re
        v = sel_u @ im
        # interleave (u, v) pairs
        inter_u = sp.csr_matrix((np.ones(m_up), (2 * np.arange(m_up), np.arange(m_up))),
                                shape=(2 * m_up, m_up))
        inter_v = sp.csr_matrix((np.ones(m_up), (2 * np.arange(m_up) + 1, np.arange(m_up))),
                                shape=(2 * m_up, m_up))
        parts.append(inter_u @ u + inter_v @ v)
    return cp.hstack(parts)


def worst_case_sdp(net, n: int = 1, m: int = 2, kind: str = "parallel", ppt: bool = False,
                   backend: str = "dr", solver: SolverConfig | None = None,
                   polish: bool = True) -> CloningSdpResult:
    """Maximize the worst-case CJ fidelity over ``net`` among valid processes.

    ``t_star`` is the minimum over the net of the fidelities of the returned
    (polished) process; the raw SDP objective is kept in ``info``.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    t0 = time.time()
    prob, lay = build_cloning_problem(net, n, m, kind, ppt)
    cfg = solver or SolverConfig()
    sol = solve(prob, cfg) if backend == "dr" else _solve_cvxpy(prob, cfg)
    info = {"objective": -sol.objective, "iterations": sol.iterations,
            "primal_residual": sol.primal_residual, "dual_residual": sol.dual_residual,
            "gap": sol.gap, "n_cons": prob.n_cons, "n_vars": prob.n_vars,
            "span_rank": lay["rank"]}
    if sol.status == "infeasible":
        return CloningSdpResult(float("nan"), None, sol.status, np.array([]), sol,
                                time.time() - t0, info)
    w = sol.blocks[0]
    trace = lay["d_in"] * float(np.prod(lay["d2"]))
    if polish:
        w = polish_process(w, kind, n, lay["dims"], trace)
    proc = ProcessChoi.create(w, lay["d_in"], lay["d_out"], lay["d1"], lay["d2"], kind,
                              validate=False)
    res = proc.residuals()
    tol = max(PROCESS_CHECK_TOL, 10 * cfg.tol)
    if ppt:
        dio = lay["d_in"] * lay["d_out"]
        res["ppt_min_eig"] = float(np.linalg.eigvalsh(la.partial_transpose(w, [dio, w.shape[0] // dio], [0]))[0])
    info["process_residuals"] = res
    try:
        proc.validate(tol)
        if ppt and res["ppt_min_eig"] < -tol:
            raise ProcessError(f"process Choi is not PPT (min eig {res['ppt_min_eig']:.2e})")
        info["valid"] = True
    except ProcessError as exc:
        info["valid"] = False
        info["invalid_reason"] = str(exc)
    fids = np.array([choi_fidelity(apply_process(proc, [e] * n).matrix, tg)
                     for e, tg in zip(net, lay["targets"])])
    return CloningSdpResult(float(fids.min()), proc, sol.status, fids, sol,
                            time.time() - t0, info)


PROCESS_CHECK_TOL = 1e-7


def feasibility_sdp(net, x: float, n: int = 1, m: int = 2, kind: str = "parallel",
                    ppt: bool = False, **kw):
    """Whether worst-case fidelity ``x`` is reachable, via the max-min program."""
    res = worst_case_sdp(net, n, m, kind, ppt, **kw)
    if res.status == "infeasible":
        return False, res
    best = max(res.t_star, res.info.get("objective", res.t_star))
    return bool(best >= x - 1e-5), res
