"""Explicit cloning processes and their fidelities.

Dummy processes, measure-and-prepare / estimate-and-prepare, the error
mitigation comb for noisy phase gates, the unary coherent process for phase
gates and the amplitude-damping and Pauli protocols, plus estimator search.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb, lgamma

import numpy as np
from scipy.optimize import minimize

from . import channels as ch
from .linalg import PAULI
from .metrics import ad_cj_fidelity, choi_fidelity, state_fidelity

AD_DUMMY = (2 + np.sqrt(2)) / 4


# --- value types -----------------------------------------------------------------

@dataclass(frozen=True)
class Estimator:
    """Map from outcome totals to an estimate in the family's domain.

    Keys are integers ``t`` for one-parameter families and 4-tuples of
    totals for Pauli channels; values are floats or 4-vectors.
    """

    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def as_array(self) -> np.ndarray:
        return np.array([self.values[k] for k in sorted(self.values)], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "Estimator":
        return cls({t: float(v) for t, v in enumerate(np.asarray(arr, dtype=float))})

    def to_json(self) -> str:
        items = sorted(self.values.items())
        out = []
        for k, v in items:
            key = list(k) if isinstance(k, tuple) else k
            val = list(map(float, v)) if np.ndim(v) else float(v)
            out.append([key, val])
        return json.dumps(out)

    @classmethod
    def from_json(cls, text: str) -> "Estimator":
        vals = {}
        for key, val in json.loads(text):
            k = tuple(key) if isinstance(key, list) else int(key)
            vals[k] = np.array(val) if isinstance(val, list) else float(val)
        return cls(vals)


@dataclass(frozen=True)
class ProtocolResult:
    worst_case_fidelity: float
    per_parameter_fidelities: list
    estimator: Estimator | None
    n: int
    m: int
    extras: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "worst_case_fidelity": self.worst_case_fidelity,
            "n": self.n,
            "m": self.m,
            "per_parameter": [[_jsonable(p), float(f)] for p, f in self.per_parameter_fidelities],
            "estimator": json.loads(self.estimator.to_json()) if self.estimator else None,
        })

    def to_csv_rows(self):
        rows = [("parameter", "fidelity")]
        for p, f in self.per_parameter_fidelities:
            rows.append((_jsonable(p), f))
        return rows


def _jsonable(p):
    if np.ndim(p):
        return [float(x) for x in np.ravel(p)]
    return float(p)


def _result(params, fids, est, n, m, **extras) -> ProtocolResult:
    fids = np.clip(np.asarray(fids, dtype=float), 0.0, 1.0)
    per = list(zip(list(params), fids.tolist()))
    return ProtocolResult(float(fids.min()), per, est, n, m, dict(extras))


# --- families used by the dummy and estimator searches --------------------------------

def _bhatt2(a, b):
    return np.sqrt(a * b) + np.sqrt((1 - a) * (1 - b))


FAMILY_FIDELITY = {
    "ad": lambda a, b: ad_cj_fidelity(np.clip(a, 0, 1), np.clip(b, 0, 1)),
    "bitflip": lambda a, b: _bhatt2(np.clip(a, 0, 1), np.clip(b, 0, 1)),
}


def default_net(family: str = "ad", points: int = 101):
    if family in ("ad", "bitflip"):
        return np.linspace(0.0, 1.0, points)
    if family == "pauli":
        return simplex_lattice(10)
    raise ValueError(f"unknown family {family!r}")


def simplex_lattice(k: int) -> np.ndarray:
    """All 4-vectors with entries in ``{0, 1/k, ..., 1}`` summing to one."""
    pts = [np.array(c, dtype=float) / k for c in compositions(k, 4)]
    return np.array(pts)


def compositions(n: int, parts: int):
    """Ordered tuples of ``parts`` nonnegative integers summing to ``n``."""
    if parts == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in compositions(n - first, parts - 1):
            yield (first,) + rest


# --- dummy process --------------------------------------------------------------

def _refine_1d(obj, lo=0.0, hi=1.0, grid=101, tol=1e-13):
    best_x, best_v = lo, -np.inf
    a, b = lo, hi
    while True:
        xs = np.linspace(a, b, grid)
        vals = np.array([obj(x) for x in xs])
        k = int(np.argmax(vals))
        if vals[k] > best_v:
            best_x, best_v = xs[k], vals[k]
        step = (b - a) / (grid - 1)
        if step < tol:
            break
        a, b = max(lo, best_x - step), min(hi, best_x + step)
    return best_x, best_v


def dummy_fidelity(family: str, net=None, n: int = 1, m: int = 2):
    """Best fixed dummy channel for the extra ``m − n`` outputs.

    Solves ``max_D min_{E ∈ net} F_CJ(D, E)`` by grid refinement and returns
    ``(dummy_parameter, base_fidelity, fidelity)`` with
    ``fidelity = base ** (m − n)``.
    """
    if n > m:
        raise ValueError("need n <= m")
    net = default_net(family) if net is None else np.asarray(net, dtype=float)
    if len(net) == 0:
        raise ValueError("empty net")
    if family in FAMILY_FIDELITY:
        fid = FAMILY_FIDELITY[family]
        x, base = _refine_1d(lambda d: float(np.min(fid(d, net))))
    elif family == "pauli":
        x, base = _dummy_pauli(net)
    else:
        raise ValueError(f"unknown family {family!r}")
    return x, float(base), float(base ** (m - n))


def _dummy_pauli(net):
    net = np.asarray(net, dtype=float)

    def obj(d):
        return float(np.min(np.sqrt(np.clip(d, 0, None) * net).sum(axis=1)))

    cands = simplex_lattice(20)
    vals = [obj(c) for c in cands]
    d = cands[int(np.argmax(vals))].copy()
    best = max(vals)
    step = 1 / 20
    # alternating pairwise mass transfers with shrinking step
    while step > 1e-13:
        improved = False
        for i in range(4):
            for j in range(4):
                if i == j or d[j] < step:
                    continue
                trial = d.copy()
                trial[i] += step
                trial[j] -= step
                v = obj(trial)
                if v > best + 1e-16:
                    d, best, improved = trial, v, True
        if not improved:
            step /= 2
    return d, best


# --- error mitigation and noisy phase gates ---------------------------------------------

def error_mitigation(k):
    """Split a qubit Kraus operator into the two branches of the mitigation comb.

    ``K0 = diag(⟨0|K|0⟩, ⟨1|K|1⟩)`` and ``K1 = diag(⟨1|K|0⟩, ⟨0|K|1⟩)``, so a bit
    flip after a diagonal gate is folded back onto the diagonal.
    """
    k = np.asarray(k, dtype=complex)
    if k.shape != (2, 2):
        raise ValueError("error mitigation acts on qubit Kraus operators")
    k0 = np.diag([k[0, 0], k[1, 1]])
    k1 = np.diag([k[1, 0], k[0, 1]])
    return k0, k1


def mitigated_channel(c: ch.KrausChannel) -> ch.KrausChannel:
    """Channel ``M0[E] + M1[E]`` obtained after discarding the comb's outcome."""
    ks = []
    for k in c.kraus:
        k0, k1 = error_mitigation(k)
        ks.extend([k0, k1])
    return ch.KrausChannel(2, 2, tuple(ks))


def mitigation_residual(thetas, p: float, variant: str = "A") -> float:
    """Largest Choi deviation of the mitigated noisy gate from ``U_θ``."""
    worst = 0.0
    make = ch.noisy_phase_A if variant == "A" else ch.noisy_phase_B
    for t in thetas:
        got = ch.kraus_to_choi(mitigated_channel(make(t, p))).matrix
        want = ch.kraus_to_choi(ch.phase_gate(t)).matrix
        worst = max(worst, float(np.abs(got - want).max()))
    return worst


def phase_mp_bound(n: int, m: int) -> float:
    return float(max(0.0, 1 - np.pi ** 2 / (2 * n * n)) ** m)


def su2_mp_bound(n: int, m: int) -> float:
    return float(max(0.0, 1 - np.pi ** 2 / (n * n)) ** (m / 2))


def noisy_phase_B_mp_bound(n: int, m: int, p: float):
    """``(1 − π²/(2(1−2p)²n²))^m``; returns ``(bound, degenerate)``."""
    if not 0 <= p <= 1:
        raise ValueError("p must be in [0, 1]")
    if abs(1 - 2 * p) < 1e-15:
        return 0.0, True
    base = 1 - np.pi ** 2 / (2 * (1 - 2 * p) ** 2 * n * n)
    return float(max(0.0, base) ** m), False


def noisy_phase_A_process(n: int, m: int, p: float, thetas=None) -> ProtocolResult:
    """Mitigate the bit flip exactly, then clone the phase with the coherent process."""
    thetas = np.linspace(0, 2 * np.pi, 64, endpoint=False) if thetas is None else thetas
    resid = mitigation_residual(thetas, p, "A")
    res = phase_coherent_process(n, m, thetas)
    return ProtocolResult(res.worst_case_fidelity, res.per_parameter_fidelities, None, n, m,
                          {"mitigation_residual": resid})


# --- phase estimation -----------------------------------------------------------

def sine_state(n: int) -> np.ndarray:
    k = np.arange(n + 1)
    return np.sqrt(2 / (n + 2)) * np.sin((k + 1) * np.pi / (n + 2))


def phase_autocorrelation(n: int) -> np.ndarray:
    """``a_j = Σ_k c_k c_{k+j}``, the Fourier coefficients of the error density."""
    c = sine_state(n)
    return np.array([np.dot(c[: n + 1 - j], c[j:]) for j in range(n + 1)])


def phase_error_density(n: int, delta) -> np.ndarray:
    """Density of the estimation error ``Δ`` for the covariant POVM on the sine state."""
    c = sine_state(n)
    k = np.arange(n + 1)
    amp = np.exp(1j * np.outer(np.atleast_1d(delta), k)) @ c
    return np.abs(amp) ** 2 / (2 * np.pi)


def phase_estimation_exact(n: int) -> float:
    """Expected alignment fidelity ``E[cos²(Δ/2)] = ½(1 + Σ c_k c_{k+1})``."""
    if n < 1:
        raise ValueError("n >= 1")
    a = phase_autocorrelation(n)
    return float(0.5 * (1 + a[1]))


def _half_cos_kernel(j: int, power: int) -> float:
    # (1/2π) ∫_{-π}^{π} cos(jΔ) cos^power(Δ/2) dΔ, exact
    tot = 0.0
    for l in range(power + 1):
        w = j + l - power / 2
        if abs(w) < 1e-12:
            val = 1.0
        elif abs(w - round(w)) < 1e-12:
            val = 0.0
        else:
            val = np.sin(w * np.pi) / (w * np.pi)
        tot += comb(power, l) * val
    return tot / 2 ** power


def phase_score_moment(n: int, power: int) -> float:
    """``E[F^power]`` with ``F = cos(Δ/2)`` the gate fidelity, by exact Fourier sums."""
    a = phase_autocorrelation(n)
    total = a[0] * _half_cos_kernel(0, power)
    for j in range(1, n + 1):
        total += 2 * a[j] * _half_cos_kernel(j, power)
    return float(total)


def jensen_chain(n: int, m: int):
    """Return ``(E[F^m], E[F²]^{m/2}, E[F]^m)`` for the phase-estimation score."""
    return (phase_score_moment(n, m), phase_score_moment(n, 2) ** (m / 2),
            phase_score_moment(n, 1) ** m)


# --- coherent phase-gate process -----------------------------------------------------

DESK_CAP = 20


def _unary_index(n: int, big_n: int) -> int:
    # |1⟩^n |0⟩^{N-n} as an integer, qubit 0 most significant
    if 0 <= n <= big_n:
        return ((1 << n) - 1) << (big_n - n)
    return 0


def unary_isometry_phases(n: int, m: int):
    """Ancilla register index and window flag for every M-qubit basis state."""
    if n > m:
        raise ValueError("need n <= m")
    if n + m > DESK_CAP:
        raise ValueError(f"2^(n+m) exceeds the desk cap 2^{DESK_CAP}")
    weights = np.array([bin(k).count("1") for k in range(1 << m)])
    nk = np.floor(weights - (m - n) / 2).astype(int)
    anc = np.array([_unary_index(int(x), n) for x in nk])
    inside = (nk >= 0) & (nk <= n)
    return weights, anc, inside


def coherent_process_unitary(n: int, m: int, theta: float) -> np.ndarray:
    """Diagonal of ``Ṽ ∘ (1 ⊗ U_θ^{⊗N}) ∘ V`` acting on M qubits.

    ``V|k⟩|0⟩ = |k⟩|Unary(n_k)⟩``; the gates imprint a phase on the ancilla,
    and uncomputing returns the ancilla to ``|0⟩`` since it stays in a basis state.
    """
    _, anc, _ = unary_isometry_phases(n, m)
    anc_weight = np.array([bin(a).count("1") for a in anc])
    # U_θ^{⊗N}|a⟩ = exp(iθ(N − 2|a|))|a⟩
    return np.exp(1j * theta * (n - 2 * anc_weight))


def target_phases(m: int, theta: float) -> np.ndarray:
    w = np.array([bin(k).count("1") for k in range(1 << m)])
    return np.exp(1j * theta * (m - 2 * w))


def phase_coherent_process(n: int, m: int, thetas=None) -> ProtocolResult:
    """CJ fidelity of the unary coherent process with ``U_θ^{⊗M}`` over a θ grid."""
    thetas = np.linspace(0, 2 * np.pi, 64, endpoint=False) if thetas is None else np.asarray(thetas)
    fids = []
    for t in thetas:
        d = coherent_process_unitary(n, m, t)
        fids.append(abs(np.vdot(d, target_phases(m, t))) / 2 ** m)
    _, _, inside = unary_isometry_phases(n, m)
    return _result(thetas, fids, None, n, m, window_weight=float(inside.mean()))


def coherent_probe(n: int, m: int, theta: float, basis_index: int) -> complex:
    """Overlap ``⟨k|U_θ^{†⊗M} P[U_θ] |k⟩`` for a computational probe state."""
    d = coherent_process_unitary(n, m, theta)
    return complex(np.conj(target_phases(m, theta)[basis_index]) * d[basis_index])


# --- Pauli channels --------------------------------------------------------------

def _log_multinomial(counts) -> float:
    return lgamma(sum(counts) + 1) - sum(lgamma(c + 1) for c in counts)


def natural_pauli_estimator(n: int) -> Estimator:
    return Estimator({t: np.array(t, dtype=float) / n for t in compositions(n, 4)})


def bitflip_estimator(flip_probs) -> Estimator:
    """Pauli estimator for the bit-flip line from flip probabilities indexed by t₁."""
    flip_probs = np.clip(np.asarray(flip_probs, dtype=float), 0, 1)
    n = len(flip_probs) - 1
    vals = {}
    for t in compositions(n, 4):
        q = flip_probs[t[1]] if t[2] == t[3] == 0 else t[1] / n
        vals[t] = np.array([1 - q, q, 0.0, 0.0])
    return Estimator(vals)


def _check_pauli_est(est: Estimator, n: int):
    for t in compositions(n, 4):
        if t not in est.values:
            raise ValueError(f"estimator undefined on totals {t}")


def _powprod(base, expo):
    # Π_k base[..., k] ** expo[k] with 0 ** 0 = 1, broadcast over leading axes
    base = np.asarray(base, dtype=float)
    logb = np.where(base > 0, np.log(np.where(base > 0, base, 1.0)), -np.inf)
    with np.errstate(invalid="ignore"):
        terms = np.where(expo == 0, 0.0, expo * logb)
    return np.exp(terms.sum(axis=-1))


def _mult_table(pnet, n):
    ts = np.array(list(compositions(n, 4)))
    logc = np.array([_log_multinomial(t) for t in ts])
    # pr[i, a] = Mult(t_a | n, p_i)
    pr = np.exp(logc)[None, :] * _powprod(pnet[:, None, :], ts[None, :, :])
    return ts, pr


def _pauli_fids(pnet, n, m, est, construction):
    pnet = np.atleast_2d(np.asarray(pnet, dtype=float))
    ts, pr = _mult_table(pnet, n)
    est_mat = np.clip(np.array([est[tuple(t)] for t in ts], dtype=float), 0, None)
    if construction == "pauli":
        bc = np.sqrt(est_mat[None, :, :] * pnet[:, None, :]).sum(axis=-1)
        return (pr * bc ** (m - n)).sum(axis=1)
    if construction == "ep":
        # all Choi operators are diagonal in the product Bell basis, so the
        # fidelity is a Bhattacharyya sum over Pauli strings grouped by type u
        us = np.array(list(compositions(m, 4)))
        logc = np.array([_log_multinomial(u) for u in us])
        pu = _powprod(pnet[:, None, :], us[None, :, :])
        qa = _powprod(est_mat[:, None, :], us[None, :, :])
        qu = pr @ qa
        return (np.exp(logc)[None, :] * np.sqrt(pu * qu)).sum(axis=1)
    raise ValueError(f"unknown construction {construction!r}")


def pauli_mp_fidelity(p_net, n: int, m: int, est: Estimator | None = None,
                      construction: str = "pauli") -> ProtocolResult:
    """Worst-case fidelity of a measure-and-prepare protocol for Pauli channels.

    ``construction="pauli"`` keeps the N measured channels as exact Pauli
    corrections and prepares ``N_{p̂}^{⊗(M−N)}``; ``construction="ep"``
    prepares ``N_{p̂}^{⊗M}`` from the estimate alone.
    """
    est = natural_pauli_estimator(n) if est is None else est
    _check_pauli_est(est, n)
    p_net = [np.asarray(p, dtype=float) for p in p_net]
    fids = _pauli_fids(np.array(p_net), n, m, est, construction)
    return _result(p_net, fids, est, n, m, construction=construction)


def bitflip_net(points: int = 101):
    return [np.array([1 - q, q, 0.0, 0.0]) for q in np.linspace(0, 1, points)]


def binom_sqrt_bound_check(n: int, p: float):
    """Exact ``E[√X]`` for ``X ~ Bin(n, p)`` and the lower bound ``√(pn)(1 − (1−p)/(2pn))``."""
    if n > 60:
        raise ValueError("exact enumeration limited to n <= 60")
    if not 0 < p <= 1:
        raise ValueError("p must be in (0, 1]")
    exact = sum(comb(n, t) * p ** t * (1 - p) ** (n - t) * np.sqrt(t) for t in range(n + 1))
    bound = np.sqrt(p * n) * (1 - (1 - p) / (2 * p * n))
    return float(exact), float(bound)


def pauli_invariance_check(p) -> float:
    """Residual of ``Σ_j N_j[N_p] = N_p`` for the Bell-measure-and-correct process."""
    p = np.asarray(p, dtype=float)
    choi = ch.kraus_to_choi(ch.pauli(p)).matrix
    phi = np.zeros(4, dtype=complex)
    phi[0] = phi[3] = 1 / np.sqrt(2)
    out = np.zeros((4, 4), dtype=complex)
    for s in PAULI:
        phij = np.kron(np.eye(2), s) @ phi
        weight = np.vdot(phij, choi @ phij).real
        out += weight * ch.kraus_to_choi(ch.unitary_channel(s)).matrix
    return float(np.abs(out - choi).max())


# --- amplitude damping --------------------------------------------------------------

def _binom_pmf(t: int, n: int, p):
    p = np.asarray(p, dtype=float)
    return comb(n, t) * p ** t * (1 - p) ** (n - t)


def natural_ad_estimator(n: int, mode: str = "ep") -> Estimator:
    t = np.arange(n + 1)
    vals = t / n if mode == "ep" else np.minimum(2 * t / n, 1.0)
    return Estimator.from_array(vals)


def _ad_values(est, n):
    v = np.array([est[t] for t in range(n + 1)], dtype=float)
    if np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
        raise ValueError("estimator values must lie in [0, 1]")
    return np.clip(v, 0, 1)


def _ad_ep_curve(gam, n, m, v):
    return sum(_binom_pmf(t, n, gam) * ad_cj_fidelity(v[t], gam) ** m for t in range(n + 1))


def _ad_coh_curve(gam, n, m, v):
    return sum(_binom_pmf(t, n, gam / 2) * ad_cj_fidelity(v[t], gam) ** (m - n) for t in range(n + 1))


def ad_ep_fidelity(gamma_net=None, n: int = 1, m: int = 2, est: Estimator | None = None) -> ProtocolResult:
    """Concavity lower bound ``Σ_t Bin(t|N,γ) F_CJ(E_{γ̂(t)}, E_γ)^M`` for estimate-and-prepare."""
    g = default_net("ad") if gamma_net is None else np.asarray(gamma_net, dtype=float)
    est = natural_ad_estimator(n, "ep") if est is None else est
    return _result(g, _ad_ep_curve(g, n, m, _ad_values(est, n)), est, n, m)


def ad_coherent_fidelity(gamma_net=None, n: int = 1, m: int = 2, est: Estimator | None = None) -> ProtocolResult:
    """Exact ``Σ_t Bin(t|N,γ/2) F_CJ(E_{γ̂(t)}, E_γ)^{M−N}`` for the coherent process."""
    g = default_net("ad") if gamma_net is None else np.asarray(gamma_net, dtype=float)
    est = natural_ad_estimator(n, "coherent") if est is None else est
    return _result(g, _ad_coh_curve(g, n, m, _ad_values(est, n)), est, n, m)


def ad_dummy_fidelity(n: int, m: int) -> float:
    return float(AD_DUMMY ** (m - n))


# --- estimator optimization -----------------------------------------------------------

def _objective(family, mode, net, n, m):
    net = np.asarray(net, dtype=float)
    if family == "ad":
        curve = {"ep": _ad_ep_curve, "coherent": _ad_coh_curve}[mode]
        return lambda v: float(np.min(curve(net, n, m, np.clip(v, 0, 1))))
    if family == "bitflip":
        pnet = net if net.ndim == 2 else np.stack([1 - net, net, 0 * net, 0 * net], axis=1)
        if mode not in ("ep", "pauli"):
            raise ValueError(f"unsupported mode {mode!r} for bit-flip")
        return lambda v: float(np.min(_pauli_fids(pnet, n, m, bitflip_estimator(v), mode)))
    raise ValueError(f"unsupported family {family!r}")


@dataclass
class OptimizationTrace:
    best: list = field(default_factory=list)


def optimize_estimator(family: str, mode: str, net, n: int, m: int, init: Estimator,
                       seed: int = 0, restarts: int = 10, maxfev: int = 2000,
                       trace: OptimizationTrace | None = None) -> Estimator:
    """Derivative-free ascent of the worst-case fidelity over estimator values.

    Nelder–Mead from ``init`` and from ``restarts − 1`` random perturbations;
    the best point seen is kept, so the returned value never scores below ``init``.

    For ``family="bitflip"`` the returned estimator holds flip probabilities
    indexed by t₁ (feed it to :func:`bitflip_estimator`); ``init`` may be given
    either that way or as the vector-valued Pauli estimator.
    """
    obj = _objective(family, mode, net, n, m)
    if family == "bitflip" and any(np.ndim(v) for v in init.values.values()):
        init = Estimator.from_array([init[(n - t, t, 0, 0)][1] for t in range(n + 1)])
    x0 = np.clip(init.as_array(), 0, 1)
    best_x, best_v = x0.copy(), obj(x0)
    trace = trace if trace is not None else OptimizationTrace()
    trace.best.append(best_v)
    rng = np.random.default_rng(seed)
    for r in range(restarts):
        start = x0 if r == 0 else np.clip(best_x + 0.15 * rng.standard_normal(x0.size), 0, 1)
        res = minimize(lambda v: -obj(v), start, method="Nelder-Mead",
                       options={"maxfev": maxfev, "xatol": 1e-10, "fatol": 1e-13})
        x = np.clip(res.x, 0, 1)
        v = obj(x)
        if v > best_v:
            best_x, best_v = x, v
        trace.best.append(best_v)
    return Estimator.from_array(best_x)


# --- state cloning equivalence -----------------------------------------------------

def trash_replace_equivalence_check(state_cloner: ch.KrausChannel, rho, n: int, m: int):
    """Compare ``F_CJ(T_{P[ρ^⊗N]}, T_ρ^{⊗M})`` with ``F(P[ρ^⊗N], ρ^⊗M)``.

    The left side is built from Choi matrices of trash-and-replace channels,
    the right side directly from the states.
    """
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    if state_cloner.d_in != d ** n or state_cloner.d_out != d ** m:
        raise ValueError("cloner dimensions do not match d^N -> d^M")
    rho_n = rho
    for _ in range(n - 1):
        rho_n = np.kron(rho_n, rho)
    out = ch.apply_channel(state_cloner, rho_n)
    out = 0.5 * (out + out.conj().T)
    rho_m = rho
    for _ in range(m - 1):
        rho_m = np.kron(rho_m, rho)
    lhs_a = ch.kraus_to_choi(ch.trash_and_replace(out, d_in=d ** m), check=False).matrix
    lhs_b = ch.kraus_to_choi(ch.tensor_power(ch.trash_and_replace(rho), m), check=False).matrix
    lhs = choi_fidelity(lhs_a, lhs_b)
    rhs = state_fidelity(out, rho_m, check=False)
    return lhs, rhs
