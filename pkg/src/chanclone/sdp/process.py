"""Higher-order process Chois, their constraint projectors and contraction.

A process with ``N`` slots is stored on the factor order
``in, out, 1_1 … 1_N, 2_1 … 2_N`` where slot ``i`` maps ``1_i → 2_i``.
The unnormalized Choi ``W`` acts on unnormalized slot Chois through::

    S(C̄) = tr_{1⃗2⃗}[(1 ⊗ C̄ᵀ) W]

and ``S(C̄[E⊗…]) / d_in`` is the normalized Choi of the output channel.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import json

import numpy as np

from .. import linalg as la
from ..channels import ChoiOperator, KrausChannel, kraus_to_choi

KINDS = ("parallel", "sequential", "noncausal")
PROCESS_TOL = 1e-7


class ProcessError(ValueError):
    pass


def factor_dims(d_in: int, d_out: int, d1, d2) -> list:
    d1, d2 = list(d1), list(d2)
    if len(d1) != len(d2):
        raise ProcessError("slot input and output dimension lists differ in length")
    return [int(d_in), int(d_out)] + [int(x) for x in d1] + [int(x) for x in d2]


def _labels(n: int) -> dict:
    lab = {"in": 0, "out": 1}
    for i in range(n):
        lab[f"1_{i + 1}"] = 2 + i
        lab[f"2_{i + 1}"] = 2 + n + i
    return lab


def projector_terms(kind: str, n_slots: int) -> list:
    """Signed trace-and-replace terms ``[(sign, labels), ...]`` of the projector."""
    if kind not in KINDS:
        raise ProcessError(f"unknown process kind {kind!r}")
    if n_slots == 1:
        return [(1, ()), (-1, ("out",)), (1, ("2_1", "out")), (-1, ("1_1", "2_1", "out")),
                (1, ("in", "1_1", "2_1", "out"))]
    if n_slots != 2:
        raise ProcessError("only one or two slots are supported")
    allf = ("in", "1_1", "2_1", "1_2", "2_2", "out")
    if kind == "parallel":
        return [(1, ()), (-1, ("out",)), (1, ("2_1", "2_2", "out")),
                (-1, ("1_1", "1_2", "2_1", "2_2", "out")), (1, allf)]
    if kind == "sequential":
        # slot 1 is called before slot 2
        return [(1, ()), (-1, ("out",)), (1, ("2_2", "out")), (-1, ("1_2", "2_2", "out")),
                (1, ("2_1", "1_2", "2_2", "out")), (-1, ("1_1", "2_1", "1_2", "2_2", "out")),
                (1, allf)]
    # no fixed order between the slots
    return [(1, ()), (-1, ("out",)), (1, ("2_1", "out")), (1, ("2_2", "out")),
            (-1, ("2_1", "2_2", "out")), (-1, ("1_2", "2_2", "out")),
            (1, ("1_2", "2_1", "2_2", "out")), (-1, ("1_1", "2_1", "out")),
            (1, ("1_1", "2_1", "2_2", "out")), (-1, ("1_1", "2_1", "1_2", "2_2", "out")),
            (1, allf)]


def projector(kind: str, n_slots: int, dims):
    """The projector as a function on matrices over ``dims`` (factor order above)."""
    dims = list(dims)
    if len(dims) != 2 + 2 * n_slots:
        raise ProcessError("dims must list in, out and both sides of every slot")
    lab = _labels(n_slots)
    terms = [(s, tuple(sorted(lab[x] for x in t))) for s, t in projector_terms(kind, n_slots)]

    def apply(x):
        x = np.asarray(x, dtype=complex)
        out = np.zeros_like(x)
        for s, sub in terms:
            out += s * la.trace_and_replace(x, dims, sub)
        return out

    apply.terms = terms
    apply.dims = dims
    return apply


def projector_rank(kind: str, n_slots: int, dims) -> int:
    """Dimension of the range of the projector on Hermitian matrices."""
    lab = _labels(n_slots)
    total = 0
    for s, t in projector_terms(kind, n_slots):
        keep = [d for k, d in enumerate(dims) if k not in {lab[x] for x in t}]
        total += s * int(np.prod([d * d for d in keep]))
    return total


@lru_cache(maxsize=16)
def complement_basis(kind: str, n_slots: int, dims: tuple, seed: int = 0) -> np.ndarray:
    """Orthonormal rows spanning ``range(1 − P)`` in Hermitian coordinates."""
    from . import hermitian as hm

    D = int(np.prod(dims))
    r = D * D - projector_rank(kind, n_slots, dims)
    if r * D * D > 4e8:
        raise ProcessError(f"process space of dimension {D} is too large for a dense basis")
    P = projector(kind, n_slots, dims)
    rng = np.random.default_rng(seed)
    k = r + 16
    cols = np.empty((D * D, k))
    for j in range(k):
        h = la.random_hermitian(D, rng)
        cols[:, j] = hm.to_vec(h - P(h))
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    rank = int(np.sum(s > 1e-9 * s[0])) if s.size else 0
    if rank != r:
        raise ProcessError(f"complement rank {rank} differs from the expected {r}")
    return np.ascontiguousarray(u[:, :rank].T)


@dataclass(frozen=True)
class ProcessChoi:
    n_slots: int
    d_in: int
    d_out: int
    d1: tuple
    d2: tuple
    matrix: np.ndarray
    kind: str = "parallel"

    @classmethod
    def create(cls, matrix, d_in, d_out, d1, d2, kind="parallel", validate=True):
        d1, d2 = tuple(int(x) for x in d1), tuple(int(x) for x in d2)
        p = cls(len(d1), int(d_in), int(d_out), d1, d2, np.asarray(matrix, dtype=complex), kind)
        if kind not in KINDS:
            raise ProcessError(f"unknown process kind {kind!r}")
        D = int(np.prod(p.dims))
        if p.matrix.shape != (D, D):
            raise ProcessError(f"matrix shape {p.matrix.shape} does not match dims {p.dims}")
        if validate:
            p.validate()
        return p

    @property
    def dims(self) -> list:
        return factor_dims(self.d_in, self.d_out, self.d1, self.d2)

    @property
    def expected_trace(self) -> float:
        return float(self.d_in * np.prod(self.d2))

    def residuals(self) -> dict:
        m = self.matrix
        P = projector(self.kind, self.n_slots, self.dims)
        return {
            "min_eig": float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]),
            "trace": float(abs(np.trace(m) - self.expected_trace)),
            "fixed_point": float(np.abs(P(m) - m).max()),
            "hermitian": float(np.abs(m - m.conj().T).max()),
        }

    def validate(self, tol: float = PROCESS_TOL):
        r = self.residuals()
        if r["hermitian"] > tol:
            raise ProcessError("process Choi is not Hermitian")
        if r["min_eig"] < -tol:
            raise ProcessError(f"process Choi not PSD (min eig {r['min_eig']:.2e})")
        if r["trace"] > tol * max(1.0, self.expected_trace):
            raise ProcessError("process Choi has the wrong trace")
        if r["fixed_point"] > tol:
            raise ProcessError(f"process Choi violates the {self.kind} constraints")
        return self

    def to_json(self) -> str:
        return json.dumps({
            "n_slots": self.n_slots, "d_in": self.d_in, "d_out": self.d_out,
            "d1": list(self.d1), "d2": list(self.d2), "kind": self.kind,
            "re": self.matrix.real.tolist(), "im": self.matrix.imag.tolist(),
        })

    @classmethod
    def from_json(cls, s: str, validate=True) -> "ProcessChoi":
        d = json.loads(s)
        m = np.asarray(d["re"]) + 1j * np.asarray(d["im"])
        return cls.create(m, d["d_in"], d["d_out"], d["d1"], d["d2"], d["kind"], validate)


def _unnormalized(c) -> np.ndarray:
    if isinstance(c, KrausChannel):
        c = kraus_to_choi(c)
    if isinstance(c, ChoiOperator):
        return c.unnormalized_matrix()
    return np.asarray(c, dtype=complex)


def slot_choi(chois, d1, d2) -> np.ndarray:
    """Unnormalized Choi of the slot channels on ``1_1 … 1_N, 2_1 … 2_N``."""
    mats = [_unnormalized(c) for c in chois]
    if len(mats) != len(d1):
        raise ProcessError(f"process has {len(d1)} slots, got {len(mats)} channels")
    for m, a, b in zip(mats, d1, d2):
        if m.shape != (a * b, a * b):
            raise ProcessError("slot channel dimension mismatch")
    m = la.kron(*mats)
    n = len(mats)
    pair = []
    for a, b in zip(d1, d2):
        pair += [a, b]
    perm = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    t = m.reshape(pair + pair).transpose(perm + [p + 2 * n for p in perm])
    D = m.shape[0]
    return t.reshape(D, D)


def contract(w: np.ndarray, c_bar: np.ndarray, d_io: int) -> np.ndarray:
    """``tr_{1⃗2⃗}[(1 ⊗ C̄ᵀ) W]`` for ``W`` on (in·out) ⊗ (slots)."""
    ds = c_bar.shape[0]
    t = w.reshape(d_io, ds, d_io, ds)
    return np.einsum("iajb,ab->ij", t, c_bar)


def apply_process(p: ProcessChoi, chois) -> ChoiOperator:
    """Normalized Choi of the channel produced by plugging ``chois`` into ``p``.

    ``chois`` lists one channel per slot: unnormalized Choi arrays,
    :class:`ChoiOperator` or :class:`KrausChannel` values.
    """
    cb = slot_choi(chois, p.d1, p.d2)
    out = contract(p.matrix, cb, p.d_in * p.d_out) / p.d_in
    return ChoiOperator(p.d_in, p.d_out, 0.5 * (out + out.conj().T), True)


def process_from_map(fn, d_in, d_out, d1, d2, kind="parallel", validate=True) -> ProcessChoi:
    """Process Choi of the linear map ``C̄ ↦ fn(C̄)`` (unnormalized slot Choi in,
    unnormalized output Choi out), as ``W = Σ fn(|a⟩⟨b|) ⊗ |a⟩⟨b|``."""
    ds = int(np.prod(d1)) * int(np.prod(d2))
    dio = d_in * d_out
    w = np.zeros((dio, ds, dio, ds), dtype=complex)
    for a in range(ds):
        for b in range(ds):
            e = np.zeros((ds, ds), dtype=complex)
            e[a, b] = 1.0
            w[:, a, :, b] = fn(e)
    return ProcessChoi.create(w.reshape(dio * ds, dio * ds), d_in, d_out, d1, d2, kind, validate)


def _regroup_tensor(a: np.ndarray, da, db) -> np.ndarray:
    # unnormalized Chois of A (ra, oa) and B (rb, ob) -> (ra, rb, oa, ob)
    ra, oa = da
    rb, ob = db
    m = np.kron(a[0], a[1])
    d = [ra, oa, rb, ob]
    n = ra * oa * rb * ob
    return m.reshape(d + d).transpose(0, 2, 1, 3, 4, 6, 5, 7).reshape(n, n)


def identity_process(d: int = 2, kind="parallel") -> ProcessChoi:
    """One slot routed straight to the output."""
    return process_from_map(lambda c: c, d, d, [d], [d], kind)


def constant_process(target, d1, d2, kind="parallel") -> ProcessChoi:
    """Discard the slots and output the fixed channel ``target``."""
    ct = _unnormalized(target)
    if isinstance(target, KrausChannel):
        di, do = target.d_in, target.d_out
    elif isinstance(target, ChoiOperator):
        di, do = target.d_in, target.d_out
    else:
        raise ProcessError("target must be a KrausChannel or ChoiOperator")
    scale = float(np.prod(d1))
    return process_from_map(lambda c: ct * np.trace(c) / scale, di, do, d1, d2, kind)


def dummy_process(aux, d: int = 2, kind="parallel") -> ProcessChoi:
    """One slot copied through, plus a fixed auxiliary channel on a second copy."""
    ca = _unnormalized(aux)
    da = (aux.d_in, aux.d_out)
    return process_from_map(lambda c: _regroup_tensor((c, ca), (d, d), da),
                            d * da[0], d * da[1], [d], [d], kind)


def process_choi_from_channels(pre: KrausChannel, post: KrausChannel, d_in, d_out, d1, d2,
                               d_mem) -> ProcessChoi:
    """Parallel one-slot process ``post ∘ (slot ⊗ id_mem) ∘ pre``.

    ``pre`` maps ``in → 1 ⊗ mem`` and ``post`` maps ``2 ⊗ mem → out``.
    """
    d1, d2 = int(d1), int(d2)

    def fn(c: np.ndarray) -> np.ndarray:
        # c is the unnormalized Choi of a (possibly non-physical) slot map;
        # apply via its Kraus-free action: X -> tr_1[(Xᵀ ⊗ 1) C]
        out = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
        for a in range(d_in):
            for b in range(d_in):
                e = np.zeros((d_in, d_in), dtype=complex)
                e[a, b] = 1.0
                x = sum(k @ e @ k.conj().T for k in pre.kraus)  # on 1 ⊗ mem
                x = _apply_choi_local(c, x, d1, d2, d_mem)
                y = sum(k @ x @ k.conj().T for k in post.kraus)
                out += np.kron(e, y)
        return out

    return process_from_map(fn, d_in, d_out, [d1], [d2])


def _apply_choi_local(c, x, d1, d2, d_mem):
    # (slot ⊗ id_mem)(x) for slot map with unnormalized Choi c on (1, 2)
    cc = c.reshape(d1, d2, d1, d2)
    xx = x.reshape(d1, d_mem, d1, d_mem)
    y = np.einsum("abcd,amcn->bmdn", cc, xx)
    return y.reshape(d2 * d_mem, d2 * d_mem)
