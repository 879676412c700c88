"""Quantum channels as Kraus sets and Choi operators, plus the standard families.

Choi convention: ``CJ[E] = (id ⊗ E)(|Ω⟩⟨Ω|)/d_in`` with ``|Ω⟩ = Σ_i |i⟩|i⟩``,
reference factor first and output factor second.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linalg as la
from .linalg import PAULI, DimensionError

TP_TOL = 1e-10
KRAUS_EIG_TOL = 1e-10


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class KrausChannel:
    """A CPTP map ``ρ ↦ Σ K ρ K†`` with ``K`` of shape ``(d_out, d_in)``."""

    d_in: int
    d_out: int
    kraus: tuple

    def __post_init__(self):
        ks = tuple(np.array(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ChannelError("a channel needs at least one Kraus operator")
        for k in ks:
            if k.shape != (self.d_out, self.d_in):
                raise DimensionError(f"Kraus shape {k.shape} != ({self.d_out}, {self.d_in})")
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ks)

    @classmethod
    def from_ops(cls, ops: Sequence, check: bool = True) -> "KrausChannel":
        ops = [np.atleast_2d(np.asarray(k, dtype=complex)) for k in ops]
        d_out, d_in = ops[0].shape
        ch = cls(d_in, d_out, tuple(ops))
        if check:
            ch.validate()
        return ch

    def tp_residual(self) -> float:
        s = sum(k.conj().T @ k for k in self.kraus)
        return float(np.abs(s - np.eye(self.d_in)).max())

    def validate(self, tol: float = TP_TOL) -> "KrausChannel":
        r = self.tp_residual()
        if r > tol:
            raise ChannelError(f"trace preservation violated by {r:.2e}")
        return self

    def __call__(self, rho):
        return apply_channel(self, rho)

    def to_json(self) -> str:
        return json.dumps({
            "d_in": self.d_in,
            "d_out": self.d_out,
            "kraus": [[[[z.real, z.imag] for z in row] for row in k] for k in self.kraus],
        })

    @classmethod
    def from_json(cls, text: str) -> "KrausChannel":
        obj = json.loads(text)
        ks = [np.array([[complex(re, im) for re, im in row] for row in k]) for k in obj["kraus"]]
        ch = cls(int(obj["d_in"]), int(obj["d_out"]), tuple(ks))
        return ch.validate(1e-8)


@dataclass(frozen=True)
class ChoiOperator:
    """Choi matrix on ``H_ref ⊗ H_out`` carrying its normalization flag."""

    d_in: int
    d_out: int
    matrix: np.ndarray = field(repr=False)
    normalized: bool = True

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        n = self.d_in * self.d_out
        if m.shape != (n, n):
            raise DimensionError(f"Choi shape {m.shape} != ({n}, {n})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dims(self) -> list:
        return [self.d_in, self.d_out]

    def normalized_matrix(self) -> np.ndarray:
        return self.matrix if self.normalized else self.matrix / self.d_in

    def unnormalized_matrix(self) -> np.ndarray:
        return self.matrix * self.d_in if self.normalized else self.matrix

    def as_normalized(self) -> "ChoiOperator":
        return ChoiOperator(self.d_in, self.d_out, self.normalized_matrix(), True)

    def as_unnormalized(self) -> "ChoiOperator":
        return ChoiOperator(self.d_in, self.d_out, self.unnormalized_matrix(), False)

    def marginal_residual(self) -> float:
        red = la.partial_trace(self.normalized_matrix(), self.dims, [1])
        return float(np.abs(red - np.eye(self.d_in) / self.d_in).max())

    def min_eig(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))[0])

    def validate(self, psd_tol: float = 1e-10, marg_tol: float = 1e-9) -> "ChoiOperator":
        if self.min_eig() < -psd_tol:
            raise ChannelError(f"Choi not PSD (min eig {self.min_eig():.2e})")
        if self.marginal_residual() > marg_tol:
            raise ChannelError(f"Choi marginal off by {self.marginal_residual():.2e}")
        return self


def _vec_kraus(k: np.ndarray) -> np.ndarray:
    # (I ⊗ K)|Ω⟩ = Σ_i |i⟩ ⊗ K|i⟩, i.e. entry (i, o) = K[o, i]
    return k.T.reshape(-1)


def kraus_to_choi(c: KrausChannel, normalized: bool = True, check: bool = True) -> ChoiOperator:
    if check:
        c.validate()
    m = np.zeros((c.d_in * c.d_out,) * 2, dtype=complex)
    for k in c.kraus:
        v = _vec_kraus(k)
        m += np.outer(v, v.conj())
    if normalized:
        m = m / c.d_in
    return ChoiOperator(c.d_in, c.d_out, m, normalized)


def choi_of(c) -> ChoiOperator:
    """Normalized Choi operator of a channel given as Kraus set or Choi."""
    if isinstance(c, ChoiOperator):
        return c.as_normalized()
    return kraus_to_choi(c, normalized=True)


def choi_to_kraus(choi: ChoiOperator, tol: float = KRAUS_EIG_TOL) -> KrausChannel:
    j = choi.unnormalized_matrix()
    w, v = np.linalg.eigh(0.5 * (j + j.conj().T))
    if w[0] < -max(tol, 1e-10) * max(1.0, abs(w[-1])):
        raise ChannelError(f"Choi not PSD (min eig {w[0]:.2e})")
    ks = []
    for lam, vec in zip(w[::-1], v.T[::-1]):
        if lam <= tol:
            continue
        ks.append(np.sqrt(lam) * vec.reshape(choi.d_in, choi.d_out).T)
    return KrausChannel(choi.d_in, choi.d_out, tuple(ks))


def apply_channel(c, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if isinstance(c, ChoiOperator):
        if rho.shape != (c.d_in, c.d_in):
            raise DimensionError("state does not match channel input")
        j = c.unnormalized_matrix()
        op = np.kron(rho.T, np.eye(c.d_out))
        return la.partial_trace(op @ j, [c.d_in, c.d_out], [0])
    if rho.shape != (c.d_in, c.d_in):
        raise DimensionError("state does not match channel input")
    return sum(k @ rho @ k.conj().T for k in c.kraus)


def tensor_channels(a: KrausChannel, *rest: KrausChannel) -> KrausChannel:
    out = a
    for b in rest:
        ks = tuple(np.kron(ka, kb) for ka in out.kraus for kb in b.kraus)
        out = KrausChannel(out.d_in * b.d_in, out.d_out * b.d_out, ks)
    return out


def tensor_power(a: KrausChannel, n: int) -> KrausChannel:
    if n < 1:
        raise ValueError("tensor power needs n >= 1")
    return tensor_channels(a, *([a] * (n - 1)))


def compose_channels(after: KrausChannel, before: KrausChannel) -> KrausChannel:
    if after.d_in != before.d_out:
        raise DimensionError("cannot compose: dimension mismatch")
    ks = tuple(ka @ kb for ka in after.kraus for kb in before.kraus)
    return KrausChannel(before.d_in, after.d_out, ks)


def choi_tensor(a: ChoiOperator, b: ChoiOperator) -> ChoiOperator:
    """Choi of ``A ⊗ B`` from the Chois of ``A`` and ``B`` (ref/out regrouped)."""
    m = np.kron(a.normalized_matrix(), b.normalized_matrix())
    # factors (ra, oa, rb, ob) -> (ra, rb, oa, ob)
    d = [a.d_in, a.d_out, b.d_in, b.d_out]
    t = m.reshape(d + d).transpose(0, 2, 1, 3, 4, 6, 5, 7)
    n = a.d_in * a.d_out * b.d_in * b.d_out
    return ChoiOperator(a.d_in * b.d_in, a.d_out * b.d_out, t.reshape(n, n), True)


# --- families -----------------------------------------------------------

def _check_unit(name: str, x: float):
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"{name}={x} outside [0, 1]")


def amplitude_damping(gamma: float) -> KrausChannel:
    _check_unit("gamma", gamma)
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return KrausChannel(2, 2, (k0, k1))


def pauli(*p) -> KrausChannel:
    """Pauli channel ``Σ_j p_j σ_j · σ_j``."""
    if len(p) == 1:
        p = tuple(p[0])
    p = np.asarray(p, dtype=float)
    if p.shape != (4,) or np.any(p < -1e-15) or abs(p.sum() - 1) > 1e-10:
        raise ValueError(f"invalid Pauli probability vector {p}")
    p = np.clip(p, 0, None)
    return KrausChannel(2, 2, tuple(np.sqrt(pj) * s for pj, s in zip(p, PAULI)))


def bit_flip(p: float) -> KrausChannel:
    _check_unit("p", p)
    return pauli(1 - p, p, 0.0, 0.0)


def phase_unitary(theta: float) -> np.ndarray:
    return np.diag([np.exp(1j * theta), np.exp(-1j * theta)])


def unitary_channel(u) -> KrausChannel:
    u = np.asarray(u, dtype=complex)
    if not np.allclose(u.conj().T @ u, np.eye(u.shape[1]), atol=1e-9):
        raise ChannelError("matrix is not unitary")
    return KrausChannel(u.shape[1], u.shape[0], (u,))


def phase_gate(theta: float) -> KrausChannel:
    """``U_θ = exp(iθσ_z)``."""
    return unitary_channel(phase_unitary(theta))


def identity_channel(d: int = 2) -> KrausChannel:
    return KrausChannel(d, d, (np.eye(d, dtype=complex),))


def trash_and_replace(rho, d_in: int | None = None) -> KrausChannel:
    """``T_ρ[σ] = tr(σ) ρ`` with Kraus ``√λ_k |v_k⟩⟨i|``."""
    rho = np.asarray(rho, dtype=complex)
    d_out = rho.shape[0]
    d_in = d_out if d_in is None else d_in
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    ks = []
    for lam, vec in zip(w, v.T):
        if lam <= KRAUS_EIG_TOL:
            continue
        for i in range(d_in):
            k = np.zeros((d_out, d_in), dtype=complex)
            k[:, i] = np.sqrt(lam) * vec
            ks.append(k)
    return KrausChannel(d_in, d_out, tuple(ks))


def noisy_phase_A(theta: float, p: float) -> KrausChannel:
    """Bit flip after the phase gate: ``X_p ∘ U_θ``."""
    _check_unit("p", p)
    u = phase_unitary(theta)
    return KrausChannel(2, 2, (np.sqrt(1 - p) * u, np.sqrt(p) * PAULI[1] @ u))


def noisy_phase_B(theta: float, p: float) -> KrausChannel:
    """Bit flip before the phase gate: ``U_θ ∘ X_p``."""
    _check_unit("p", p)
    u = phase_unitary(theta)
    return KrausChannel(2, 2, (np.sqrt(1 - p) * u, np.sqrt(p) * u @ PAULI[1]))


# --- smooth curves ----------------------------------------------------------

FD_STEP = 1e-5


@dataclass(frozen=True)
class ChannelCurve:
    """One-parameter family ``x ↦ E_x`` with Kraus derivatives."""

    kraus_fn: Callable[[float], KrausChannel]
    dot_fn: Callable[[float], list] | None = None
    domain: tuple = (0.0, 1.0)
    name: str = "custom"

    def _check(self, x: float):
        a, b = self.domain
        if not (a <= x <= b):
            raise ValueError(f"x={x} outside curve domain {self.domain}")

    def kraus_at(self, x: float) -> KrausChannel:
        self._check(x)
        return self.kraus_fn(x)

    def kraus_dot_at(self, x: float) -> list:
        self._check(x)
        if self.dot_fn is not None:
            return [np.asarray(k, dtype=complex) for k in self.dot_fn(x)]
        return finite_difference_dot(self.kraus_fn, x, FD_STEP)

    def choi_at(self, x: float) -> np.ndarray:
        return kraus_to_choi(self.kraus_at(x)).matrix


def finite_difference_dot(kraus_fn, x: float, h: float = FD_STEP) -> list:
    kp = kraus_fn(x + h).kraus
    km = kraus_fn(x - h).kraus
    return [(a - b) / (2 * h) for a, b in zip(kp, km)]


def ad_curve(eps: float = 0.0) -> ChannelCurve:
    def dot(g):
        k0 = np.zeros((2, 2), dtype=complex)
        k1 = np.zeros((2, 2), dtype=complex)
        k0[1, 1] = -0.5 / np.sqrt(1 - g)
        k1[0, 1] = 0.5 / np.sqrt(g)
        return [k0, k1]
    return ChannelCurve(amplitude_damping, dot, (eps, 1.0 - eps), "amplitude_damping")


def pauli_curve(direction=(-1.0, 1.0, 0.0, 0.0), base=(1.0, 0.0, 0.0, 0.0)) -> ChannelCurve:
    """Line ``p(x) = base + x·direction`` through the Pauli simplex.

    The default is the bit-flip line ``(1-x, x, 0, 0)`` on ``x∈[0, 1]``.
    """
    direction = np.asarray(direction, dtype=float)
    base = np.asarray(base, dtype=float)
    if abs(direction.sum()) > 1e-12:
        raise ValueError("direction must sum to zero to stay normalized")
    # admissible range of x
    lo, hi = -np.inf, np.inf
    for b, d in zip(base, direction):
        if d > 0:
            lo, hi = max(lo, -b / d), min(hi, (1 - b) / d)
        elif d < 0:
            lo, hi = max(lo, (1 - b) / d), min(hi, -b / d)

    def probs(x):
        return np.clip(base + x * direction, 0, 1)

    def kr(x):
        return pauli(probs(x) / probs(x).sum())

    def dot(x):
        p = probs(x)
        out = []
        for pj, dj, s in zip(p, direction, PAULI):
            out.append(0.5 * dj / np.sqrt(pj) * s if pj > 0 else np.zeros((2, 2), complex))
        return out

    c = ChannelCurve(kr, dot, (float(lo), float(hi)), "pauli")
    object.__setattr__(c, "probs", probs)
    object.__setattr__(c, "direction", direction)
    return c


def bit_flip_curve() -> ChannelCurve:
    return pauli_curve()


def phase_curve() -> ChannelCurve:
    def dot(t):
        return [1j * PAULI[3] @ phase_unitary(t)]
    return ChannelCurve(phase_gate, dot, (-np.pi, np.pi), "phase")


def noisy_phase_A_curve(p: float) -> ChannelCurve:
    def dot(t):
        du = 1j * PAULI[3] @ phase_unitary(t)
        return [np.sqrt(1 - p) * du, np.sqrt(p) * PAULI[1] @ du]
    return ChannelCurve(lambda t: noisy_phase_A(t, p), dot, (-np.pi, np.pi), "noisy_phase_A")


def noisy_phase_B_curve(p: float) -> ChannelCurve:
    def dot(t):
        du = 1j * PAULI[3] @ phase_unitary(t)
        return [np.sqrt(1 - p) * du, np.sqrt(p) * du @ PAULI[1]]
    return ChannelCurve(lambda t: noisy_phase_B(t, p), dot, (-np.pi, np.pi), "noisy_phase_B")


def custom_curve(kraus_fn, dot_fn=None, domain=(0.0, 1.0), name="custom") -> ChannelCurve:
    if not domain[0] < domain[1]:
        raise ValueError("empty curve domain")
    return ChannelCurve(kraus_fn, dot_fn, tuple(domain), name)


def random_channel(d_in: int, d_out: int, rng: np.random.Generator, n_kraus: int = 3) -> KrausChannel:
    """Random CPTP map from a random isometry."""
    g = rng.standard_normal((n_kraus * d_out, d_in)) + 1j * rng.standard_normal((n_kraus * d_out, d_in))
    q, _ = np.linalg.qr(g)
    ks = tuple(q[i * d_out:(i + 1) * d_out, :] for i in range(n_kraus))
    return KrausChannel(d_in, d_out, ks)
