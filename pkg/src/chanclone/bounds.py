"""Analytic lower bounds on the cloning error.

Covers the QFI machinery (α/β operators, f_N), the A and Ã functions and the
closed-form bounds for states, unitaries and smooth channel families.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channels import ChannelCurve, KrausChannel, kraus_to_choi
from .metrics import cj_fidelity, state_fidelity, unitary_discrimination

REMOVABLE_TOL = 1e-8
GOLDEN = (np.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class AlphaBeta:
    alpha: np.ndarray
    beta: np.ndarray
    alpha_norm: float
    beta_norm: float


@dataclass(frozen=True)
class BoundReport:
    kind: str
    n: int
    m: int
    value: float

    @property
    def fidelity_upper(self) -> float:
        return float(np.cos(self.value))


# --- Lambert W and the A functions -------------------------------------------

def lambert_w_m1(y: float, tol: float = 1e-13, max_iter: int = 50) -> float:
    """Lower real branch ``W_{-1}`` on ``[-1/e, 0)`` by Halley iteration."""
    y = float(y)
    if not (-1 / np.e - 1e-16 <= y < 0):
        raise ValueError(f"W_-1 is real only on [-1/e, 0), got {y}")
    if y <= -1 / np.e:
        return -1.0
    q = 1 + np.e * y
    if q < 0.1:
        # branch-point series for the initial guess
        p = -np.sqrt(2 * q)
        w = -1 + p - p * p / 3 + 11 * p ** 3 / 72
    else:
        ly = np.log(-y)
        w = ly - np.log(-ly)
    for _ in range(max_iter):
        ew = np.exp(w)
        f = w * ew - y
        # relative residual, so tiny |y| is resolved too
        if abs(f) <= tol * abs(y):
            break
        wp1 = w + 1
        if abs(wp1) < 1e-300:
            break
        step = f / (ew * wp1 - (w + 2) * f / (2 * wp1))
        w_new = w - step
        if abs(step) <= 1e-16 * abs(w):
            w = w_new
            break
        if w_new > -1:
            # keep the iterate on the lower branch
            w_new = 0.5 * (w - 1)
        w = w_new
    return float(w)


def zeta(z: float) -> float:
    """Stationary point ζ(z) of the A-function maximization, ``0 < z < 1``."""
    w = lambert_w_m1(-z * np.exp(-z))
    return float(np.sqrt(-z / w))


def a_function(z: float) -> float:
    """``A(z)``: zero for ``z >= 1``, tends to π/4 as ``z → 0``."""
    z = float(z)
    if z < 0:
        raise ValueError("A(z) is defined for z >= 0")
    if z >= 1:
        return 0.0
    if z == 0:
        return np.pi / 4
    zt = zeta(z)
    val = 0.5 * (np.arccos(zt) - np.sqrt(2 * z * np.log(1 / zt)))
    return float(max(val, 0.0))


def golden_max(f, a: float, b: float, tol: float = 1e-12, max_iter: int = 500):
    """Golden-section maximization of a unimodal ``f`` on ``[a, b]``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def a_tilde(z: float, grid: int = 1000) -> float:
    """``Ã(z) = max_x (arccos x^{1/z} − arccos x)/2`` for ``z ∈ (0, 1]``."""
    z = float(z)
    if not (0 < z <= 1):
        raise ValueError("Ã(z) needs z in (0, 1]")
    if z == 1:
        return 0.0
    expo = 1 / z

    def g(x):
        return 0.5 * (np.arccos(np.clip(x, 0, 1) ** expo) - np.arccos(np.clip(x, 0, 1)))

    xs = np.linspace(0, 1, grid + 1)
    vals = g(xs)
    k = int(np.argmax(vals))
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, grid)]
    _, best = golden_max(g, lo, hi, tol=1e-14)
    return float(max(best, vals[k]))


# --- α, β and f_N --------------------------------------------------------------

def _gauged_dots(ks, dots, h):
    if h is None:
        return dots
    h = np.asarray(h, dtype=complex)
    r = len(ks)
    if h.shape != (r, r) or not np.allclose(h, h.conj().T, atol=1e-12):
        raise ValueError("gauge must be a Hermitian r×r matrix")
    return [dots[i] + 1j * sum(h[i, j] * ks[j] for j in range(r)) for i in range(r)]


def alpha_beta(curve: ChannelCurve, x: float, gauge=None) -> AlphaBeta:
    """``α = Σ K̇†K̇`` and ``β = Σ K̇†K``, optionally after a gauge ``K̇ → K̇ + i h K``."""
    a, b = curve.domain
    if not (a < x < b):
        raise ValueError(f"x={x} must be interior to {curve.domain}")
    ks = list(curve.kraus_at(x).kraus)
    dots = _gauged_dots(ks, curve.kraus_dot_at(x), gauge)
    alpha = sum(d.conj().T @ d for d in dots)
    beta = sum(d.conj().T @ k for d, k in zip(dots, ks))
    alpha = 0.5 * (alpha + alpha.conj().T)
    return AlphaBeta(alpha, beta, float(np.linalg.norm(alpha, 2)), float(np.linalg.norm(beta, 2)))


def _herm_basis(r: int):
    basis = []
    for i in range(r):
        e = np.zeros((r, r), dtype=complex)
        e[i, i] = 1
        basis.append(e)
    for i in range(r):
        for j in range(i + 1, r):
            e = np.zeros((r, r), dtype=complex)
            e[i, j] = e[j, i] = 1
            basis.append(e)
            f = np.zeros((r, r), dtype=complex)
            f[i, j], f[j, i] = -1j, 1j
            basis.append(f)
    return basis


def beta_removable(curve: ChannelCurve, x: float, tol: float = REMOVABLE_TOL):
    """Decide whether a gauge can remove β at ``x``.

    Solves ``Σ h_ij K_i†K_j = −iβ`` over Hermitian ``h`` in least squares.
    Returns ``(removable, residual, h)``.
    """
    ab = alpha_beta(curve, x)
    ks = list(curve.kraus_at(x).kraus)
    r = len(ks)
    target = -1j * ab.beta
    cols = []
    basis = _herm_basis(r)
    for hb in basis:
        op = sum(hb[i, j] * ks[i].conj().T @ ks[j] for i in range(r) for j in range(r))
        cols.append(np.concatenate([op.real.ravel(), op.imag.ravel()]))
    amat = np.array(cols).T
    rhs = np.concatenate([target.real.ravel(), target.imag.ravel()])
    coef, *_ = np.linalg.lstsq(amat, rhs, rcond=None)
    resid = float(np.linalg.norm(amat @ coef - rhs))
    h = sum(c * hb for c, hb in zip(coef, basis))
    return resid < tol, resid, h


def f_n(curve: ChannelCurve, x: float, n: int, gauge=None) -> float:
    """``f_N = N√‖α‖((N−1)‖β‖ + √‖α‖)`` in the given or β-free representation."""
    if gauge is None:
        ok, _, h = beta_removable(curve, x)
        if ok:
            ab = alpha_beta(curve, x, h)
            return n * ab.alpha_norm
    ab = alpha_beta(curve, x, gauge)
    sa = np.sqrt(ab.alpha_norm)
    return n * sa * ((n - 1) * ab.beta_norm + sa)


def qfi_state(rho_fn, x: float, dx: float = 1e-4):
    """Finite-difference QFI ``8(1−F(ρ_{x−dx/2}, ρ_{x+dx/2}))/dx²``.

    Returns ``(qfi, status)`` where status is ``"ok"`` or ``"ill-conditioned"``.
    """
    status = "ok"
    if dx < 1e-7:
        warnings.warn("dx below 1e-7: fidelity differences lose precision")
        status = "ill-conditioned"
    f = state_fidelity(rho_fn(x - dx / 2), rho_fn(x + dx / 2), check=False)
    return 8 * (1 - f) / dx ** 2, status


def cj_qfi(curve: ChannelCurve, x: float, dx: float = 1e-4) -> float:
    return qfi_state(curve.choi_at, x, dx)[0]


# --- bounds -------------------------------------------------------------

def state_cloning_lower(rho0, rho1, n: int, m: int) -> float:
    f = state_fidelity(rho0, rho1)
    val = 0.5 * (np.arccos(min(f ** m, 1.0)) - np.arccos(min(f ** n, 1.0)))
    return float(max(val, 0.0))


def _is_unitary_channel(c) -> bool:
    return isinstance(c, KrausChannel) and len(c.kraus) == 1 and c.d_in == c.d_out


def cloning_lower_discrimination(e0, e1, n: int, m: int, discrimination_distance: float | None = None) -> float:
    """``½(D(E0^⊗M, E1^⊗M) − D^(N)(E0, E1))``, clipped at zero.

    For unitary pairs both terms use the closed-form diamond expressions;
    otherwise the target term uses the CJ angle and the N-copy discrimination
    distance must be supplied.
    """
    if n > m:
        raise ValueError("need n <= m")
    if _is_unitary_channel(e0) and _is_unitary_channel(e1):
        u0, u1 = e0.kraus[0], e1.kraus[0]
        target = unitary_discrimination(u0, u1, m)[0]
        disc = unitary_discrimination(u0, u1, n)[0] if discrimination_distance is None else discrimination_distance
    else:
        if discrimination_distance is None:
            raise ValueError("non-unitary pair: supply the N-copy discrimination distance")
        target = float(np.arccos(cj_fidelity(e0, e1) ** m))
        disc = discrimination_distance
    return float(max(0.5 * (target - disc), 0.0))


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-8, max_depth: int = 50) -> float:
    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6 * (fa + 4 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        if depth <= 0 or abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15
        return rec(a, m, fa, flm, fm, left, tol / 2, depth - 1) + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1)

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def metrology_integral(curve: ChannelCurve, a: float, b: float, n: int, tol: float = 1e-8) -> float:
    """``∫_a^b √f_N(E_x) dx`` by adaptive Simpson."""
    lo, hi = curve.domain
    eps = 1e-6
    if a <= lo:
        warnings.warn("shrinking integration interval away from the domain boundary")
        a = lo + eps
    if b >= hi:
        warnings.warn("shrinking integration interval away from the domain boundary")
        b = hi - eps
    return adaptive_simpson(lambda x: np.sqrt(f_n(curve, x, n)), a, b, tol)


def cloning_lower_metrology(curve: ChannelCurve, interval, n: int, m: int) -> float:
    if n > m:
        raise ValueError("need n <= m")
    a, b = interval
    target = float(np.arccos(np.clip(cj_fidelity(curve.kraus_at(a), curve.kraus_at(b)) ** m, 0, 1)))
    integral = metrology_integral(curve, a, b, n)
    return float(max(0.5 * (target - integral), 0.0))


def prop5_linear(curve: ChannelCurve, x: float, lam: float) -> float:
    """Linear-rate bound ``A(4‖α‖ / ((1+λ) QFI(CJ[E_x])))`` in the β-free gauge."""
    ok, _, h = beta_removable(curve, x)
    if not ok:
        raise ValueError("β is not removable: use prop5_quadratic")
    ab = alpha_beta(curve, x, h)
    z = 4 * ab.alpha_norm / ((1 + lam) * cj_qfi(curve, x))
    return a_function(z)


def prop5_quadratic(curve: ChannelCurve, x: float, lam: float) -> float:
    """Quadratic-rate bound ``A(4√‖α‖‖β‖ / ((1+λ) QFI(CJ[E_x])))``."""
    ok, _, _ = beta_removable(curve, x)
    if ok:
        raise ValueError("β is removable: use prop5_linear")
    ab = alpha_beta(curve, x)
    z = 4 * np.sqrt(ab.alpha_norm) * ab.beta_norm / ((1 + lam) * cj_qfi(curve, x))
    return a_function(z)


def unitary_diamond_lower(n: int, m: int) -> float:
    if n > m:
        raise ValueError("need n <= m")
    return float(np.pi / 4 * (1 - n / m))


def pauli_bound(lam: float) -> float:
    return a_function(1 / (1 + lam))


def ad_bound(lam: float) -> float:
    return a_function(2 / (1 + lam))


def pauli_mp_asymptote(lam: float) -> float:
    """Bures angle of the Pauli M&P asymptote ``arccos(exp(−3λ/8))``."""
    return float(np.arccos(np.exp(-3 * lam / 8)))
