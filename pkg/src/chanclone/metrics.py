"""Fidelities, Bures angles and the closed forms used throughout."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .channels import ChoiOperator, KrausChannel, choi_of

DENSITY_TOL = 1e-8


@dataclass(frozen=True)
class DistanceReport:
    fidelity: float
    bures_angle: float
    fvg_lower: float
    fvg_upper: float

    @classmethod
    def from_fidelity(cls, f: float) -> "DistanceReport":
        f = float(np.clip(f, 0.0, 1.0))
        ang = float(np.arccos(f))
        lo, hi = fuchs_van_de_graaf(ang)
        return cls(f, ang, lo, hi)


def _check_density(rho, name: str):
    rho = np.asarray(rho, dtype=complex)
    if abs(np.trace(rho) - 1) > DENSITY_TOL:
        raise ValueError(f"{name} does not have unit trace")
    if not la.is_hermitian(rho, DENSITY_TOL):
        raise ValueError(f"{name} is not Hermitian")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] < -DENSITY_TOL:
        raise ValueError(f"{name} is not PSD")
    return rho


def _support_factor(rho, rel: float = 1e-14) -> np.ndarray:
    # rho = A A^H restricted to the numerical support; dropping round-off
    # eigenvalues keeps their square roots (~1e-8) out of the fidelity
    rho = np.asarray(rho, dtype=complex)
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if w.size and w[0] < -1e-8 * max(1.0, abs(w[-1])):
        raise la.NotPSDError(f"smallest eigenvalue {w[0]:.3e}")
    keep = w > rel * max(abs(w[-1]), 1e-300)
    return v[:, keep] * np.sqrt(w[keep])


def _fidelity_raw(rho, sigma) -> float:
    # ||sqrt(rho) sqrt(sigma)||_1 = ||A^H B||_1 for any rho = A A^H, sigma = B B^H
    a = _support_factor(rho)
    b = _support_factor(sigma)
    if a.shape[1] == 0 or b.shape[1] == 0:
        return 0.0
    sv = np.linalg.svd(a.conj().T @ b, compute_uv=False)
    return float(sv.sum())


def state_fidelity(rho, sigma, check: bool = True) -> float:
    """Uhlmann fidelity ``tr|√ρ√σ|`` (not squared)."""
    if check:
        rho = _check_density(rho, "rho")
        sigma = _check_density(sigma, "sigma")
    return float(np.clip(_fidelity_raw(rho, sigma), 0.0, 1.0))


def choi_fidelity(a, b) -> float:
    """Fidelity between two normalized Choi matrices (arrays, already valid)."""
    return float(np.clip(_fidelity_raw(a, b), 0.0, 1.0))


def cj_fidelity(a, b) -> float:
    """Choi–Jamiołkowski fidelity ``F(CJ[A], CJ[B])``."""
    ca, cb = choi_of(a), choi_of(b)
    if (ca.d_in, ca.d_out) != (cb.d_in, cb.d_out):
        raise ValueError("channels act on different spaces")
    return choi_fidelity(ca.matrix, cb.matrix)


def ad_cj_fidelity(g1, g2):
    """Closed-form CJ fidelity between amplitude-damping channels."""
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    if np.any((g1 < 0) | (g1 > 1) | (g2 < 0) | (g2 > 1)):
        raise ValueError("damping parameters must be in [0, 1]")
    return 0.5 * (1 + np.sqrt(g1 * g2) + np.sqrt((1 - g1) * (1 - g2)))


def pauli_cj_fidelity(p, q) -> float:
    """Bhattacharyya coefficient of two Pauli probability vectors."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("probabilities must be nonnegative")
    return float(np.sum(np.sqrt(p * q)))


def _check_unitary(v):
    v = np.asarray(v, dtype=complex)
    if v.shape[0] != v.shape[1] or not np.allclose(v.conj().T @ v, np.eye(v.shape[0]), atol=1e-9):
        raise ValueError("matrix is not unitary")
    return v


def unitary_theta(v) -> float:
    """Largest angular gap between eigenphases, reduced modulo π into [0, π]."""
    v = _check_unitary(v)
    ph = np.angle(np.linalg.eigvals(v))
    best = 0.0
    for a in ph:
        for b in ph:
            d = abs(a - b) % (2 * np.pi)
            d = min(d, 2 * np.pi - d)  # geodesic gap on the circle, in [0, π]
            best = max(best, d)
    return float(best)


def unitary_discrimination(u0, u1, n: int = 1):
    """Distance and fidelity of ``n`` uses of two unitaries in parallel.

    Returns ``(distance, fidelity, saturated)``; when ``nΘ > π`` the channels are
    perfectly distinguishable and the saturated values ``(π/2, 0)`` are returned.
    """
    u0 = _check_unitary(u0)
    u1 = _check_unitary(u1)
    theta = unitary_theta(u0 @ u1.conj().T)
    x = n * theta
    if x >= np.pi - 1e-15:
        return np.pi / 2, 0.0, x > np.pi + 1e-12
    return x / 2, float(np.cos(x / 2)), False


def fuchs_van_de_graaf(angle: float):
    if not (0.0 <= angle <= np.pi / 2 + 1e-15):
        raise ValueError("angle must lie in [0, π/2]")
    return 1 - np.cos(angle), np.sin(angle)


def bures_angle(f: float) -> float:
    return float(np.arccos(np.clip(f, 0.0, 1.0)))


def distance_report(a, b) -> DistanceReport:
    return DistanceReport.from_fidelity(cj_fidelity(a, b))
