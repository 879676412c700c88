"""Dense complex linear algebra on tensor-product spaces.

All routines follow a single big-endian convention: for ``dims = [d0, d1, ...]``
factor 0 is the slowest-varying index of the flattened matrix.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

HERM_TOL = 1e-10
PSD_TOL = 1e-10


class DimensionError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


class NotPSDError(ValueError):
    pass


def _as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {m.shape}")
    return m


def _check_dims(m: np.ndarray, dims: Sequence[int], subset: Iterable[int]) -> tuple:
    dims = tuple(int(d) for d in dims)
    if any(d <= 0 for d in dims):
        raise DimensionError("factor dimensions must be positive")
    n = int(np.prod(dims))
    if m.shape != (n, n):
        raise DimensionError(f"matrix shape {m.shape} does not match dims {dims}")
    subset = sorted(set(int(i) for i in subset))
    if any(i < 0 or i >= len(dims) for i in subset):
        raise DimensionError(f"factor indices {subset} out of range for {len(dims)} factors")
    return dims, subset


def kron(*ops) -> np.ndarray:
    """Kronecker product of one or more matrices (left factor slowest)."""
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, _as_matrix(op))
    return out


def partial_trace(m, dims: Sequence[int], traced: Iterable[int]) -> np.ndarray:
    """Trace out the factors listed in ``traced``.

    Parameters
    ----------
    m : (D, D) array
    dims : sequence of int
        Local dimensions with ``prod(dims) == D``.
    traced : iterable of int
        Factor indices to remove.

    Returns
    -------
    ndarray of dimension ``prod(dims[k] for k kept)``.
    """
    m = _as_matrix(m)
    dims, traced = _check_dims(m, dims, traced)
    k = len(dims)
    t = m.reshape(dims + dims)
    # trace highest index first so remaining axis labels stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        nleft = k - count
        t = np.trace(t, axis1=i, axis2=i + nleft)
    kept = [dims[i] for i in range(k) if i not in traced]
    n = int(np.prod(kept)) if kept else 1
    return t.reshape(n, n)


def partial_transpose(m, dims: Sequence[int], transposed: Iterable[int]) -> np.ndarray:
    """Transpose only the listed tensor factors."""
    m = _as_matrix(m)
    dims, transposed = _check_dims(m, dims, transposed)
    k = len(dims)
    t = m.reshape(dims + dims)
    perm = list(range(2 * k))
    for i in transposed:
        perm[i], perm[i + k] = perm[i + k], perm[i]
    return t.transpose(perm).reshape(m.shape)


def embed_identity(m, dims: Sequence[int], positions: Iterable[int]) -> np.ndarray:
    """Insert maximally mixed factors ``I/d`` at ``positions`` of the full ``dims``.

    ``m`` acts on the factors not in ``positions`` (in their original order).
    """
    dims = tuple(int(d) for d in dims)
    positions = sorted(set(positions))
    kept = [i for i in range(len(dims)) if i not in positions]
    kept_dims = [dims[i] for i in kept]
    m = _as_matrix(m)
    nk = int(np.prod(kept_dims)) if kept_dims else 1
    if m.shape != (nk, nk):
        raise DimensionError("reduced matrix does not match kept factors")
    dr = int(np.prod([dims[i] for i in positions])) if positions else 1
    full = np.kron(m, np.eye(dr) / dr)
    # current factor order: kept..., positions...; permute back
    order = kept + positions
    cur_dims = [dims[i] for i in order]
    k = len(dims)
    t = full.reshape(cur_dims + cur_dims)
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [k + j for j in inv])
    n = int(np.prod(dims))
    return t.reshape(n, n)


def trace_and_replace(x, dims: Sequence[int], subset: Iterable[int]) -> np.ndarray:
    """Trace out ``subset`` and put back the maximally mixed state there."""
    x = _as_matrix(x)
    dims, subset = _check_dims(x, dims, subset)
    if not subset:
        return x.copy()
    return embed_identity(partial_trace(x, dims, subset), dims, subset)


def is_hermitian(h, tol: float = HERM_TOL) -> bool:
    h = np.asarray(h)
    return h.shape[0] == h.shape[1] and np.allclose(h, h.conj().T, rtol=0, atol=tol)


def herm_eig(h, tol: float = HERM_TOL):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(w, v)`` with ``v @ diag(w) @ v^H == h``.
    """
    h = _as_matrix(h)
    if not is_hermitian(h, tol):
        raise NotHermitianError("matrix is not Hermitian")
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return w[::-1], v[:, ::-1]


def jacobi_eig(h, tol: float = 1e-13, max_sweeps: int = 100):
    """Cyclic Jacobi eigensolver for complex Hermitian matrices.

    Dependency-free reference implementation, used to cross-check
    :func:`herm_eig`. Stops once the off-diagonal Frobenius norm drops
    below ``tol * ||h||_F``.
    """
    a = _as_matrix(h).copy()
    if not is_hermitian(a):
        raise NotHermitianError("matrix is not Hermitian")
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.linalg.norm(a) ** 2 - np.sum(np.abs(np.diag(a)) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * scale:
                    a[p, q] = a[q, p] = 0.0
                    continue
                # reduce to a real symmetric 2x2 problem by a phase
                phase = apq / abs(apq)
                app, aqq = a[p, p].real, a[q, q].real
                tau = (aqq - app) / (2 * abs(apq))
                if tau == 0:
                    t = 1.0
                elif abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = np.sign(tau) / (abs(tau) + np.sqrt(1 + tau * tau))
                c = 1 / np.sqrt(1 + t * t)
                s = t * c
                # rotation J acting on columns p,q
                jpp, jpq = c, s * phase
                jqp, jqq = -s * np.conj(phase), c
                cp_, cq_ = a[:, p].copy(), a[:, q].copy()
                a[:, p] = cp_ * jpp + cq_ * jqp
                a[:, q] = cp_ * jpq + cq_ * jqq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = np.conj(jpp) * rp + np.conj(jqp) * rq
                a[q, :] = np.conj(jpq) * rp + np.conj(jqq) * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = vp * jpp + vq * jqp
                v[:, q] = vp * jpq + vq * jqq
    w = np.diag(a).real
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def psd_sqrt(h, tol: float = PSD_TOL) -> np.ndarray:
    """Square root of a positive semidefinite matrix.

    Eigenvalues in ``[-tol, 0)`` are clipped to zero; anything more
    negative raises :class:`NotPSDError`.
    """
    w, v = herm_eig(h, tol=max(tol, HERM_TOL) * max(1.0, np.abs(h).max()))
    if w.size and w[-1] < -tol:
        raise NotPSDError(f"smallest eigenvalue {w[-1]:.3e} below -{tol:g}")
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def psd_project(h) -> np.ndarray:
    """Frobenius-nearest PSD matrix (negative eigenvalues set to zero)."""
    h = _as_matrix(h)
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    w = np.clip(w, 0.0, None)
    return (v * w) @ v.conj().T


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def dag(m) -> np.ndarray:
    return np.asarray(m).conj().T


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a Ginibre ensemble."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar random unitary via QR with phase fix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (g + g.conj().T)


PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
