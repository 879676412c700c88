"""Isometric real coordinates for Hermitian matrices.

An ``n×n`` Hermitian ``X`` maps to ``n²`` reals: the diagonal, then for every
``i < j`` the pair ``(√2 Re X_ij, √2 Im X_ij)``. The map is an isometry between
the Frobenius and Euclidean inner products.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

SQ2 = np.sqrt(2.0)


@lru_cache(maxsize=64)
def layout(n: int):
    """Index arrays ``(iu, ju)`` of the strict upper triangle, in coordinate order."""
    iu, ju = np.triu_indices(n, 1)
    return iu, ju


def dim(n: int) -> int:
    return n * n


def to_vec(x) -> np.ndarray:
    x = np.asarray(x)
    n = x.shape[0]
    iu, ju = layout(n)
    up = x[iu, ju]
    out = np.empty(n * n)
    out[:n] = np.real(np.diag(x))
    out[n::2] = SQ2 * up.real
    out[n + 1::2] = SQ2 * up.imag
    return out


def to_mat(v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    iu, ju = layout(n)
    x = np.zeros((n, n), dtype=complex)
    x[np.arange(n), np.arange(n)] = v[:n]
    up = (v[n::2] + 1j * v[n + 1::2]) / SQ2
    x[iu, ju] = up
    x[ju, iu] = np.conj(up)
    return x


@lru_cache(maxsize=64)
def _pair_index(n: int) -> np.ndarray:
    iu, ju = layout(n)
    idx = -np.ones((n, n), dtype=np.int64)
    idx[iu, ju] = n + 2 * np.arange(iu.size)
    return idx


def offdiag_index(n: int, i: int, j: int) -> tuple:
    """Coordinates ``(u, v)`` of the entry ``(i, j)``, ``i < j``."""
    k = int(_pair_index(n)[i, j])
    return k, k + 1


def entry_weights(n: int, r, s):
    """Express entries ``X[r, s]`` through coordinates.

    Returns two parallel lists of ``(coord, complex weight)`` arrays of equal
    length ``len(r)``: each entry is ``w1 x[c1] + w2 x[c2]`` (``w2 = 0`` on the diagonal).
    """
    r = np.asarray(r, dtype=np.int64)
    s = np.asarray(s, dtype=np.int64)
    pair = _pair_index(n)
    c1 = np.empty(r.size, dtype=np.int64)
    c2 = np.empty(r.size, dtype=np.int64)
    w1 = np.empty(r.size, dtype=complex)
    w2 = np.empty(r.size, dtype=complex)
    d = r == s
    c1[d] = r[d]
    c2[d] = r[d]
    w1[d] = 1.0
    w2[d] = 0.0
    up = r < s
    k = pair[r[up], s[up]]
    c1[up], c2[up] = k, k + 1
    w1[up], w2[up] = 1 / SQ2, 1j / SQ2
    lo = r > s
    k = pair[s[lo], r[lo]]
    c1[lo], c2[lo] = k, k + 1
    w1[lo], w2[lo] = 1 / SQ2, -1j / SQ2
    return c1, w1, c2, w2


def entrywise_map(n_out: int, n_in: int, p, q, r, s, coef) -> sp.csr_matrix:
    """Real coordinate matrix of ``Y[p, q] = Σ coef · X[r, s]``.

    The listed terms must define a Hermiticity-preserving map; only output
    entries with ``p <= q`` are used.
    """
    p = np.asarray(p, dtype=np.int64)
    q = np.asarray(q, dtype=np.int64)
    coef = np.asarray(coef, dtype=complex)
    keep = p <= q
    p, q, coef = p[keep], q[keep], coef[keep]
    r = np.asarray(r, dtype=np.int64)[keep]
    s = np.asarray(s, dtype=np.int64)[keep]
    c1, w1, c2, w2 = entry_weights(n_in, r, s)
    pair = _pair_index(n_out)
    rows, cols, vals = [], [], []
    diag = p == q
    # diagonal outputs take the real part
    for c, w in ((c1, w1), (c2, w2)):
        z = coef * w
        rows.append(p[diag]); cols.append(c[diag]); vals.append(z[diag].real)
        k = pair[p[~diag], q[~diag]]
        rows.append(k); cols.append(c[~diag]); vals.append(SQ2 * z[~diag].real)
        rows.append(k + 1); cols.append(c[~diag]); vals.append(SQ2 * z[~diag].imag)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    m = sp.csr_matrix((vals, (rows, cols)), shape=(n_out * n_out, n_in * n_in))
    m.eliminate_zeros()
    return m


def embed_block(n_small: int, n_big: int, offset_r: int, offset_c: int) -> sp.csr_matrix:
    """Coordinates of the sub-block ``X[off_r:off_r+n, off_c:off_c+n]`` of a big matrix.

    Returns the ``(n_small², n_big²)`` selection map; intended for principal
    blocks (``offset_r == offset_c``).
    """
    if offset_r != offset_c:
        raise ValueError("only principal sub-blocks have Hermitian coordinates")
    idx = np.arange(n_small) + offset_r
    p, q = np.meshgrid(np.arange(n_small), np.arange(n_small), indexing="ij")
    p, q = p.ravel(), q.ravel()
    return entrywise_map(n_small, n_big, p, q, idx[p], idx[q], np.ones(p.size))
