"""Reference first-order conic solver (Douglas–Rachford splitting).

Iteration, with step ``σ`` and relaxation ``α``::

    x = Π_aff(z − σc)          # affine projection, prefactored normal equations
    y = Π_K(2x − z)            # blockwise eigenvalue clipping
    z = z + α (y − x)

At a fixed point ``x = y`` is primal optimal, ``μ = −w/σ`` (``w`` the
normal-equation multiplier) is dual optimal and ``S = (y − 2x + z)/σ`` is
the dual slack.
"""
from __future__ import annotations

from dataclasses import dataclass
import logging
import time

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import hermitian as hm
from .problem import SdpProblem, SdpSolution

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-7
    max_iters: int = 200_000
    alpha: float = 1.5
    sigma: float | None = None
    adapt_every: int = 50
    check_every: int = 10
    infeas_window: int = 2000
    embedding: str = "complex"  # "complex" or "real" eigen-solves
    anderson: int = 10  # memory of the Anderson extrapolation, 0 disables it
    safeguard: float = 2.0
    time_limit: float | None = None
    verbose: bool = False


class _AffineProjector:
    """Projection onto ``{x : A x = b}`` with rows equilibrated once."""

    def __init__(self, A: sp.csr_matrix, b: np.ndarray):
        norms = np.sqrt(np.asarray(A.multiply(A).sum(axis=1)).ravel())
        if np.any(norms == 0):
            bad = np.flatnonzero(norms == 0)
            if np.any(np.abs(b[bad]) > 0):
                raise ValueError("zero constraint row with nonzero rhs")
            keep = norms > 0
            A, b, norms = A[keep], b[keep], norms[keep]
        else:
            keep = np.ones(norms.size, dtype=bool)
        self.keep = keep
        d = sp.diags(1.0 / norms)
        self.A = (d @ A).tocsr()
        self.At = self.A.T.tocsr()
        self.b = b / norms
        self.scale = norms
        gram = (self.A @ self.At).tocsc()
        self._dense = None
        try:
            self._lu = spla.splu(gram, permc_spec="COLAMD")
            test = self._lu.solve(np.ones(gram.shape[0]))
            if not np.all(np.isfinite(test)):
                raise RuntimeError("singular")
        except RuntimeError:
            log.warning("normal equations singular, falling back to a dense pseudo-inverse")
            self._lu = None
            self._dense = np.linalg.pinv(gram.toarray(), hermitian=True)

    def unscale_dual(self, mu):
        out = np.zeros(self.keep.size)
        out[self.keep] = mu / self.scale
        return out

    def solve(self, r):
        if self._lu is not None:
            return self._lu.solve(r)
        return self._dense @ r

    def __call__(self, v):
        w = self.solve(self.A @ v - self.b)
        return v - self.At @ w, w


def _eigh(m):
    try:
        return scipy.linalg.eigh(m, check_finite=False, driver="evd")
    except np.linalg.LinAlgError:
        # divide-and-conquer occasionally fails to converge; QR iteration is sturdier
        if not np.all(np.isfinite(m)):
            raise
        return scipy.linalg.eigh(m, driver="ev")


class _ConeProjector:
    def __init__(self, problem: SdpProblem, embedding: str):
        if embedding not in ("complex", "real"):
            raise ValueError("embedding must be 'complex' or 'real'")
        self.embedding = embedding
        self.off = problem.offsets
        self.blocks = [(k, d) for k, (d, kind) in enumerate(zip(problem.dims, problem.kinds))
                       if kind == "psd"]

    def _proj_mat(self, m):
        n = m.shape[0]
        if n == 1:
            return np.maximum(m.real, 0).astype(complex)
        if self.embedding == "complex":
            w, v = _eigh(m)
            pos = w > 0
            vp = v[:, pos]
            return (vp * w[pos]) @ vp.conj().T
        r = np.block([[m.real, -m.imag], [m.imag, m.real]])
        w, v = _eigh(r)
        pos = w > 0
        vp = v[:, pos]
        rp = (vp * w[pos]) @ vp.T
        a = 0.5 * (rp[:n, :n] + rp[n:, n:])
        bb = 0.5 * (rp[n:, :n] - rp[:n, n:])
        return a + 1j * bb

    def __call__(self, v):
        out = v.copy()
        for k, d in self.blocks:
            sl = slice(self.off[k], self.off[k + 1])
            if d == 1:
                out[sl] = np.maximum(v[sl], 0)
                continue
            out[sl] = hm.to_vec(self._proj_mat(hm.to_mat(v[sl], d)))
        return out


class _Anderson:
    """Type-II Anderson extrapolation of the fixed-point map ``z ↦ z + g(z)``."""

    def __init__(self, memory: int, reg: float = 1e-10):
        self.memory = memory
        self.reg = reg
        self.reset()

    def reset(self):
        self.dz, self.dg = [], []
        self.z_prev = self.g_prev = None

    def step(self, z, g):
        if self.z_prev is not None:
            self.dz.append(z - self.z_prev)
            self.dg.append(g - self.g_prev)
            if len(self.dz) > self.memory:
                self.dz.pop(0)
                self.dg.pop(0)
        self.z_prev, self.g_prev = z, g
        if not self.dz:
            return None
        G = np.array(self.dg).T
        Z = np.array(self.dz).T
        gram = G.T @ G
        gram += self.reg * (np.trace(gram) + 1e-300) * np.eye(gram.shape[0])
        try:
            gamma = np.linalg.solve(gram, G.T @ g)
        except np.linalg.LinAlgError:
            self.reset()
            return None
        return z + g - (Z + G) @ gamma


def solve(problem: SdpProblem, config: SolverConfig | None = None, warm_start=None,
          **overrides) -> SdpSolution:
    """Solve ``min c·x, A x = b, x ∈ K`` by Douglas–Rachford splitting."""
    cfg = config or SolverConfig()
    if overrides:
        cfg = SolverConfig(**{**cfg.__dict__, **overrides})
    problem.validate()
    t0 = time.time()
    aff = _AffineProjector(problem.A, problem.b)
    cone = _ConeProjector(problem, cfg.embedding)
    c = problem.c
    nb = 1.0 + np.linalg.norm(aff.b)
    nc = 1.0 + np.linalg.norm(c)
    sigma = cfg.sigma if cfg.sigma is not None else 1.0
    z = np.zeros(problem.n_vars) if warm_start is None else np.asarray(warm_start, dtype=float).copy()

    hist = []
    status = "max_iters"
    rp = rd = gap = np.inf
    x = y = z
    w = np.zeros(aff.b.size)
    g = np.zeros_like(z)
    dz_anchor = None
    last_sigma_change = 0
    aa = _Anderson(cfg.anderson) if cfg.anderson else None
    fallback = None  # plain DR step from the last accepted point
    g_ref = np.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        x, w = aff(z - sigma * c)
        y = cone(2 * x - z)
        g = cfg.alpha * (y - x)
        gn = np.linalg.norm(g)
        if aa is not None and fallback is not None and gn > cfg.safeguard * g_ref:
            # extrapolated point got worse: return to the plain step
            z = fallback
            fallback = None
            aa.reset()
            continue
        g_ref = gn
        tz = z + g
        if aa is not None:
            z_new = aa.step(z, g)
            fallback = tz if z_new is not None else None
            z = tz if z_new is None else z_new
        else:
            z = tz

        if it % cfg.check_every == 0 or it == cfg.max_iters:
            mu = -w / sigma
            rp = np.linalg.norm(aff.A @ y - aff.b) / nb
            rd = np.linalg.norm(x - y) / sigma / nc
            pobj = float(c @ x)
            dobj = float(aff.b @ mu)
            gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
            if cfg.verbose and it % (cfg.check_every * 100) == 0:
                log.info("it %d rp %.2e rd %.2e gap %.2e sigma %.3g", it, rp, rd, gap, sigma)
            hist.append((it, rp, rd, gap, sigma))
            if max(rp, rd, gap) < cfg.tol:
                status = "optimal"
                break
            # residual balancing of the step
            if cfg.adapt_every and it % cfg.adapt_every == 0:
                dual_side = max(rd, gap)
                fac = 1.0
                if rp > 5 * dual_side:
                    fac = 1 / 1.5
                elif dual_side > 5 * rp:
                    fac = 1.5
                if fac != 1.0 and 1e-6 < sigma * fac < 1e6:
                    z = y + fac * (tz - y)
                    sigma *= fac
                    last_sigma_change = it
                    dz_anchor = None
                    fallback = None
                    g_ref = np.inf
                    if aa is not None:
                        aa.reset()
            # a nonvanishing constant increment of z signals infeasibility
            if it - last_sigma_change >= cfg.infeas_window and it % cfg.infeas_window == 0:
                if dz_anchor is not None and gn > 1e-6 and rp > 1e-4:
                    drift = np.linalg.norm(g - dz_anchor) / gn
                    if drift < 1e-5:
                        status = "infeasible"
                        break
                dz_anchor = g.copy()
            if cfg.time_limit is not None and time.time() - t0 > cfg.time_limit:
                break
    mu = -w / sigma
    return SdpSolution(
        blocks=problem.split(y),
        x=y,
        objective=problem.objective(x),
        primal_residual=float(rp),
        dual_residual=float(rd),
        gap=float(gap),
        status=status,
        iterations=it,
        dual=aff.unscale_dual(mu),
        history=hist,
    )


def real_embedding(problem: SdpProblem):
    """Equivalent problem over real symmetric blocks ``[[Re X, −Im X], [Im X, Re X]]``.

    Returns ``(embedded, extract)`` where ``extract(solution)`` maps back to
    the original coordinates. Imaginary coordinates of the embedded blocks and
    the block structure are pinned by extra equality rows.
    """
    maps, extra_rows = [], []
    new_dims = [2 * d for d in problem.dims]
    noff = np.concatenate([[0], np.cumsum([d * d for d in new_dims])]).astype(np.int64)
    n_new = int(noff[-1])
    cols_blocks = []
    for k, n in enumerate(problem.dims):
        big = 2 * n
        p, q = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        p, q = p.ravel(), q.ravel()
        # X[p, q] = R[p, q] + i R[n+p, q]
        pp = np.concatenate([p, p])
        qq = np.concatenate([q, q])
        rr = np.concatenate([p, n + p])
        ss = np.concatenate([q, q])
        coef = np.concatenate([np.ones(p.size), 1j * np.ones(p.size)])
        m = hm.entrywise_map(n, big, pp, qq, rr, ss, coef)
        maps.append(m)
        # structure rows
        rows = []
        iu, ju = hm.layout(big)
        im_idx = big + 2 * np.arange(iu.size) + 1
        rows.append(sp.csr_matrix((np.ones(im_idx.size), (np.arange(im_idx.size), im_idx)),
                                  shape=(im_idx.size, big * big)))
        pu, qu = np.triu_indices(n)
        a11 = hm.entrywise_map(n, big, pu, qu, pu, qu, np.ones(pu.size))
        a22 = hm.entrywise_map(n, big, pu, qu, n + pu, n + qu, np.ones(pu.size))
        sel = _real_rows(n, pu, qu)
        rows.append((a11 - a22)[sel])
        # R[n+p, q] + R[p, n+q] = 0 for all p, q, read as real parts
        b1 = _real_entry_rows(big, n + p, q)
        b2 = _real_entry_rows(big, p, n + q)
        rows.append(b1 + b2)
        blockrows = sp.vstack(rows, format="csr")
        # drop duplicated rows (p, q) vs (q, p) of the antisymmetry family
        blockrows = _unique_rows(blockrows)
        cols_blocks.append(blockrows)
    big_map = sp.block_diag(maps, format="csr")  # old coords <- new coords
    A_new = problem.A @ big_map
    c_new = big_map.T @ problem.c
    struct = [sp.hstack([sp.csr_matrix((r.shape[0], noff[j])), r,
                         sp.csr_matrix((r.shape[0], n_new - noff[j + 1]))], format="csr")
              for j, r in enumerate(cols_blocks)]
    A_all = sp.vstack([A_new] + struct, format="csr")
    b_all = np.concatenate([problem.b, np.zeros(sum(s.shape[0] for s in struct))])
    emb = SdpProblem(new_dims, problem.kinds, A_all, b_all, np.asarray(c_new).ravel(),
                     problem.constant, [f"{n}_re" for n in problem.names])

    def extract(sol: SdpSolution) -> np.ndarray:
        return big_map @ sol.x

    return emb, extract


def _real_rows(n, pu, qu):
    # in the n×n coordinate vector, keep the diagonal and the real parts
    pair = hm._pair_index(n)
    idx = np.where(pu == qu, pu, pair[pu, qu])
    return np.unique(idx)


def _real_entry_rows(big, r, s):
    c1, w1, c2, w2 = hm.entry_weights(big, r, s)
    rows = np.arange(r.size)
    m = sp.csr_matrix((w1.real, (rows, c1)), shape=(r.size, big * big))
    m = m + sp.csr_matrix((w2.real, (rows, c2)), shape=(r.size, big * big))
    return m


def _unique_rows(m: sp.csr_matrix) -> sp.csr_matrix:
    d = m.toarray()
    nz = np.abs(d).sum(axis=1) > 0
    d = d[nz]
    # rows equal up to sign are duplicates
    sign = np.sign(d[np.arange(d.shape[0]), np.argmax(np.abs(d) > 0, axis=1)])
    d = d * sign[:, None]
    _, idx = np.unique(np.round(d, 12), axis=0, return_index=True)
    return sp.csr_matrix(d[np.sort(idx)])
