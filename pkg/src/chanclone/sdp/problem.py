"""Block-Hermitian SDP container and its JSON form.

Standard form::

    minimize    c · x
    subject to  A x = b
                X_k ⪰ 0  for every ``psd`` block

where ``x`` stacks the isometric coordinates (see :mod:`.hermitian`) of each
block. ``free`` blocks are Hermitian but unconstrained.

JSON schema (``to_json``)::

    {"blocks": [{"dim": n, "kind": "psd"|"free", "name": str}, ...],
     "constraints": [{"terms": [[block, row, col, re, im], ...], "rhs": b}, ...],
     "objective": {"terms": [[block, row, col, re, im], ...], "constant": c0,
                   "sense": "min"}}

A term list encodes ``Σ Re(conj(a) · X_block[row, col])`` with ``a = re + i·im``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import json

import numpy as np
import scipy.sparse as sp

from . import hermitian as hm

KINDS = ("psd", "free")
STATUSES = ("optimal", "infeasible", "max_iters")


@dataclass
class SdpProblem:
    dims: list
    kinds: list
    A: sp.csr_matrix
    b: np.ndarray
    c: np.ndarray
    constant: float = 0.0
    names: list = field(default_factory=list)

    def __post_init__(self):
        self.dims = [int(d) for d in self.dims]
        self.kinds = list(self.kinds)
        if not self.names:
            self.names = [f"X{k}" for k in range(len(self.dims))]
        self.A = sp.csr_matrix(self.A)
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.validate()

    # layout
    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([d * d for d in self.dims])]).astype(np.int64)

    @property
    def n_vars(self) -> int:
        return int(self.offsets[-1])

    @property
    def n_cons(self) -> int:
        return self.A.shape[0]

    def validate(self):
        if len(self.kinds) != len(self.dims) or len(self.names) != len(self.dims):
            raise ValueError("blocks, kinds and names differ in length")
        for k in self.kinds:
            if k not in KINDS:
                raise ValueError(f"unknown block kind {k!r}")
        n = self.n_vars
        if self.A.shape[1] != n:
            raise ValueError(f"constraint operator has {self.A.shape[1]} columns, blocks need {n}")
        if self.b.size != self.A.shape[0]:
            raise ValueError("rhs length does not match the constraint count")
        if self.c.size != n:
            raise ValueError("objective length does not match the variables")

    def block(self, name):
        return self.names.index(name) if isinstance(name, str) else int(name)

    def split(self, x) -> list:
        off = self.offsets
        return [hm.to_mat(x[off[k]:off[k + 1]], d) for k, d in enumerate(self.dims)]

    def join(self, mats) -> np.ndarray:
        return np.concatenate([hm.to_vec(m) for m in mats])

    def objective(self, x) -> float:
        return float(self.c @ x + self.constant)

    # serialization
    def _terms(self, row_vec: sp.csr_matrix) -> list:
        off = self.offsets
        acc = {}
        for j, v in zip(row_vec.indices, row_vec.data):
            k = int(np.searchsorted(off, j, side="right") - 1)
            n = self.dims[k]
            loc = j - off[k]
            if loc < n:
                key = (k, int(loc), int(loc))
                acc[key] = acc.get(key, 0.0) + complex(v, 0.0)
                continue
            pair = (loc - n) // 2
            iu, ju = hm.layout(n)
            key = (k, int(iu[pair]), int(ju[pair]))
            part = (loc - n) % 2
            add = complex(hm.SQ2 * v, 0.0) if part == 0 else complex(0.0, hm.SQ2 * v)
            acc[key] = acc.get(key, 0.0) + add
        return [[k, r, c, float(a.real), float(a.imag)] for (k, r, c), a in acc.items()]

    def to_dict(self) -> dict:
        cons = [{"terms": self._terms(self.A.getrow(i)), "rhs": float(self.b[i])}
                for i in range(self.n_cons)]
        obj = self._terms(sp.csr_matrix(self.c))
        return {
            "blocks": [{"dim": d, "kind": k, "name": nm}
                       for d, k, nm in zip(self.dims, self.kinds, self.names)],
            "constraints": cons,
            "objective": {"terms": obj, "constant": self.constant, "sense": "min"},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SdpProblem":
        dims = [int(b["dim"]) for b in d["blocks"]]
        kinds = [b.get("kind", "psd") for b in d["blocks"]]
        names = [b.get("name", f"X{k}") for k, b in enumerate(d["blocks"])]
        off = np.concatenate([[0], np.cumsum([n * n for n in dims])]).astype(np.int64)

        def coords(terms):
            cols, vals = [], []
            for blk, r, c, re, im in terms:
                blk, r, c = int(blk), int(r), int(c)
                n = dims[blk]
                if not (0 <= r < n and 0 <= c < n):
                    raise ValueError(f"entry ({r}, {c}) outside block {blk}")
                if r == c:
                    cols.append(off[blk] + r); vals.append(re)
                    continue
                sgn = 1.0
                if r > c:
                    r, c, sgn = c, r, -1.0
                u, v = hm.offdiag_index(n, r, c)
                cols += [off[blk] + u, off[blk] + v]
                vals += [re / hm.SQ2, sgn * im / hm.SQ2]
            return cols, vals

        rows, cols, vals = [], [], []
        for i, con in enumerate(d["constraints"]):
            cc, vv = coords(con["terms"])
            rows += [i] * len(cc); cols += cc; vals += vv
        A = sp.csr_matrix((vals, (rows, cols)), shape=(len(d["constraints"]), off[-1]))
        b = np.array([con["rhs"] for con in d["constraints"]], dtype=float)
        obj = d.get("objective", {"terms": []})
        cc, vv = coords(obj["terms"])
        c = np.zeros(off[-1])
        np.add.at(c, np.asarray(cc, dtype=np.int64), np.asarray(vv, dtype=float))
        sense = obj.get("sense", "min")
        const = float(obj.get("constant", 0.0))
        if sense == "max":
            c, const = -c, -const
        return cls(dims, kinds, A, b, c, const, names)

    @classmethod
    def from_json(cls, s: str) -> "SdpProblem":
        return cls.from_dict(json.loads(s))


@dataclass
class SdpSolution:
    blocks: list
    x: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    status: str
    iterations: int
    dual: np.ndarray | None = None
    history: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


class ProblemBuilder:
    """Incremental assembly of an :class:`SdpProblem` from sparse row groups."""

    def __init__(self):
        self.dims, self.kinds, self.names = [], [], []
        self._rows = []  # (dict block -> sparse coeff matrix, rhs)
        self._obj = {}

    def add_block(self, name: str, dim: int, kind: str = "psd") -> int:
        if name in self.names:
            raise ValueError(f"duplicate block {name!r}")
        self.dims.append(int(dim)); self.kinds.append(kind); self.names.append(name)
        return len(self.dims) - 1

    def add_constraints(self, terms: dict, rhs):
        """Add rows ``Σ_blocks terms[blk] @ coords(blk) = rhs``."""
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        for blk, m in terms.items():
            if m.shape[0] != rhs.size:
                raise ValueError("row count mismatch within a constraint group")
        self._rows.append(({self.names.index(k) if isinstance(k, str) else k: sp.csr_matrix(m)
                            for k, m in terms.items()}, rhs))

    def add_objective(self, blk, vec):
        k = self.names.index(blk) if isinstance(blk, str) else blk
        self._obj[k] = self._obj.get(k, 0) + np.asarray(vec, dtype=float)

    def build(self) -> SdpProblem:
        off = np.concatenate([[0], np.cumsum([d * d for d in self.dims])]).astype(np.int64)
        mats, rhs = [], []
        for terms, b in self._rows:
            parts = []
            for k in range(len(self.dims)):
                n2 = self.dims[k] ** 2
                parts.append(terms[k] if k in terms else sp.csr_matrix((b.size, n2)))
            mats.append(sp.hstack(parts, format="csr"))
            rhs.append(b)
        A = sp.vstack(mats, format="csr") if mats else sp.csr_matrix((0, off[-1]))
        c = np.zeros(off[-1])
        for k, v in self._obj.items():
            c[off[k]:off[k + 1]] += v
        return SdpProblem(self.dims, self.kinds, A, np.concatenate(rhs) if rhs else np.zeros(0),
                          c, 0.0, self.names)
