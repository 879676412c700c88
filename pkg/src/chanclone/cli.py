"""Command-line front end.

Subcommands emit CSV or JSON data files::

    chanclone table1              # worst-case SDP table
    chanclone bounds              # A, Ã, unitary and Pauli M&P curves on a z grid
    chanclone ad-clone            # dummy / E&P / coherent sweep over M for AD channels
    chanclone protocol ...        # one protocol evaluation
    chanclone sdp ...             # one worst-case SDP, process Choi dumped as JSON

Exit codes: 0 success, 2 bad flags, 3 solver non-convergence, 4 invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import bounds as bd
from . import channels as ch
from . import protocols as pr

EXIT_OK, EXIT_FLAGS, EXIT_SOLVER, EXIT_INVARIANT = 0, 2, 3, 4

# (channel, P, interval, H, thresholds)
TABLE1_ROWS = (
    ("ad", "All", (0.0, 1.0), 2, (1.0,)),
    ("ad", "All", (0.01, 0.96), 21, (0.92, 0.93, 0.94)),
    ("ad", "M&P", (0.05, 0.966), 21, (0.92, 0.93)),
    ("bitflip", "All", (0.0, 1.0), 21, (0.92, 0.93)),
)

FAMILIES = {"ad": ch.amplitude_damping, "bitflip": ch.bit_flip}


class CliError(Exception):
    def __init__(self, msg, code=EXIT_FLAGS):
        super().__init__(msg)
        self.code = code


@dataclass(frozen=True)
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)
    out: str | None = None
    fmt: str = "csv"
    seed: int = 0
    threads: int = 1

    def digest(self) -> str:
        # output path and worker count never change the data
        blob = json.dumps({"command": self.command, "options": self.options, "fmt": self.fmt,
                           "seed": self.seed}, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def header(self) -> str:
        return f"# chanclone {self.command} version={__version__} config={self.digest()}"


# --- formatting ---------------------------------------------------------------

def fmt_num(x) -> str:
    if x is None:
        return "--"
    if isinstance(x, (bool, np.bool_)):
        return "yes" if x else "no"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            return "nan"
        return f"{float(x):.12g}"
    return str(x)


def render_csv(cfg: RunConfig, header, rows) -> str:
    buf = io.StringIO()
    buf.write(cfg.header() + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt_num(v) for v in r])
    return buf.getvalue()


def _round_json(obj):
    if isinstance(obj, dict):
        return {k: _round_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_json(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.12g}") if np.isfinite(obj) else None
    return obj


def render_json(cfg: RunConfig, payload: dict) -> str:
    meta = {"command": cfg.command, "version": __version__, "config": cfg.digest()}
    return json.dumps({"meta": meta, **_round_json(payload)}, indent=1, sort_keys=True) + "\n"


def emit(cfg: RunConfig, text: str):
    if cfg.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", encoding="utf-8", newline="") as f:
            f.write(text)


def _table(cfg: RunConfig, header, rows, extra: dict | None = None) -> str:
    if cfg.fmt == "json":
        recs = [dict(zip(header, r)) for r in rows]
        return render_json(cfg, {**(extra or {}), "rows": recs})
    return render_csv(cfg, header, rows)


def pmap(fn, items, threads: int):
    """Ordered map, fanned out to worker processes when ``threads > 1``."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, items))


# --- argument helpers ---------------------------------------------------------------

def parse_interval(text: str):
    try:
        a, b = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise CliError(f"bad interval {text!r}, expected a:b") from exc
    if not (0 <= a < b <= 1) and not (a == b and 0 <= a <= 1):
        raise CliError(f"interval {text!r} must satisfy 0 <= a < b <= 1")
    return a, b


def parse_int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError as exc:
        raise CliError(f"bad integer list {text!r}") from exc


def resolve_threads(flag: int | None) -> int:
    env = os.environ.get("CHANCLONE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise CliError(f"CHANCLONE_THREADS={env!r} is not an integer") from exc
    if flag is not None:
        if flag < 1:
            raise CliError("--threads must be >= 1")
        return flag
    return os.cpu_count() or 1


def _solver_cfg(opts):
    from .sdp.solver import SolverConfig
    return SolverConfig(tol=opts.get("tol", 1e-7), max_iters=opts.get("max_iters", 200000))


# --- table1 -----------------------------------------------------------------------

def run_table1_group(job):
    """Solve one (channel, P, interval, H) group once and answer every threshold."""
    from .sdp.fidelity import evaluate_process, worst_case_sdp
    (chan, kind_p, interval, h, xs), opts = job
    make = FAMILIES[chan]
    net = [make(g) for g in np.linspace(interval[0], interval[1], h)]
    ev = [make(g) for g in np.linspace(0, 1, opts["eval_points"])]
    base = {"channel": chan, "P": kind_p, "interval": f"[{interval[0]:g}, {interval[1]:g}]", "H": h}
    try:
        res = worst_case_sdp(net, 1, 2, "parallel", ppt=(kind_p == "M&P"), solver=_solver_cfg(opts))
    except Exception as exc:  # solver failure: mark the rows and keep going
        return [dict(base, x=x, soln=None, F_CJ=None, avg_F_CJ=None, t_star=None,
                     status=f"error: {exc}") for x in xs]
    if res.process is None:
        return [dict(base, x=x, soln=False, F_CJ=None, avg_F_CJ=None, t_star=None,
                     status=res.status) for x in xs]
    fmin, favg, _ = evaluate_process(res.process, ev, 2)
    best = max(res.t_star, res.info.get("objective", res.t_star))
    status = res.status if res.info.get("valid", False) else "error: invalid process"
    if res.status != "optimal":
        status = "error: " + res.status
    out = []
    for x in xs:
        ok = bool(best >= x - 1e-5)
        out.append(dict(base, x=x, soln=ok, F_CJ=fmin if ok else None,
                        avg_F_CJ=favg if ok else None, t_star=res.t_star, status=status))
    return out


TABLE1_HEADER = ("channel", "P", "interval", "H", "x", "soln", "F_CJ", "avg_F_CJ", "t_star", "status")


def cmd_table1(cfg: RunConfig) -> int:
    o = cfg.options
    if o.get("net") is not None or o.get("interval") is not None:
        chan = o.get("channel") or "ad"
        if chan not in FAMILIES:
            raise CliError("table1 supports --channel ad|bitflip")
        interval = parse_interval(o.get("interval") or "0:1")
        h = o.get("net") or 21
        if h < 1:
            raise CliError("--net must be >= 1")
        xs = tuple(o.get("x") or (0.92,))
        groups = [(chan, "M&P" if o.get("ppt") else "All", interval, h, xs)]
    else:
        groups = list(TABLE1_ROWS)
    jobs = [(g, o) for g in groups]
    rows = [r for grp in pmap(run_table1_group, jobs, cfg.threads) for r in grp]
    emit(cfg, _table(cfg, TABLE1_HEADER, [[r[k] for k in TABLE1_HEADER] for r in rows]))
    return EXIT_OK


# --- bounds -----------------------------------------------------------------------

BOUNDS_HEADER = ("z", "A", "A_tilde", "unitary", "pauli_mp")


def bounds_rows(points: int = 200):
    rows = []
    for z in np.linspace(0, 1, points):
        a = bd.a_function(z)
        at = np.pi / 4 if z == 0 else bd.a_tilde(z)
        # z = 1/(1+λ)
        pm = np.pi / 2 if z == 0 else bd.pauli_mp_asymptote((1 - z) / z)
        rows.append((float(z), a, at, np.pi / 4 * (1 - z), pm))
    return rows


def cmd_bounds(cfg: RunConfig) -> int:
    pts = cfg.options.get("points", 200)
    if pts < 2:
        raise CliError("--points must be >= 2")
    emit(cfg, _table(cfg, BOUNDS_HEADER, bounds_rows(pts)))
    return EXIT_OK


# --- ad-clone ------------------------------------------------------------------------

def ad_clone_row(job):
    n, m, seed, restarts, points = job
    net = pr.default_net("ad", points)
    dummy = pr.ad_dummy_fidelity(n, m)
    ep = pr.optimize_estimator("ad", "ep", net, n, m, pr.natural_ad_estimator(n, "ep"),
                               seed=seed, restarts=restarts)
    co = pr.optimize_estimator("ad", "coherent", net, n, m, pr.natural_ad_estimator(n, "coherent"),
                               seed=seed, restarts=restarts)
    return (n, m, dummy, pr.ad_ep_fidelity(net, n, m, ep).worst_case_fidelity,
            pr.ad_coherent_fidelity(net, n, m, co).worst_case_fidelity)


AD_CLONE_HEADER = ("N", "M", "dummy", "mp", "coherent")


def cmd_ad_clone(cfg: RunConfig) -> int:
    o = cfg.options
    ns = parse_int_list(o.get("ns") or "1,5")
    m_max = o.get("m_max", 20)
    if any(n < 1 for n in ns) or m_max < max(ns):
        raise CliError("need N >= 1 and --m-max >= max N")
    jobs = [(n, m, cfg.seed, o.get("restarts", 10), o.get("points", 101))
            for n in ns for m in range(n, m_max + 1)]
    rows = pmap(ad_clone_row, jobs, cfg.threads)
    emit(cfg, _table(cfg, AD_CLONE_HEADER, rows))
    return EXIT_OK


# --- protocol ------------------------------------------------------------------------

def _protocol_result(o, seed):
    chan, mode, n, m = o.get("channel") or "ad", o.get("mode"), o["n"], o["m"]
    if n < 1 or m < n:
        raise CliError("need 1 <= N <= M")
    points = o.get("points", 101)
    est_vals = json.loads(o["estimator"]) if o.get("estimator") else None
    if chan == "ad":
        mode = mode or "ep"
        net = pr.default_net("ad", points)
        if mode == "dummy":
            x, base, f = pr.dummy_fidelity("ad", net, n, m)
            return pr.ProtocolResult(f, [], None, n, m, {"dummy": x, "base": base})
        if mode not in ("ep", "coherent"):
            raise CliError("ad protocols: --mode ep|coherent|dummy")
        est = pr.Estimator.from_array(est_vals) if est_vals else pr.natural_ad_estimator(n, mode)
        if len(est.values) != n + 1:
            raise CliError(f"--estimator needs {n + 1} values")
        if o.get("optimize"):
            est = pr.optimize_estimator("ad", mode, net, n, m, est, seed=seed,
                                        restarts=o.get("restarts", 10))
        fn = pr.ad_ep_fidelity if mode == "ep" else pr.ad_coherent_fidelity
        return fn(net, n, m, est)
    if chan == "bitflip":
        mode = mode or "ep"
        if mode not in ("ep", "pauli"):
            raise CliError("bitflip protocols: --mode ep|pauli")
        flips = np.array(est_vals, dtype=float) if est_vals else np.arange(n + 1) / n
        if flips.size != n + 1:
            raise CliError(f"--estimator needs {n + 1} values")
        if o.get("optimize"):
            grid = np.linspace(0, 1, points)
            flips = pr.optimize_estimator("bitflip", mode, grid, n, m, pr.Estimator.from_array(flips),
                                          seed=seed, restarts=o.get("restarts", 10)).as_array()
        res = pr.pauli_mp_fidelity(pr.bitflip_net(points), n, m, pr.bitflip_estimator(flips), mode)
        res.extras["flip_estimates"] = flips.tolist()
        return res
    if chan == "pauli":
        mode = mode or "pauli"
        if mode == "dummy":
            x, base, f = pr.dummy_fidelity("pauli", None, n, m)
            return pr.ProtocolResult(f, [], None, n, m, {"dummy": list(x), "base": base})
        if mode not in ("ep", "pauli"):
            raise CliError("pauli protocols: --mode ep|pauli|dummy")
        return pr.pauli_mp_fidelity(pr.simplex_lattice(o.get("lattice", 10)), n, m, None, mode)
    if chan == "phase":
        mode = mode or "coherent"
        if mode != "coherent":
            raise CliError("phase protocols: --mode coherent")
        try:
            return pr.phase_coherent_process(n, m)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    raise CliError(f"unknown channel {chan!r}")


def cmd_protocol(cfg: RunConfig) -> int:
    res = _protocol_result(cfg.options, cfg.seed)
    extra = {"worst_case_fidelity": res.worst_case_fidelity, "n": res.n, "m": res.m,
             "extras": res.extras}
    if res.estimator is not None:
        extra["estimator"] = json.loads(res.estimator.to_json())
    if cfg.fmt == "json":
        rows = [{"parameter": pr._jsonable(p), "fidelity": f} for p, f in res.per_parameter_fidelities]
        emit(cfg, render_json(cfg, {**extra, "rows": rows}))
        return EXIT_OK
    rows = [(" ".join(fmt_num(v) for v in p) if isinstance(p, list) else p, f)
            for p, f in res.to_csv_rows()[1:]]
    text = render_csv(cfg, ("parameter", "fidelity"), rows)
    text += f"# worst_case_fidelity={fmt_num(res.worst_case_fidelity)}\n"
    emit(cfg, text)
    return EXIT_OK


# --- sdp -------------------------------------------------------------------------------

def cmd_sdp(cfg: RunConfig) -> int:
    from .sdp.fidelity import evaluate_process, worst_case_sdp
    from .sdp.process import ProcessError
    o = cfg.options
    chan = o.get("channel") or "ad"
    if chan not in FAMILIES:
        raise CliError("sdp supports --channel ad|bitflip")
    n, m = o["n"], o["m"]
    if n not in (1, 2) or m < n:
        raise CliError("sdp needs N in {1, 2} and M >= N")
    kind = o.get("kind") or "parallel"
    if n == 1 and kind != "parallel":
        kind = "parallel"
    lo, hi = parse_interval(o.get("interval") or ("0.01:0.96" if chan == "ad" else "0:1"))
    h = o.get("net") or 21
    make = FAMILIES[chan]
    net = [make(g) for g in np.linspace(lo, hi, h)]
    try:
        res = worst_case_sdp(net, n, m, kind, ppt=bool(o.get("ppt")), backend=o.get("backend") or "dr",
                             solver=_solver_cfg(o))
    except ProcessError as exc:
        raise CliError(str(exc)) from exc
    payload = {"status": res.status, "t_star": res.t_star, "objective": res.info.get("objective"),
               "iterations": res.info.get("iterations"),
               "primal_residual": res.info.get("primal_residual"),
               "dual_residual": res.info.get("dual_residual"),
               "net": [float(g) for g in np.linspace(lo, hi, h)], "n": n, "m": m, "kind": kind,
               "ppt": bool(o.get("ppt")), "valid": res.info.get("valid")}
    code = EXIT_OK
    if res.process is not None:
        ev = [make(g) for g in np.linspace(0, 1, o.get("eval_points", 101))]
        fmin, favg, fs = evaluate_process(res.process, ev, m)
        payload.update(eval_min=fmin, eval_avg=favg, eval_fidelities=fs.tolist(),
                       process=json.loads(res.process.to_json()))
        if not res.info.get("valid", False):
            code = EXIT_INVARIANT
    if res.status != "optimal":
        code = EXIT_SOLVER
    if cfg.fmt == "csv":
        rows = [("status", res.status), ("t_star", res.t_star),
                ("eval_min", payload.get("eval_min")), ("eval_avg", payload.get("eval_avg")),
                ("iterations", payload["iterations"])]
        emit(cfg, render_csv(cfg, ("key", "value"), rows))
    else:
        emit(cfg, render_json(cfg, payload))
    if code != EXIT_OK:
        print(f"chanclone sdp: status={res.status} valid={res.info.get('valid')}", file=sys.stderr)
    return code


# --- parser ------------------------------------------------------------------------------

COMMANDS = {"table1": cmd_table1, "bounds": cmd_bounds, "ad-clone": cmd_ad_clone,
            "protocol": cmd_protocol, "sdp": cmd_sdp}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", "-o", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None, dest="fmt")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None,
                        help="worker processes (env CHANCLONE_THREADS overrides)")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--tol", type=float, default=1e-7)
    solver.add_argument("--max-iters", type=int, default=200000, dest="max_iters")
    solver.add_argument("--eval-points", type=int, default=101, dest="eval_points")

    p = argparse.ArgumentParser(prog="chanclone", description="Cloning and replication of quantum channels.")
    p.add_argument("--version", action="version", version=f"chanclone {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("table1", parents=[common, solver], help="worst-case SDP table")
    t.add_argument("--channel", choices=sorted(FAMILIES))
    t.add_argument("--net", type=int, help="net size H for a single custom row group")
    t.add_argument("--interval", help="net interval a:b for a single custom row group")
    t.add_argument("--ppt", action="store_true")
    t.add_argument("--x", type=float, action="append", help="threshold (repeatable)")

    b = sub.add_parser("bounds", parents=[common], help="lower-bound curves on a z grid")
    b.add_argument("--points", type=int, default=200)

    a = sub.add_parser("ad-clone", parents=[common], help="AD dummy / M&P / coherent sweep")
    a.add_argument("--N", dest="ns", default="1,5", help="comma-separated N values")
    a.add_argument("--m-max", type=int, default=20, dest="m_max")
    a.add_argument("--restarts", type=int, default=10)
    a.add_argument("--points", type=int, default=101)

    q = sub.add_parser("protocol", parents=[common], help="evaluate one protocol")
    q.add_argument("--channel", choices=("ad", "bitflip", "pauli", "phase"), default="ad")
    q.add_argument("--mode", choices=("ep", "coherent", "pauli", "dummy"))
    q.add_argument("--N", dest="n", type=int, default=1)
    q.add_argument("--M", dest="m", type=int, default=2)
    q.add_argument("--points", type=int, default=101)
    q.add_argument("--lattice", type=int, default=10)
    q.add_argument("--estimator", help="JSON list of estimator values indexed by t")
    q.add_argument("--optimize", action="store_true")
    q.add_argument("--restarts", type=int, default=10)

    s = sub.add_parser("sdp", parents=[common, solver], help="run one worst-case SDP")
    s.add_argument("--channel", choices=sorted(FAMILIES), default="ad")
    s.add_argument("--N", dest="n", type=int, default=1)
    s.add_argument("--M", dest="m", type=int, default=2)
    s.add_argument("--net", type=int, default=21)
    s.add_argument("--interval")
    s.add_argument("--ppt", action="store_true")
    s.add_argument("--kind", choices=("parallel", "sequential", "noncausal"), default="parallel")
    s.add_argument("--backend", choices=("dr", "cvxpy"), default="dr")
    return p


def make_config(ns: argparse.Namespace) -> RunConfig:
    opts = {k: v for k, v in vars(ns).items() if k not in ("command", "out", "fmt", "seed", "threads")}
    fmt = ns.fmt or ("json" if ns.command == "sdp" else "csv")
    return RunConfig(ns.command, opts, ns.out, fmt, ns.seed, resolve_threads(ns.threads))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = make_config(ns)
        return COMMANDS[ns.command](cfg)
    except CliError as exc:
        print(f"chanclone {ns.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
