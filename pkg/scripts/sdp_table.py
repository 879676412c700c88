"""Run the worst-case SDP table and write a CSV.

Usage: python scripts/sdp_table.py [--out table1.csv] [--quick]
``--quick`` runs only the two-point amplitude-damping row (seconds instead of tens of minutes).
"""
import argparse
from dataclasses import dataclass, field

from chanclone import cli


@dataclass
class Table1Config:
    out: str = "table1.csv"
    rows: tuple = field(default_factory=lambda: cli.TABLE1_ROWS)
    eval_points: int = 101
    tol: float = 1e-7
    max_iters: int = 200000
    threads: int = 1


def run(cfg: Table1Config) -> str:
    run_cfg = cli.RunConfig("table1", {"rows": [list(map(str, r)) for r in cfg.rows],
                                       "eval_points": cfg.eval_points, "tol": cfg.tol,
                                       "max_iters": cfg.max_iters},
                            out=cfg.out, threads=cfg.threads)
    opts = {"eval_points": cfg.eval_points, "tol": cfg.tol, "max_iters": cfg.max_iters}
    groups = cli.pmap(cli.run_table1_group, [(g, opts) for g in cfg.rows], cfg.threads)
    rows = [[r[k] for k in cli.TABLE1_HEADER] for grp in groups for r in grp]
    text = cli.render_csv(run_cfg, cli.TABLE1_HEADER, rows)
    cli.emit(run_cfg, text)
    return text


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="table1.csv")
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--threads", type=int, default=1)
    a = ap.parse_args()
    cfg = Table1Config(out=a.out, threads=a.threads)
    if a.quick:
        cfg.rows = cli.TABLE1_ROWS[:1]
    print(run(cfg), end="")
