"""Amplitude-damping replication sweep: dummy, estimate-and-prepare and coherent
worst-case fidelities for M = N..m_max.

Usage: python scripts/ad_sweep.py [--ns 1,5] [--m-max 20] [--out ad_sweep.csv]
"""
import argparse
from dataclasses import dataclass, field

from chanclone import cli


@dataclass
class SweepConfig:
    ns: list = field(default_factory=lambda: [1, 5])
    m_max: int = 20
    restarts: int = 10
    points: int = 101
    seed: int = 0
    threads: int = 1
    out: str = "ad_sweep.csv"


def run(cfg: SweepConfig) -> str:
    run_cfg = cli.RunConfig("ad-clone", {"ns": ",".join(map(str, cfg.ns)), "m_max": cfg.m_max,
                                         "restarts": cfg.restarts, "points": cfg.points},
                            out=cfg.out, seed=cfg.seed, threads=cfg.threads)
    jobs = [(n, m, cfg.seed, cfg.restarts, cfg.points)
            for n in cfg.ns for m in range(n, cfg.m_max + 1)]
    rows = cli.pmap(cli.ad_clone_row, jobs, cfg.threads)
    text = cli.render_csv(run_cfg, cli.AD_CLONE_HEADER, rows)
    cli.emit(run_cfg, text)
    return text


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--ns", default="1,5")
    ap.add_argument("--m-max", type=int, default=20)
    ap.add_argument("--restarts", type=int, default=10)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="ad_sweep.csv")
    a = ap.parse_args()
    cfg = SweepConfig(ns=cli.parse_int_list(a.ns), m_max=a.m_max, restarts=a.restarts,
                      threads=a.threads, out=a.out)
    print(run(cfg), end="")
