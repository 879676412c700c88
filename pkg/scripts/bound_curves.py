"""Tabulate the lower-bound curves A(z), Ã(z), π/4·(1−z) and the Pauli M&P asymptote.

Usage: python scripts/bound_curves.py [--points 200] [--out bounds.csv]
"""
import argparse
from dataclasses import dataclass

from chanclone import cli


@dataclass
class BoundsConfig:
    points: int = 200
    out: str = "bounds.csv"


def run(cfg: BoundsConfig) -> str:
    run_cfg = cli.RunConfig("bounds", {"points": cfg.points}, out=cfg.out)
    text = cli.render_csv(run_cfg, cli.BOUNDS_HEADER, cli.bounds_rows(cfg.points))
    cli.emit(run_cfg, text)
    return text


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=200)
    ap.add_argument("--out", default="bounds.csv")
    a = ap.parse_args()
    run(BoundsConfig(a.points, a.out))
    print(f"wrote {a.out}")
