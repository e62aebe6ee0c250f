"""Run every config in configs/ through the CLI, one output directory each.

    python3 scripts/run_all.py [--out OUT] [--jobs N] [--only NAME ...]
"""
import argparse
import sys
import time
from pathlib import Path

from latqed.cli import main as latqed

ROOT = Path(__file__).resolve().parents[1]


def run(out: Path, jobs: int, only=None) -> int:
    failed = []
    for cfg in sorted((ROOT / "configs").glob("*.cfg")):
        if only and cfg.stem not in only:
            continue
        t0 = time.perf_counter()
        code = latqed([str(cfg), "--output-dir", str(out / cfg.stem), "--jobs", str(jobs)])
        print(f"{cfg.stem:18s} exit {code}  {time.perf_counter() - t0:7.1f} s", flush=True)
        if code:
            failed.append(cfg.stem)
    if failed:
        print("failed:", ", ".join(failed))
    return 1 if failed else 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=ROOT / "out")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--only", nargs="*")
    a = ap.parse_args()
    sys.exit(run(a.out, a.jobs, a.only))
