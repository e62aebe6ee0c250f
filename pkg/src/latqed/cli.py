"""`latqed <config> [--output-dir DIR] [--jobs N] [--verbose]`"""
from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, load_config
from .dynamics import default_jobs
from .errors import LatqedError

log = logging.getLogger("latqed")


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def write_csv(path: Path, header, rows) -> str:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([format_value(v) for v in r])
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_scenario(cfg: ScenarioConfig, output_dir: Path, jobs: int = 1) -> Path:
    """Run one scenario, write its CSVs and then the manifest; returns the manifest path."""
    from .scenarios import run

    output_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    tables = run(cfg, jobs)
    sums = []
    for name, header, rows in tables:
        sums.append((name, write_csv(output_dir / name, header, rows)))
        log.info("wrote %s (%d rows)", name, len(rows))
    wall = time.perf_counter() - t0
    lines = [f"scenario = {cfg.scenario}", f"code_version = {__version__}",
             f"schema_version = {cfg.schema_version}", f"seed = {cfg.seed}",
             f"wall_time_s = {wall:.3f}", f"jobs = {jobs}", "[config]"]
    lines += [f"{k} = {format_value(v) if not isinstance(v, list) else ', '.join(format_value(x) for x in v)}"
              for k, v in cfg.parameters.items() if v is not None]
    lines.append("[checksums]")
    lines += [f"{name} = sha256:{h}" for name, h in sums]
    manifest = output_dir / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="latqed", description="Run one lattice-QED scenario from a config file.")
    ap.add_argument("config", type=Path)
    ap.add_argument("--output-dir", type=Path, default=None)
    ap.add_argument("--jobs", type=int, default=None, help="worker processes (default: $LATQED_JOBS or 1)")
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    jobs = args.jobs if args.jobs is not None else default_jobs()
    try:
        if jobs < 1:
            from .errors import ConfigurationError
            raise ConfigurationError(f"--jobs must be >= 1, got {jobs}")
        cfg = load_config(args.config)
        out = args.output_dir or cfg.output_dir or Path("out") / cfg.scenario.lower()
        manifest = run_scenario(cfg, out, jobs)
    except LatqedError as exc:
        print(f"latqed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
