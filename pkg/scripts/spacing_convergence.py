"""Lattice W_cr and the largest |E0 - E0_continuum| as the spacing shrinks.

    python3 scripts/spacing_convergence.py [--box 20] [spacing ...]
"""
import argparse

import numpy as np

from latqed import oracles as orc
from latqed import spectral as spc
from latqed.model import ChainModel

ap = argparse.ArgumentParser()
ap.add_argument("spacings", nargs="*", type=float, default=[0.08, 0.04, 0.02, 0.01])
ap.add_argument("--box", type=float, default=20.0)
args = ap.parse_args()

grid = np.round(np.arange(0.25, 3.2 + 1e-9, 0.05), 12)
cont = orc.track_ws_ground_state(grid)
print("spacing,num_sites,W_cr,max_abs_diff")
for ell in args.spacings:
    chain = ChainModel.from_box(args.box, ell)
    trace = spc.trace_bound_state(chain, 10.0, 1.0, grid)
    W_cr = spc.find_critical_strength(trace, 1e-4, W_max=float(grid[-1]))
    both = ~np.isnan(trace.E0_values) & ~np.isnan(cont)
    diff = np.max(np.abs(np.asarray(trace.E0_values)[both] - cont[both]))
    print(f"{ell:g},{chain.num_sites},{W_cr:.6f},{diff:.3e}")
