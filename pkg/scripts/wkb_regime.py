"""Where the WKB band solve holds up against exact Bloch bands.

Prints gap error and band-shape RMS versus W0, and the ratio between the
closed-form hopping estimate and the exact half-bandwidth at dW = 0.

    python3 scripts/wkb_regime.py [W0 ...]
"""
import sys

import numpy as np

from latqed import bands as bd
from latqed.errors import DomainError

p = np.linspace(-1, 1, 40, endpoint=False)
print("W0,gap_exact,gap_wkb,gap_rel_err,shape_rms,J_formula_over_halfwidth")
for W0 in [float(a) for a in sys.argv[1:]] or [8.0, 10.0, 12.0, 16.0, 20.0]:
    pot = bd.BichromaticPotential(W0, 1.0)
    ex = bd.exact_bloch(pot, p)
    flat = bd.exact_bloch(bd.BichromaticPotential(W0, 0.0), np.linspace(-1, 1, 41))
    ratio = bd.wkb_hopping_estimate(W0, 1.0) / ((flat.E_plus.max() - flat.E_minus.min()) / 2)
    try:
        wk = bd.wkb_band_solve(pot, p)
    except DomainError as exc:
        print(f"{W0:g},{ex.gap:.6f},nan,nan,nan,{ratio:.4f}  # {exc}")
        continue
    print(f"{W0:g},{ex.gap:.6f},{wk.gap:.6f},{abs(wk.gap - ex.gap) / ex.gap:.4f},"
          f"{bd.band_shape_rms(wk, ex):.4f},{ratio:.4f}")
