"""Eigenstates of the chain, gap states, and their fate as the well deepens."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal
from scipy.optimize import least_squares

from .errors import ConvergenceError, FitError, SupercriticalityNotReached, TraceError
from .model import (ChainModel, PotentialSpec, TridiagonalOperator, WoodsSaxon,
                    build_hamiltonian, sample_potential)


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    operator: TridiagonalOperator
    chain: ChainModel | None = None


@dataclass(frozen=True)
class BoundState:
    energy: float
    psi1: np.ndarray  # even sites, carrier (-1)^m removed
    psi2: np.ndarray  # odd sites, same convention
    vector: np.ndarray
    localization_length: float
    participation: float
    finite_size: bool


def participation_ratio(v: np.ndarray) -> float:
    """Number of sites effectively occupied: 1 / sum |v|^4 for normalized v."""
    w = np.abs(v) ** 2
    return float(w.sum() ** 2 / np.sum(w * w))


def solve_spectrum(H: TridiagonalOperator, chain: ChainModel | None = None) -> SpectrumResult:
    if H.size < 2:
        raise ConvergenceError("need at least two sites")
    try:
        w, v = eigh_tridiagonal(H.diagonal, H.off_diagonal)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceError(f"tridiagonal eigensolver failed: {exc}") from exc
    res = np.linalg.norm(H.matvec(v) - v * w, axis=0)
    scale = max(H.norm_bound(), 1e-300)
    if res.max() > 1e-10 * scale:
        k = int(np.argmax(res))
        raise ConvergenceError(f"eigenpair {k} residual {res[k]:.3e} exceeds 1e-10 * |H| = {1e-10 * scale:.3e}")
    return SpectrumResult(w, v, H, chain)


def spinor_components(vec: np.ndarray):
    """Split a site vector into the two slowly varying spinor components.

    Low-energy states oscillate with period four sites; multiplying each
    sublattice by (-1)^m leaves the smooth envelopes.
    """
    sign = np.where(np.arange(len(vec) // 2) % 2 == 0, 1.0, -1.0)
    return vec[0::2] * sign, vec[1::2] * sign


def sign_changes(component: np.ndarray, rel: float = 1e-3, scale: float | None = None) -> int:
    scale = np.max(np.abs(component)) if scale is None else scale
    c = component[np.abs(component) > rel * scale]
    return int(np.sum(np.sign(c[1:]) != np.sign(c[:-1])))


def _tail_length(vec: np.ndarray, spacing: float) -> float:
    amp = np.abs(vec)
    # envelope over neighbouring pairs removes the sublattice modulation
    env = np.maximum(amp[:-1], amp[1:])
    peak = int(np.argmax(env))
    top = env[peak]
    xs, ys = [], []
    for side in (env[peak:], env[:peak + 1][::-1]):
        d = np.arange(len(side))
        mask = (side < 1e-2 * top) & (side > 1e-12 * top)
        xs.append(d[mask] * spacing)
        ys.append(np.log(side[mask] / top))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    if len(x) >= 4:
        slope = np.polyfit(x, y, 1)[0]
        if slope < 0:
            return float(-1.0 / slope)
    # fall back to the second moment
    w = amp**2 / np.sum(amp**2)
    pos = np.arange(len(vec)) * spacing
    mean = np.sum(w * pos)
    return float(math.sqrt(np.sum(w * (pos - mean) ** 2)))


def find_gap_states(spec: SpectrumResult, M: float, edge_margin: float = 1e-6,
                    spacing: float | None = None) -> list[BoundState]:
    n = spec.operator.size
    if spacing is None:
        spacing = spec.chain.spacing if spec.chain is not None else 1.0
    out = []
    for k in np.nonzero(np.abs(spec.eigenvalues) < M - edge_margin)[0]:
        v = spec.eigenvectors[:, k]
        pr = participation_ratio(v)
        if pr >= n / 4:
            continue
        peak = np.max(np.abs(v))
        tails = max(abs(v[0]), abs(v[1]), abs(v[-1]), abs(v[-2]))
        p1, p2 = spinor_components(v)
        out.append(BoundState(float(spec.eigenvalues[k]), p1, p2, v, _tail_length(v, spacing), pr,
                              bool(tails >= 1e-6 * peak)))
    return out


def gap_states(chain: ChainModel, potential: PotentialSpec, edge_margin: float = 1e-6) -> list[BoundState]:
    H = build_hamiltonian(chain, sample_potential(potential, chain))
    return find_gap_states(solve_spectrum(H, chain), chain.mass, edge_margin)


# criticality -------------------------------------------------------------------

@dataclass
class CriticalityTrace:
    W_values: np.ndarray
    E0_values: np.ndarray  # nan where the tracked state is not in the gap
    localized: np.ndarray
    chain: ChainModel
    a: float
    L: float
    edge_margin: float = 1e-6
    W_cr: float | None = None
    crossed_at: float | None = None  # first grid W with the state gone below the gap


def _gap_pairs(chain, W, a, L, margin):
    H = build_hamiltonian(chain, sample_potential(WoodsSaxon(W, a, L), chain))
    M = chain.mass
    try:
        w, v = eigh_tridiagonal(H.diagonal, H.off_diagonal, select="v",
                                select_range=(-M + margin, M - margin))
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise ConvergenceError(str(exc)) from exc
    return w, v


def trace_bound_state(chain: ChainModel, a: float, L: float, W_grid, edge_margin: float = 1e-6,
                      max_step: float = 0.1, min_overlap: float = 0.5,
                      min_dW: float = 1e-4) -> CriticalityTrace:
    """Follow the lowest gap state as the Woods-Saxon depth increases.

    At each W the state is identified by maximal overlap with its
    predecessor, not by ordering.  A step whose overlap drops below
    `min_overlap` or whose energy moves by more than `max_step` (units of M)
    is bisected.  When the state is lost close to -M it has left the gap;
    the remaining grid points are recorded as NaN.
    """
    W_grid = np.asarray(W_grid, dtype=float)
    if np.any(np.diff(W_grid) <= 0):
        raise TraceError("W grid must ascend")
    M = chain.mass
    n = chain.num_sites
    st = {"W": None, "vec": None, "E": None, "crossed": None}

    def advance(W):
        w, v = _gap_pairs(chain, W, a, L, edge_margin)
        if st["vec"] is None:
            if len(w):
                st.update(W=W, vec=v[:, 0], E=float(w[0]))
            return
        ov = np.abs(st["vec"] @ v) if len(w) else np.zeros(0)
        k = int(np.argmax(ov)) if len(w) else -1
        good = k >= 0 and ov[k] >= min_overlap and abs(w[k] - st["E"]) <= max_step * M
        if good:
            st.update(W=W, vec=v[:, k], E=float(w[k]))
            return
        if W - st["W"] > min_dW:
            advance(0.5 * (st["W"] + W))
            if st["crossed"] is None:
                advance(W)
            return
        if st["E"] < -M + 0.1 * M:
            st["crossed"] = W
            return
        detail = f"overlap {ov[k]:.3f}, E {w[k]:.6f}" if k >= 0 else "no gap states"
        raise TraceError(f"lost the bound state between W={st['W']} and W={W} (E0={st['E']:.6f}; {detail})")

    Es, locs = [], []
    for W in W_grid:
        if st["crossed"] is None:
            advance(W)
        if st["crossed"] is not None or st["vec"] is None:
            Es.append(np.nan)
            locs.append(False)
        else:
            Es.append(st["E"])
            locs.append(participation_ratio(st["vec"]) < n / 4)
    return CriticalityTrace(W_grid, np.array(Es), np.array(locs, dtype=bool), chain, a, L,
                            edge_margin, crossed_at=st["crossed"])


def _edge_level(chain: ChainModel, potential: PotentialSpec) -> float:
    """Eigenvalue with index N/2: the highest lower-band level of the free chain."""
    H = build_hamiltonian(chain, sample_potential(potential, chain))
    k = chain.num_sites // 2
    return float(eigvalsh_tridiagonal(H.diagonal, H.off_diagonal, select="i", select_range=(k, k))[0])


def critical_strength(chain: ChainModel, family: Callable[[float], PotentialSpec], lo: float, hi: float,
                      tol: float = 1e-4, edge_margin: float = 1e-6) -> float:
    """Strength at which the lowest gap level reaches -M + edge_margin.

    For an attractive shape every eigenvalue is non-increasing in the
    strength, so the (N/2)-th level from the bottom is monotone and can be
    bisected without tracking states.  Below the threshold it is the lowest
    gap state; past it the state has merged with the lower band.
    """
    target = -chain.mass + edge_margin
    f_lo = _edge_level(chain, family(lo)) - target
    f_hi = _edge_level(chain, family(hi)) - target
    if f_lo <= 0:
        raise SupercriticalityNotReached(f"already at or below -M + margin at strength {lo}")
    if f_hi > 0:
        raise SupercriticalityNotReached(f"lowest gap level {f_hi + target:.6g} still above -M + margin at strength {hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _edge_level(chain, family(mid)) - target > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_critical_strength(trace: CriticalityTrace, tol: float = 1e-4, W_max: float | None = None) -> float:
    """Bisect W_cr inside the bracket where the traced state left the gap."""
    ok = ~np.isnan(trace.E0_values)
    if not np.any(ok):
        raise SupercriticalityNotReached("trace has no bound state")
    lo = float(trace.W_values[ok][-1])
    if trace.crossed_at is not None:
        hi = float(trace.crossed_at)
    elif W_max is not None:
        hi = W_max
    else:
        raise SupercriticalityNotReached(f"state still in the gap at W={lo}; no bracket")
    fam = lambda W: WoodsSaxon(W, trace.a, trace.L)
    # the margin-level crossing can sit slightly below the last traced point
    while lo > 0 and _edge_level(trace.chain, fam(lo)) <= -trace.chain.mass + trace.edge_margin:
        lo *= 0.99
    wcr = critical_strength(trace.chain, fam, lo, hi, tol, trace.edge_margin)
    trace.W_cr = wcr
    return wcr


# parabolic approach to the band edges ----------------------------------------

@dataclass(frozen=True)
class ParabolicFit:
    C_plus: float
    W_plus: float
    C_minus: float
    W_minus: float
    rms_plus: float
    rms_minus: float


def _edge_parabola(W, E, edge):
    c, b, a0 = np.polyfit(W, E - edge, 2)
    W0 = -b / (2 * c) if c != 0 else float(np.mean(W))

    def resid(x):
        return edge + x[0] * (W - x[1]) ** 2 - E

    sol = least_squares(resid, [c, W0], method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if not sol.success:
        raise FitError(f"parabola fit failed: {sol.message}")
    r = resid(sol.x)
    return float(sol.x[0]), float(sol.x[1]), float(np.sqrt(np.mean(r * r)))


def fit_parabolic_edges(trace: CriticalityTrace, M: float, window: float = 0.05, min_points: int = 5) -> ParabolicFit:
    """Fit E = +-M + C (W - W0)^2 to the trace points within `window` of each edge."""
    W = np.asarray(trace.W_values)
    E = np.asarray(trace.E0_values)
    ok = ~np.isnan(E)
    up = ok & (E > M - window * M)
    dn = ok & (E < -M + window * M)
    if up.sum() < min_points or dn.sum() < min_points:
        raise FitError(f"need {min_points} points near each edge, got {int(up.sum())} near +M and {int(dn.sum())} near -M")
    cp, wp, rp = _edge_parabola(W[up], E[up], M)
    cm, wm, rm = _edge_parabola(W[dn], E[dn], -M)
    return ParabolicFit(cp, wp, cm, wm, rp, rm)


def lattice_ws_energies(chain: ChainModel, W: float, a: float = 10.0, L: float = 1.0, edge_margin: float = 1e-6):
    """All gap eigenvalues of a Woods-Saxon chain, without the localization filter."""
    w, _ = _gap_pairs(chain, W, a, L, edge_margin)
    return w
