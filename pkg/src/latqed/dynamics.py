"""Time evolution of the chain and pair counting.

A single-particle propagator U(T, 0) fixes the many-body S-matrix of the
free-fermion field.  Starting from the filled negative-energy sea, the
created pair number is the squared Frobenius norm of the block
beta = P+^T U P-, where P+- are the free positive/negative eigenvectors.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal, solve_banded

from .errors import DegeneracyError, NumericalError, PreconditionError
from .model import (ChainModel, Linear, PotentialSpec, RampProfile, TridiagonalOperator,
                    build_hamiltonian, sample_potential)
from .spectral import participation_ratio

DT_SAFETY = 0.05  # dt * max|E| bound
PAIR_FLOOR = 1e-10  # pair numbers below this are numerically zero


@dataclass(frozen=True)
class EvolutionResult:
    propagator: np.ndarray  # U(T,0) applied to the initial columns
    times: np.ndarray  # (start, stop)
    dt: float
    steps: int
    norm_drift: float
    unitarity_error: float
    global_phase: complex  # already included in the propagator


def _spectral_radius(H: TridiagonalOperator) -> float:
    n = H.size
    lo = eigvalsh_tridiagonal(H.diagonal, H.off_diagonal, select="i", select_range=(0, 0))[0]
    hi = eigvalsh_tridiagonal(H.diagonal, H.off_diagonal, select="i", select_range=(n - 1, n - 1))[0]
    return float(max(abs(lo), abs(hi)))


def max_energy(chain: ChainModel, phi: np.ndarray) -> float:
    """Bound on max|E| of H0 + f*phi for every envelope value f in [0, 1].

    The spectral radius is a norm, hence convex in f; its maximum over the
    segment sits at an end point.  The uniform part of phi is removed first
    because it is integrated as a phase.
    """
    phi = np.asarray(phi, float) - np.mean(phi)
    r0 = _spectral_radius(build_hamiltonian(chain, np.zeros(chain.num_sites)))
    r1 = _spectral_radius(build_hamiltonian(chain, phi))
    return max(r0, r1)


def stable_dt(chain: ChainModel, phi: np.ndarray) -> float:
    return DT_SAFETY / max_energy(chain, phi)


def _as_phi(chain, potential):
    if isinstance(potential, np.ndarray):
        if potential.shape != (chain.num_sites,):
            raise PreconditionError("potential array has the wrong length")
        return potential.astype(float)
    return sample_potential(potential, chain)


def evolve(chain: ChainModel, potential: PotentialSpec | np.ndarray, ramp: RampProfile,
           dt: float | None = None, initial: np.ndarray | None = None,
           t_start: float = 0.0, t_stop: float | None = None, reverse: bool = False) -> EvolutionResult:
    """Crank-Nicolson propagation of H(t) = H0 + ramp(t) * Phi.

    H is taken at the midpoint of each step.  The site average of Phi is
    split off and integrated exactly as the phase exp(-i mean(Phi) int ramp),
    so a constant shift of the potential changes U by that phase alone.
    With reverse=True the interval is traversed from t_stop back to t_start,
    which applies the exact inverse of the forward step sequence.
    """
    phi = _as_phi(chain, potential)
    t_stop = ramp.total if t_stop is None else t_stop
    span = t_stop - t_start
    if span < 0:
        raise PreconditionError("t_stop before t_start")
    cap = stable_dt(chain, phi)
    if dt is None:
        dt = cap
    elif dt > cap * (1 + 1e-12):
        raise PreconditionError(f"dt={dt:.4g} exceeds 0.05/max|E| = {cap:.4g}")
    n = chain.num_sites
    U = np.eye(n, dtype=complex) if initial is None else np.array(initial, dtype=complex)
    if U.ndim == 1:
        U = U[:, None]
    steps = int(math.ceil(span / dt - 1e-12)) if span > 0 else 0
    mean_phi = float(np.mean(phi))
    shape = phi - mean_phi
    mass = chain.mass * chain.staggering
    hop = -0.5 * chain.hopping
    if steps:
        h = span / steps
        sgn = -1.0 if reverse else 1.0
        ab = np.zeros((3, n), dtype=complex)
        ab[0, 1:] = 0.5j * sgn * h * hop
        ab[2, :-1] = 0.5j * sgn * h * hop
        mids = t_start + (np.arange(steps) + 0.5) * h
        if reverse:
            mids = mids[::-1]
        envs = ramp.envelope(mids)
        for f in np.atleast_1d(envs):
            d = mass + f * shape
            ab[1] = 1.0 + 0.5j * sgn * h * d
            rhs = U - 0.5j * sgn * h * (d[:, None] * U)
            rhs[1:] -= 0.5j * sgn * h * hop * U[:-1]
            rhs[:-1] -= 0.5j * sgn * h * hop * U[1:]
            try:
                U = solve_banded((1, 1), ab, rhs, overwrite_b=True, check_finite=False)
            except (np.linalg.LinAlgError, ValueError) as exc:  # pragma: no cover
                raise NumericalError(f"banded solve failed: {exc}") from exc
        h_used = h
    else:
        h_used = 0.0
    phase = 1.0 + 0j
    if mean_phi != 0.0 and span > 0:
        theta = mean_phi * ramp.integral(t_start, t_stop)
        phase = complex(np.exp(1j * theta if reverse else -1j * theta))
        U = U * phase
    gram = U.conj().T @ U
    k = gram.shape[0]
    unit = float(np.max(np.abs(gram - np.eye(k)))) if k else 0.0
    drift = float(np.max(np.abs(np.sqrt(np.real(np.diag(gram))) - 1.0))) if k else 0.0
    times = (t_stop, t_start) if reverse else (t_start, t_stop)
    return EvolutionResult(U, np.array(times), h_used, steps, drift, unit, phase)


# in/out bases and pair counting ------------------------------------------------

@dataclass(frozen=True)
class ModeSplit:
    positive: np.ndarray
    negative: np.ndarray
    e_positive: np.ndarray
    e_negative: np.ndarray


def in_out_split(H_free: TridiagonalOperator, tol: float = 1e-12) -> ModeSplit:
    w, v = eigh_tridiagonal(H_free.diagonal, H_free.off_diagonal)
    if np.any(np.abs(w) <= tol):
        raise DegeneracyError(f"eigenvalue {w[np.argmin(np.abs(w))]:.3e} at zero: sign split undefined")
    neg = w < 0
    return ModeSplit(v[:, ~neg], v[:, neg], w[~neg], w[neg])


@dataclass(frozen=True)
class PairCreationResult:
    beta_matrix: np.ndarray
    n_pairs: float
    dominant_mode: tuple[int, int]  # (out k, in q) of the largest |beta|^2
    mode_spectrum: np.ndarray  # per out-positive mode occupation
    singular_values: np.ndarray
    dominant_fraction: float  # sigma_1^2 / n_pairs
    particle_mode: np.ndarray  # site-basis natural orbital of the dominant pair
    hole_mode: np.ndarray


def _pairs_from_sea(psi: np.ndarray, positive: np.ndarray, negative: np.ndarray) -> PairCreationResult:
    beta = positive.T @ psi
    occ = np.sum(np.abs(beta) ** 2, axis=1)
    n = float(occ.sum())
    uu, s, _ = np.linalg.svd(beta)
    gamma = negative.T @ psi
    ug, _, _ = np.linalg.svd(gamma)
    k, q = np.unravel_index(int(np.argmax(np.abs(beta))), beta.shape)
    frac = float(s[0] ** 2 / n) if n > 0 else 0.0
    return PairCreationResult(beta, n, (int(k), int(q)), occ, s, frac,
                              positive @ uu[:, 0], negative @ ug[:, -1])


def count_pairs(U: np.ndarray, split: ModeSplit) -> PairCreationResult:
    """Pairs created by the single-particle propagator U from the free Dirac sea."""
    return _pairs_from_sea(U @ split.negative, split.positive, split.negative)


def pairs_from_evolved_sea(psi: np.ndarray, split: ModeSplit) -> PairCreationResult:
    """Same as count_pairs when only the sea columns U P- were propagated."""
    return _pairs_from_sea(psi, split.positive, split.negative)


def run_pair_creation(chain: ChainModel, potential: PotentialSpec | np.ndarray, ramp: RampProfile,
                      dt: float | None = None):
    H0 = build_hamiltonian(chain, np.zeros(chain.num_sites))
    split = in_out_split(H0)
    ev = evolve(chain, potential, ramp, dt=dt, initial=split.negative)
    return pairs_from_evolved_sea(ev.propagator, split), ev


@dataclass(frozen=True)
class PairStructure:
    time: float
    envelope: float
    n_excited: float
    dominant_fraction: float
    particle_participation: float
    hole_participation: float
    num_sites: int
    particle_mode: np.ndarray
    hole_mode: np.ndarray


def pair_structure(chain: ChainModel, potential: PotentialSpec | np.ndarray, ramp: RampProfile,
                   t_probe: float, dt: float | None = None) -> PairStructure:
    """Spatial shape of the dominant pair at an intermediate time.

    Excitations are counted against the instantaneous ground state at half
    filling, so during the switch-off (subcritical again) the particle of a
    spontaneously created pair sits in a genuine gap bound state.
    """
    phi = _as_phi(chain, potential)
    H0 = build_hamiltonian(chain, np.zeros(chain.num_sites))
    split0 = in_out_split(H0)
    ev = evolve(chain, phi, ramp, dt=dt, initial=split0.negative, t_stop=t_probe)
    f = float(ramp.envelope(t_probe))
    Ht = build_hamiltonian(chain, f * phi)
    w, v = eigh_tridiagonal(Ht.diagonal, Ht.off_diagonal)
    half = chain.num_sites // 2
    res = _pairs_from_sea(ev.propagator, v[:, half:], v[:, :half])
    return PairStructure(t_probe, f, res.n_pairs, res.dominant_fraction,
                         participation_ratio(res.particle_mode), participation_ratio(res.hole_mode),
                         chain.num_sites, res.particle_mode, res.hole_mode)


# scans ---------------------------------------------------------------------------

def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("LATQED_JOBS", "1")))
    except ValueError:
        return 1


def _map(fn, items, jobs):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class AdiabaticRow:
    duration: float
    n_pairs: float
    dominant_fraction: float
    unitarity_error: float


def _adiabatic_job(args):
    chain, potential, duration, plateau, shape = args
    res, ev = run_pair_creation(chain, potential, RampProfile(duration, plateau, duration, shape))
    return AdiabaticRow(duration, res.n_pairs, res.dominant_fraction, ev.unitarity_error)


def adiabatic_scan(chain: ChainModel, potential: PotentialSpec, durations, plateau: float = 20.0,
                   shape: str = "smoothcos", jobs: int = 1) -> list[AdiabaticRow]:
    """n_pairs versus switch-on/off duration at a fixed plateau."""
    durations = [float(d) for d in durations]
    if any(b <= a for a, b in zip(durations, durations[1:])):
        raise PreconditionError("ramp durations must ascend")
    return _map(_adiabatic_job, [(chain, potential, d, plateau, shape) for d in durations], jobs)


@dataclass(frozen=True)
class SchwingerScan:
    fields: np.ndarray
    n_pairs: np.ndarray
    rates: np.ndarray
    used: np.ndarray  # points entering the fit
    fit_slope: float
    fit_intercept: float
    r_squared: float
    rate_floor: float
    window_length: float
    plateau: float
    unitarity_error: float


def _schwinger_job(args):
    chain, field, window, ramp = args
    res, ev = run_pair_creation(chain, Linear(field, window), ramp)
    return res.n_pairs, ev.unitarity_error


def schwinger_scan(chain: ChainModel, fields, window: tuple[int, int], t_ramp: float = 10.0,
                   plateau: float = 20.0, jobs: int = 1) -> SchwingerScan:
    """Pair rate in a constant field held over `plateau`; fit ln(rate) = slope/E + c."""
    fields = np.asarray(sorted(float(f) for f in fields))
    M = chain.mass
    x = chain.positions
    span = x[window[1] - 1] - x[window[0]]
    for E in fields:
        if E * span <= 2 * M:
            raise PreconditionError(f"field {E}: potential drop {E * span:.3g} across the window is below 2M")
        if E > 0.5 * M * M:
            raise PreconditionError(f"field {E} above 0.5 M^2")
    ramp = RampProfile(t_ramp, plateau, t_ramp)
    out = _map(_schwinger_job, [(chain, E, tuple(window), ramp) for E in fields], jobs)
    n = np.array([o[0] for o in out])
    rates = n / plateau
    floor = PAIR_FLOOR / plateau
    used = rates > 10 * floor
    slope = intercept = r2 = float("nan")
    if used.sum() >= 2:
        X = 1.0 / fields[used]
        Y = np.log(rates[used])
        slope, intercept = np.polyfit(X, Y, 1)
        resid = Y - (slope * X + intercept)
        ss = np.sum((Y - Y.mean()) ** 2)
        r2 = float(1 - np.sum(resid**2) / ss) if ss > 0 else float("nan")
    return SchwingerScan(fields, n, rates, used, float(slope), float(intercept), r2, floor, float(span),
                         plateau, float(max(o[1] for o in out)))
