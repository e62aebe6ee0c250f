"""Closed-form and semi-analytic references for the chain.

* continuum Woods-Saxon bound states from the Beta-function condition
* delta potential in the continuum and on the lattice (cubic + momentum profile)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, PoleError
from .model import ChainModel, TridiagonalOperator

# Lanczos coefficients, g = 7, n = 9
_G = 7.0
_LANCZOS = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])


def _lanczos_right(z):
    # valid for Re z >= 0.5
    z = z - 1.0
    acc = np.full_like(z, _LANCZOS[0])
    for i in range(1, len(_LANCZOS)):
        acc = acc + _LANCZOS[i] / (z + i)
    t = z + _G + 0.5
    return math.sqrt(2 * math.pi) * np.exp((z + 0.5) * np.log(t) - t) * acc


def complex_gamma(z):
    """Gamma function on the complex plane (Lanczos + reflection)."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    pole = (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))
    if np.any(pole):
        raise PoleError(f"Gamma has a pole at {z[pole][0]}")
    out = np.empty_like(z)
    left = z.real < 0.5
    if np.any(~left):
        out[~left] = _lanczos_right(z[~left])
    if np.any(left):
        zl = z[left]
        out[left] = np.pi / (np.sin(np.pi * zl) * _lanczos_right(1.0 - zl))
    return out[0] if scalar else out


def complex_beta(x, y):
    return complex_gamma(x) * complex_gamma(y) / complex_gamma(x + y)


# Woods-Saxon ---------------------------------------------------------------

@dataclass(frozen=True)
class WsParameters:
    W: float
    a: float = 10.0
    L: float = 1.0
    M: float = 1.0

    def derived(self, E: float):
        """(s, g, lambda) at energy E."""
        s = math.sqrt(self.M**2 - E**2) / self.a
        g = 1j * math.sqrt((E + self.W) ** 2 - self.M**2) / self.a
        lam = 1j * self.W / self.a
        return s, g, lam


def ws_sides(E: float, params: WsParameters):
    """Left and right hand sides of the squared Beta-function condition."""
    s, g, lam = params.derived(E)
    lhs = complex_beta(-2 * g, g + s - lam) ** 2 / complex_beta(2 * g, -g + s + lam) ** 2
    rhs = np.exp(4 * g * params.a * params.L) * ((s - g) ** 2 - lam**2) / ((s + g) ** 2 - lam**2)
    return complex(lhs), complex(rhs)


def ws_phase(E, params: WsParameters):
    """Unimodular Q(E) whose values +1 / -1 mark even / odd bound states.

    For imaginary g both sides of the squared condition are unimodular, so
    only their phase carries information.  Q is the square root of LHS/RHS
    taken without squaring the Beta functions.  Accepts arrays.
    """
    M, W, a = params.M, params.W, params.a
    E = np.asarray(E, dtype=float)
    if np.any(np.abs(E) >= M):
        raise DomainError("E outside the gap")
    if np.any(E + W <= M):
        raise DomainError("E + W <= M: no oscillatory region inside the well")
    s = np.sqrt(M * M - E * E) / a
    kappa = np.sqrt((E + W) ** 2 - M * M)
    g = 1j * kappa / a
    lam = 1j * W / a
    b = complex_beta(-2 * g, g + s - lam)
    z = (s - g) ** 2 - lam**2
    q = (b / np.conj(b)) * np.exp(-2j * kappa * params.L) * np.conj(z) / np.abs(z)
    return complex(q) if q.ndim == 0 else q


def ws_residual(E, params: WsParameters):
    """Im Q(E); zero exactly at the bound-state energies."""
    q = ws_phase(E, params)
    return float(q.imag) if np.ndim(q) == 0 else q.imag


def solve_ws_bound_states(params: WsParameters, n_grid: int = 10_000, xtol: float = 1e-12) -> list[float]:
    M, W = params.M, params.W
    if W <= 0:
        return []
    lo = max(-M, M - W)
    # keep clear of the endpoint singularities (s = 0, kappa = 0)
    eps = 1e-9 * M
    Es = np.linspace(lo + eps, M - eps, n_grid)
    r = ws_residual(Es, params)
    roots = [float(E) for E, v in zip(Es, r) if v == 0.0]
    for i in np.nonzero(np.sign(r[:-1]) * np.sign(r[1:]) < 0)[0]:
        roots.append(brentq(ws_residual, Es[i], Es[i + 1], args=(params,), xtol=xtol))
    return sorted(roots)


def ws_parity(E: float, params: WsParameters) -> int:
    """+1 for an even bound state, -1 for an odd one (sign of Re Q at a root)."""
    return 1 if ws_phase(E, params).real > 0 else -1


def track_ws_ground_state(W_grid, a: float = 10.0, L: float = 1.0, M: float = 1.0) -> np.ndarray:
    """Lowest even root followed along ascending W; nan before it binds and after it dives.

    The ground-state energy falls monotonically with W.  Once it has reached
    -M the lowest even root left is the next excited even state, so any jump
    upwards ends the track.
    """
    out = np.full(len(W_grid), np.nan)
    prev = None
    for i, W in enumerate(W_grid):
        params = WsParameters(float(W), a, L, M)
        even = [E for E in solve_ws_bound_states(params) if ws_parity(E, params) > 0]
        if not even:
            if prev is not None:
                break
            continue
        if prev is not None and even[0] > prev:
            break
        out[i] = prev = even[0]
    return out


# delta potential --------------------------------------------------------------

def continuum_delta_energy(phi: float, M: float = 1.0) -> float:
    return M * (1 - phi**2) / (1 + phi**2)


def delta_cubic_roots(phi: float, M: float, J: float) -> np.ndarray:
    """Real roots of (M - l)(M^2 + J^2 - l^2) = phi^2 (M + l), ascending.

    Trigonometric solution of the depressed cubic.  phi is the on-site energy.
    """
    # l^3 - M l^2 - (M^2 + J^2 + phi^2) l + M (M^2 + J^2 - phi^2) = 0
    b = -M
    c = -(M * M + J * J + phi * phi)
    d = M * (M * M + J * J - phi * phi)
    p = c - b * b / 3
    q = 2 * b**3 / 27 - b * c / 3 + d
    if p >= 0:  # only at M = J = phi = 0
        return np.array([-b / 3] * 3)
    r = 2 * math.sqrt(-p / 3)
    arg = 3 * q / (p * r)
    theta = math.acos(max(-1.0, min(1.0, arg))) / 3
    ks = np.arange(3)
    return np.sort(r * np.cos(theta - 2 * np.pi * ks / 3) - b / 3)


@dataclass(frozen=True)
class DeltaLatticeSolution:
    lam: float
    phi: float
    M: float
    J: float
    branch: str  # "FromUpperEdge" or "FromLowerEdge"


def lattice_delta_energy(phi: float, M: float = 1.0, J: float = 1.0, step: float = 0.01) -> DeltaLatticeSolution:
    """Gap eigenvalue for a single-site potential of on-site energy phi.

    phi < 0 binds a state below the upper band edge (site with +M).  phi > 0
    is mapped by l -> -l, phi -> -phi and describes a site with -M, whose
    state rises from the lower edge.  The root is followed from phi = 0 in
    steps of at most `step` in phi/J.
    """
    if phi == 0:
        return DeltaLatticeSolution(M, 0.0, M, J, "FromUpperEdge")
    u = abs(phi) / J
    n = max(1, int(math.ceil(u / step)))
    lam = M
    for v in np.linspace(0.0, abs(phi), n + 1)[1:]:
        roots = delta_cubic_roots(v, M, J)
        lam = roots[np.argmin(np.abs(roots - lam))]
    if phi < 0:
        return DeltaLatticeSolution(float(lam), phi, M, J, "FromUpperEdge")
    return DeltaLatticeSolution(float(-lam), phi, M, J, "FromLowerEdge")


def delta_gap_integral(lam: float, M: float, J: float) -> float:
    """Closed form of the zone average of 1/(l^2 - M^2 - J^2 cos^2)."""
    return -1.0 / (math.sqrt(M * M - lam * lam) * math.sqrt(M * M + J * J - lam * lam))


@dataclass(frozen=True)
class DeltaProfile:
    p: np.ndarray
    A: np.ndarray
    B: np.ndarray
    Abar: float
    Bbar: float
    norm: float
    momentum: float


def _profile(theta, sol: DeltaLatticeSolution):
    lam, phi, M, J = sol.lam, sol.phi, sol.M, sol.J
    det = lam * lam - M * M - (J * np.cos(theta)) ** 2
    if sol.branch == "FromUpperEdge":  # Bbar = 0
        return phi * (lam + M) / det, phi * J * np.cos(theta) / det
    return phi * J * np.cos(theta) / det, phi * (lam - M) / det  # Abar = 0


def delta_momentum_profile(sol: DeltaLatticeSolution, ell: float, p_grid, n_quad: int = 4096) -> DeltaProfile:
    """Momentum amplitudes A(p), B(p) of the delta bound state.

    Averages are taken over a full period of l*p (uniform periodic grid,
    spectrally accurate).  Over the full period A carries only even and B
    only odd lattice harmonics (or the reverse on the lower branch), which
    is what makes one of Abar, Bbar and the mean momentum vanish.
    """
    if not abs(sol.lam) < sol.M:
        raise DomainError(f"lambda={sol.lam} not inside the gap")
    theta = -np.pi + 2 * np.pi * np.arange(n_quad) / n_quad
    a, b = _profile(theta, sol)
    scale = 1.0 / math.sqrt(float(np.mean(a * a + b * b)))
    lead = np.mean(a) if sol.branch == "FromUpperEdge" else np.mean(b)
    scale = math.copysign(scale, lead)
    a, b = a * scale, b * scale
    A, B = _profile(ell * np.asarray(p_grid, dtype=float), sol)
    return DeltaProfile(
        p=np.asarray(p_grid, dtype=float),
        A=A * scale,
        B=B * scale,
        Abar=float(np.mean(a)),
        Bbar=float(np.mean(b)),
        norm=float(np.mean(a * a + b * b)),
        momentum=float(np.mean((a * a + b * b) * sol.J * np.cos(theta))),
    )


def two_sublattice_delta_operator(phi: float, num_sites: int, spacing: float, M: float = 1.0,
                                  J: float | None = None, site: int | None = None) -> TridiagonalOperator:
    """Delta acting on both site types at once, in the momentum-space sense.

    With the mixing written as J cos(l p) over a full period, the a- and
    b-operators at the same cell index live on two interleaved, decoupled
    staggered chains.  The potential then sits on a +M site of one copy and
    on a -M site of the other; the two copies are stacked with a zero bond.
    """
    chain = ChainModel(num_sites, spacing, M, J)
    site = num_sites // 2 if site is None else site
    if site % 2:
        site -= 1
    stag = chain.staggering
    d1 = M * stag
    d2 = -M * stag
    d1 = d1.copy()
    d2 = d2.copy()
    d1[site] += phi / spacing
    d2[site] += phi / spacing
    e = np.full(num_sites - 1, -0.5 * chain.hopping)
    return TridiagonalOperator(np.concatenate([d1, d2]), np.concatenate([e, [0.0], e]))
