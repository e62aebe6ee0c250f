"""Bichromatic optical lattice: WKB and plane-wave band structure, effective
Dirac parameters, Wannier orbitals and the experimental scale hierarchy.

Units: 2 M_atom = hbar = 1, so the recoil energy is E_R = k^2.  With the
default k = 1 energies are in units of E_R and the chain spacing is
l = pi / (2k).
"""
from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq, least_squares, minimize_scalar

from .errors import ConvergenceError, DomainError, FitError, GaugeError


@dataclass(frozen=True)
class BichromaticPotential:
    W0: float
    dW: float
    k: float = 1.0

    def __post_init__(self):
        if not self.W0 > 0 or self.dW < 0:
            raise DomainError(f"need W0 > 0 and dW >= 0, got W0={self.W0}, dW={self.dW}")

    @property
    def ell(self) -> float:
        return math.pi / (2 * self.k)

    @property
    def recoil(self) -> float:
        return self.k**2

    @property
    def strong_perturbation(self) -> bool:
        return self.dW > self.W0 / 3

    def __call__(self, x):
        return self.W0 * np.sin(2 * self.k * x) ** 2 + self.dW * np.sin(self.k * x) ** 2

    def minima(self):
        """(x, W) of the deeper and the shallower well in one period."""
        return (0.0, 0.0), (self.ell, self.dW)

    def barrier(self):
        """Position and height of the barrier between x = 0 and x = l."""
        return _barrier(self)


@lru_cache(maxsize=256)
def _barrier(pot: BichromaticPotential):
    r = minimize_scalar(lambda x: -pot(x), bounds=(0.0, pot.ell), method="bounded",
                        options={"xatol": 1e-13})
    return float(r.x), float(pot(r.x))


# WKB --------------------------------------------------------------------------

_QUAD_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(n):
    if n not in _QUAD_CACHE:
        _QUAD_CACHE[n] = leggauss(n)
    return _QUAD_CACHE[n]


def sqrt_integral(f, y: float, z: float, rtol: float = 1e-10, atol: float = 1e-14, n0: int = 64,
                  n_max: int = 4096) -> float:
    """int_y^z sqrt(f(x)) dx for f with simple zeros at both ends.

    x = y + (z - y) sin^2(theta) turns the square-root end points into a
    smooth integrand; Gauss-Legendre with doubling until `rtol`.
    """
    prev = None
    n = n0
    while n <= n_max:
        xg, wg = _gauss(n)
        th = (xg + 1) * np.pi / 4
        x = y + (z - y) * np.sin(th) ** 2
        jac = (z - y) * np.sin(2 * th)
        val = float(np.sum(wg * np.sqrt(np.maximum(f(x), 0.0)) * jac) * np.pi / 4)
        if prev is not None and abs(val - prev) <= rtol * abs(val) + atol:
            return val
        prev = val
        n *= 2
    raise ConvergenceError(f"turning-point quadrature did not reach rtol={rtol}")


@dataclass(frozen=True)
class WkbData:
    energy: float
    turning_points: tuple[tuple[float, float], tuple[float, float]]
    phases: tuple[float, float]
    sum_phase: float
    diff_phase: float
    transmission: float


def wkb_phases(E: float, pot: BichromaticPotential) -> WkbData:
    xb, top = pot.barrier()
    if E >= top:
        raise DomainError(f"E={E} at or above the barrier top {top}: outside the single-band WKB regime")
    if E <= pot.dW:
        raise DomainError(f"E={E} below the shallower well bottom {pot.dW}: its phase is undefined")
    g = lambda x: pot(x) - E
    ell = pot.ell
    z1 = brentq(g, 0.0, xb, xtol=1e-14)
    y1 = -z1
    y2 = brentq(g, xb, ell, xtol=1e-14)
    z2 = 2 * ell - y2  # W(2l - x) = W(x)
    inside = lambda x: E - pot(x)
    p1 = sqrt_integral(inside, y1, z1)
    p2 = sqrt_integral(inside, y2, z2)
    theta = sqrt_integral(lambda x: pot(x) - E, z1, y2)
    return WkbData(E, ((y1, z1), (y2, z2)), (p1, p2), p1 + p2, p1 - p2, math.exp(-2 * theta))


def wkb_residual(E: float, p: float, pot: BichromaticPotential, half_difference: bool = True) -> float:
    """cos^2(Phi/2) - (1-T) sin^2(dPhi/2) - T cos^2(l p).

    The transfer-matrix derivation gives the half difference dPhi/2; with
    half_difference=False the full dPhi is used instead (for comparison).
    """
    d = wkb_phases(E, pot)
    s = math.sin(d.diff_phase / 2 if half_difference else d.diff_phase)
    return (math.cos(d.sum_phase / 2) ** 2 - (1 - d.transmission) * s * s
            - d.transmission * math.cos(pot.ell * p) ** 2)


@dataclass(frozen=True)
class BandStructure:
    p: np.ndarray
    E_minus: np.ndarray
    E_plus: np.ndarray
    source: str
    ell: float

    @property
    def gap(self) -> float:
        return float(np.min(self.E_plus) - np.max(self.E_minus))

    @property
    def center(self) -> float:
        return float(0.5 * (np.min(self.E_plus) + np.max(self.E_minus)))

    @property
    def bandwidth(self) -> float:
        return float(np.max(self.E_plus) - np.min(self.E_minus))


def _branch_terms(pot, E, p, half_difference):
    d = wkb_phases(E, pot)
    s = math.sin(d.diff_phase / 2 if half_difference else d.diff_phase)
    R2 = (1 - d.transmission) * s * s + d.transmission * math.cos(pot.ell * p) ** 2
    return math.cos(d.sum_phase / 2), math.sqrt(R2)


def wkb_band_solve(pot: BichromaticPotential, p_grid, n_scan: int = 400,
                   half_difference: bool = True) -> BandStructure:
    """Lowest pair of sub-bands from the WKB spectral condition.

    The squared condition is split into cos(Phi/2) = +R (lower sub-band) and
    cos(Phi/2) = -R (upper sub-band), which keeps both roots simple even
    where they touch (dW = 0 at the zone edge).  Phases do not depend on p,
    so they are tabulated once on the scan grid; each root is then refined
    by Brent's method.
    """
    _, top = pot.barrier()
    span = top - pot.dW
    Es = np.linspace(pot.dW + 1e-6 * span, top - 1e-6 * span, n_scan)
    data = [wkb_phases(E, pot) for E in Es]
    c = np.array([math.cos(d.sum_phase / 2) for d in data])
    T = np.array([d.transmission for d in data])
    sd = np.array([math.sin(d.diff_phase / 2 if half_difference else d.diff_phase) for d in data])
    p_grid = np.asarray(p_grid, dtype=float)
    out = np.empty((len(p_grid), 2))
    for i, p in enumerate(p_grid):
        R = np.sqrt((1 - T) * sd * sd + T * math.cos(pot.ell * p) ** 2)
        for j, sign in enumerate((+1, -1)):
            h = c - sign * R
            idx = np.nonzero(np.sign(h[:-1]) * np.sign(h[1:]) <= 0)[0]
            if not len(idx):
                raise DomainError(f"no WKB band root at p={p} below the barrier top")
            a = idx[0]
            f = lambda E: (lambda cr: cr[0] - sign * cr[1])(_branch_terms(pot, E, p, half_difference))
            out[i, j] = Es[a] if h[a] == 0 else brentq(f, Es[a], Es[a + 1], xtol=1e-13)
    return BandStructure(p_grid, out[:, 0], out[:, 1], "WKB", pot.ell)


# exact Bloch --------------------------------------------------------------------

def _bloch_matrix(pot: BichromaticPotential, p: float, n_planewaves: int):
    nm = n_planewaves // 2
    m = np.arange(-nm, nm + 1)
    k = pot.k
    H = np.diag((p + 2 * k * m) ** 2 + pot.W0 / 2 + pot.dW / 2)
    H += np.diag(np.full(len(m) - 1, -pot.dW / 4), 1) + np.diag(np.full(len(m) - 1, -pot.dW / 4), -1)
    H += np.diag(np.full(len(m) - 2, -pot.W0 / 4), 2) + np.diag(np.full(len(m) - 2, -pot.W0 / 4), -2)
    return H, m


def bloch_states(pot: BichromaticPotential, p: float, n_bands: int = 2, n_planewaves: int = 64):
    H, m = _bloch_matrix(pot, p, n_planewaves)
    w, v = np.linalg.eigh(H)
    return w[:n_bands], v[:, :n_bands], m


def exact_bloch(pot: BichromaticPotential, p_grid, n_bands: int = 2, n_planewaves: int = 64,
                tol: float = 1e-8) -> BandStructure:
    """Plane-wave (central equation) bands with a doubling convergence check."""
    if n_planewaves < 64:
        raise ConvergenceError("n_planewaves must be >= 64")
    p_grid = np.asarray(p_grid, dtype=float)
    E = np.array([bloch_states(pot, p, n_bands, n_planewaves)[0] for p in p_grid])
    E2 = np.array([bloch_states(pot, p, n_bands, 2 * n_planewaves)[0] for p in p_grid])
    err = float(np.max(np.abs(E - E2)))
    if err > tol * pot.recoil:
        raise ConvergenceError(f"bands change by {err:.3e} E_R under plane-wave doubling")
    return BandStructure(p_grid, E[:, 0], E[:, 1] if n_bands > 1 else E[:, 0], "ExactBloch", pot.ell)


# effective Dirac parameters -------------------------------------------------------

@dataclass(frozen=True)
class EffectiveParams:
    J_fit: float
    M_fit: float
    E0_fit: float
    rms: float  # fit residual
    J_wkb: float | None = None
    M_wkb: float | None = None
    E0_wkb: float | None = None
    alpha: float | None = None
    alpha_sensitivity: dict = field(default_factory=dict)


def dirac_bands(p, J, M, E0, ell):
    e = np.sqrt(M * M + (J * np.cos(ell * np.asarray(p))) ** 2)
    return E0 - e, E0 + e


def fit_dirac_form(band: BandStructure):
    p = band.p
    if not (np.all(np.isfinite(band.E_minus)) and np.all(np.isfinite(band.E_plus))):
        raise FitError(f"{band.source} bands contain non-finite energies")
    guess = [max(0.5 * band.bandwidth, 1e-6), max(0.5 * band.gap, 1e-6), band.center]

    def resid(x):
        lo, hi = dirac_bands(p, x[0], x[1], x[2], band.ell)
        return np.concatenate([lo - band.E_minus, hi - band.E_plus])

    sol = least_squares(resid, guess, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if not sol.success or not np.all(np.isfinite(sol.x)):
        raise FitError(f"Dirac-form fit failed ({sol.message}); residuals {resid(sol.x)}")
    r = resid(sol.x)
    return abs(float(sol.x[0])), abs(float(sol.x[1])), float(sol.x[2]), float(np.sqrt(np.mean(r * r)))


def wkb_linearization(pot: BichromaticPotential, band: BandStructure, window: float = 0.1):
    """E0 with Phi(E0) = pi and the slope alpha of Phi/2 fitted over E0 +- window * bandwidth."""
    f = lambda E: wkb_phases(E, pot).sum_phase - math.pi
    lo, hi = float(np.min(band.E_minus)), float(np.max(band.E_plus))
    E0 = brentq(f, lo, hi, xtol=1e-13)
    half = window * (hi - lo)
    Es = np.linspace(E0 - half, E0 + half, 21)
    ph = np.array([wkb_phases(E, pot).sum_phase / 2 for E in Es])
    alpha = float(np.polyfit(Es - E0, ph, 1)[0])
    return E0, alpha


def effective_params(band: BandStructure, pot: BichromaticPotential | None = None) -> EffectiveParams:
    """Least-squares (J, M, E0) and, given the potential, the WKB-side values.

    The WKB side uses cos(Phi/2) ~ -alpha (E - E0), which turns the band
    condition into (E - E0)^2 = [(1-T) sin^2(dPhi/2) + T cos^2(l p)] / alpha^2,
    so J = sqrt(T)/alpha and M = sqrt(1-T) |sin(dPhi/2)| / alpha.
    """
    J, M, E0, rms = fit_dirac_form(band)
    if pot is None:
        return EffectiveParams(J, M, E0, rms)
    E0w, alpha = wkb_linearization(pot, band)
    d = wkb_phases(E0w, pot)
    Jw = math.sqrt(d.transmission) / alpha
    Mw = math.sqrt(1 - d.transmission) * abs(math.sin(d.diff_phase / 2)) / alpha
    sens = {w: wkb_linearization(pot, band, w)[1] for w in (0.05, 0.2)}
    return EffectiveParams(J, M, E0, rms, Jw, Mw, E0w, alpha, sens)


def wkb_hopping_estimate(W0: float, E_R: float) -> float:
    """Closed-form deep-lattice estimate (4/pi) sqrt(W0 E_R) exp(-(pi/4) sqrt(W0/E_R))."""
    return 4 / math.pi * math.sqrt(W0 * E_R) * math.exp(-math.pi / 4 * math.sqrt(W0 / E_R))


def band_shape_rms(a: BandStructure, b: BandStructure) -> float:
    """RMS difference of the two band pairs after removing their means, per bandwidth."""
    da = np.concatenate([a.E_minus, a.E_plus])
    db = np.concatenate([b.E_minus, b.E_plus])
    diff = (da - da.mean()) - (db - db.mean())
    return float(np.sqrt(np.mean(diff**2)) / b.bandwidth)


# Wannier orbitals ----------------------------------------------------------------

@dataclass(frozen=True)
class Orbital:
    """Wannier-type orbital as plane-wave coefficients on a supercell.

    coeffs[j, m] multiplies exp(i (p_j + 2 k m) x) / sqrt(L_supercell).
    """
    coeffs: np.ndarray
    p: np.ndarray
    m: np.ndarray
    k: float
    center: float

    def shifted(self, cells: int) -> "Orbital":
        R = cells * math.pi / self.k
        return Orbital(self.coeffs * np.exp(-1j * self.p * R)[:, None], self.p, self.m, self.k, self.center + R)

    def inner(self, other: "Orbital") -> complex:
        return complex(np.sum(np.conj(self.coeffs) * other.coeffs))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        q = (self.p[:, None] + 2 * self.k * self.m[None, :]).ravel()
        c = self.coeffs.ravel()
        L = len(self.p) * math.pi / self.k
        out = np.empty(x.shape, dtype=complex)
        for s in range(0, x.size, 512):
            xs = x.ravel()[s:s + 512]
            out.ravel()[s:s + 512] = np.exp(1j * np.outer(xs, q)) @ c
        return out / math.sqrt(L)


@dataclass(frozen=True)
class WannierSet:
    a: Orbital  # on a shallower (+M) well, x = l
    b: Orbital  # on a deeper (-M) well, x = 0
    psi: Orbital  # lower sub-band Wannier function
    chi: Orbital  # upper sub-band Wannier function
    M: float
    num_cells: int
    spreads: dict
    decay_lengths: dict


def _spread_and_decay(orb: Orbital, pot: BichromaticPotential, n_cells: int):
    L = n_cells * math.pi / pot.k
    x = orb.center + np.linspace(-L / 2, L / 2, n_cells * 48, endpoint=False)
    f = orb(x)
    d = np.abs(f) ** 2
    d /= d.sum()
    mu = float(np.sum(d * x))
    spread = float(math.sqrt(np.sum(d * (x - mu) ** 2)))
    # amplitudes at the well centres along one side, for the decay length
    n = np.arange(1, n_cells // 2)
    amp = np.abs(orb(orb.center + n * pot.ell))
    good = amp > 1e-13 * np.max(np.abs(f))
    decay = float("inf")
    if good.sum() >= 3:
        slope = np.polyfit(n[good] * pot.ell, np.log(amp[good]), 1)[0]
        decay = float(-1 / slope) if slope < 0 else float("inf")
    return spread, decay


def compute_wannier(pot: BichromaticPotential, num_cells: int = 48, n_planewaves: int = 64,
                    gauge_tol: float = 1e-8) -> WannierSet:
    """Single-band and mixed (site) orbitals for the split lowest band.

    Gauge: psi(p) is real and positive at the deep-well centre x = 0; the
    upper sub-band is continued from the unsplit band, chi(p) = psi(p + 2k),
    so exp(-i (p + 2k) l) chi_p(l) is real and positive.  The site orbitals
    follow from (a, b) = U(p)^T (chi, psi) with U(p) built from the half
    splitting E(p) = (E+ - E-)/2 and M = min_p E(p).
    """
    k = pot.k
    ell = pot.ell
    ps = -k + np.arange(num_cells) * 2 * k / num_cells
    L = num_cells * math.pi / k
    psi_c, chi_c, half = [], [], []
    m = None
    for p in ps:
        w, v, m = bloch_states(pot, p, 2, n_planewaves)
        q = p + 2 * k * m
        lo = v[:, 0].astype(complex)
        up = v[:, 1].astype(complex)
        z0 = np.sum(lo) / math.sqrt(L)
        z1 = np.sum(up * np.exp(1j * q * ell)) * np.exp(-1j * (p + 2 * k) * ell) / math.sqrt(L)
        if abs(z0) < gauge_tol or abs(z1) < gauge_tol:
            raise GaugeError(f"Bloch amplitude vanishes at the reference point for p={p}: "
                             f"|psi(0)|={abs(z0):.2e}, |chi(l)|={abs(z1):.2e}")
        psi_c.append(lo * np.conj(z0) / abs(z0))
        chi_c.append(up * np.conj(z1) / abs(z1))
        half.append(0.5 * (w[1] - w[0]))
    psi_c = np.array(psi_c)
    chi_c = np.array(chi_c)
    half = np.array(half)
    M = float(half.min())
    a_c = np.empty_like(psi_c)
    b_c = np.empty_like(psi_c)
    for j, E in enumerate(half):
        sq = math.sqrt(2 * E)
        u, s = math.sqrt(E + M) / sq, math.sqrt(max(E - M, 0.0)) / sq
        a_c[j] = u * chi_c[j] - s * psi_c[j]
        b_c[j] = s * chi_c[j] + u * psi_c[j]
    norm = 1 / math.sqrt(num_cells)
    phase_l = np.exp(-1j * ps * ell)[:, None]
    a = Orbital(a_c * phase_l * norm, ps, m, k, ell)
    b = Orbital(b_c * norm, ps, m, k, 0.0)
    psi = Orbital(psi_c * norm, ps, m, k, 0.0)
    chi = Orbital(chi_c * phase_l * norm, ps, m, k, ell)
    spreads, decays = {}, {}
    for name, orb in (("a", a), ("b", b), ("psi", psi), ("chi", chi)):
        spreads[name], decays[name] = _spread_and_decay(orb, pot, num_cells)
    return WannierSet(a, b, psi, chi, M, num_cells, spreads, decays)


def site_centred(orb: Orbital, center: float) -> Orbital:
    """Same Bloch content re-centred on another well (phase exp(-i p dx))."""
    dx = center - orb.center
    return Orbital(orb.coeffs * np.exp(-1j * orb.p * dx)[:, None], orb.p, orb.m, orb.k, center)


# physical scales -------------------------------------------------------------------

@dataclass(frozen=True)
class PhysicalParams:
    E_R: float
    W0: float
    dW: float
    temperature: float | None = None
    unit: str = "uK"


@dataclass(frozen=True)
class HierarchyReport:
    omega_osc: float
    J: float
    M: float
    temperature: float | None
    ratio_threshold: float
    checks: tuple  # (label, ratio, passed)
    unit: str

    @property
    def passed(self) -> bool:
        return all(ok for _, _, ok in self.checks)


def check_hierarchy(phys: PhysicalParams, ratio: float = 3.0) -> HierarchyReport:
    """omega_osc >> J >> M >> T, each >> read as a ratio of at least `ratio`.

    omega_osc is the harmonic frequency of W0 sin^2(2kx) at a minimum,
    4 sqrt(W0 E_R) in these units; M is dW/2.
    """
    for name in ("E_R", "W0", "dW"):
        if not getattr(phys, name) > 0:
            raise DomainError(f"{name} must be positive")
    J = wkb_hopping_estimate(phys.W0, phys.E_R)
    M = phys.dW / 2
    omega = 4 * math.sqrt(phys.W0 * phys.E_R)
    checks = [("omega_osc/J", omega / J, omega / J >= ratio), ("J/M", J / M, J / M >= ratio)]
    if phys.temperature is not None:
        r = M / phys.temperature if phys.temperature > 0 else float("inf")
        checks.append(("M/T", r, r >= ratio))
    return HierarchyReport(omega, J, M, phys.temperature, ratio, tuple(checks), phys.unit)
