"""Staggered tight-binding chain: geometry, external potentials, ramps.

Site n sits at x_n = (n - N/2) * spacing and carries the on-site energy
Phi_n + (-1)^n M.  Nearest neighbours are coupled by -J/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigurationError, DegeneracyError


@dataclass(frozen=True)
class ChainModel:
    num_sites: int
    spacing: float
    mass: float = 1.0
    hopping: float | None = None  # defaults to 1/spacing
    boundary: str = "open"

    def __post_init__(self):
        problems = []
        if int(self.num_sites) != self.num_sites or self.num_sites < 4 or self.num_sites % 2:
            problems.append(f"num_sites must be an even integer >= 4, got {self.num_sites}")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            problems.append(f"spacing must be positive, got {self.spacing}")
        if not (self.mass >= 0 and math.isfinite(self.mass)):
            problems.append(f"mass must be non-negative, got {self.mass}")
        if self.hopping is None and not problems:
            object.__setattr__(self, "hopping", 1.0 / self.spacing)
        elif self.hopping is not None and not (self.hopping > 0 and math.isfinite(self.hopping)):
            problems.append(f"hopping must be positive, got {self.hopping}")
        if self.boundary != "open":
            problems.append(f"only open boundaries are supported, got {self.boundary!r}")
        if problems:
            raise ConfigurationError("; ".join(problems), problems)
        object.__setattr__(self, "num_sites", int(self.num_sites))

    @classmethod
    def from_box(cls, box: float, spacing: float, **kw) -> "ChainModel":
        """Chain covering a physical length `box`, rounded up to an even site count."""
        n = int(round(box / spacing))
        n += n % 2
        return cls(max(n, 4), spacing, **kw)

    @property
    def positions(self) -> np.ndarray:
        return (np.arange(self.num_sites) - self.num_sites // 2) * self.spacing

    @property
    def staggering(self) -> np.ndarray:
        return np.where(np.arange(self.num_sites) % 2 == 0, 1.0, -1.0)


# potential shapes ----------------------------------------------------------

@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class WoodsSaxon:
    W: float
    a: float = 10.0
    L: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.L > 0):
            raise ConfigurationError(f"Woods-Saxon needs a > 0 and L > 0, got a={self.a}, L={self.L}")

    def __call__(self, x):
        # clipping keeps exp finite for very steep walls
        arg = np.clip(self.a * (np.abs(x) - self.L), -700.0, 700.0)
        return -self.W / (1.0 + np.exp(arg))


@dataclass(frozen=True)
class DeltaSite:
    phi: float
    site: int


@dataclass(frozen=True)
class Linear:
    """Constant field E inside the half-open site window [start, stop)."""
    field: float
    window: tuple[int, int]


PotentialSpec = Union[Zero, WoodsSaxon, DeltaSite, Linear]


def with_strength(spec: PotentialSpec, value: float) -> PotentialSpec:
    """Same shape with its amplitude replaced (W, phi or field)."""
    if isinstance(spec, WoodsSaxon):
        return WoodsSaxon(value, spec.a, spec.L)
    if isinstance(spec, DeltaSite):
        return DeltaSite(value, spec.site)
    if isinstance(spec, Linear):
        return Linear(value, spec.window)
    raise ConfigurationError(f"{type(spec).__name__} has no strength parameter")


def sample_potential(spec: PotentialSpec, chain: ChainModel) -> np.ndarray:
    n = chain.num_sites
    x = chain.positions
    if isinstance(spec, Zero):
        return np.zeros(n)
    if isinstance(spec, WoodsSaxon):
        return spec(x)
    if isinstance(spec, DeltaSite):
        if not 0 <= spec.site < n:
            raise ConfigurationError(f"delta site {spec.site} outside [0, {n})")
        out = np.zeros(n)
        out[spec.site] = spec.phi / chain.spacing
        return out
    if isinstance(spec, Linear):
        lo, hi = spec.window
        if not (0 <= lo < hi <= n):
            raise ConfigurationError(f"field window {spec.window} not contained in [0, {n})")
        xc = np.clip(x, x[lo], x[hi - 1])
        return spec.field * xc
    raise ConfigurationError(f"unknown potential shape {spec!r}")


# ramps ----------------------------------------------------------------------

@dataclass(frozen=True)
class RampProfile:
    t_on: float
    t_plateau: float
    t_off: float
    shape: str = "smoothcos"

    def __post_init__(self):
        if min(self.t_on, self.t_plateau, self.t_off) < 0:
            raise ConfigurationError("ramp durations must be non-negative")
        if self.shape not in ("smoothcos", "linear"):
            raise ConfigurationError(f"unknown ramp shape {self.shape!r}")

    @property
    def total(self) -> float:
        return self.t_on + self.t_plateau + self.t_off

    def _rise(self, s):
        s = np.clip(s, 0.0, 1.0)
        if self.shape == "linear":
            return s
        return 0.5 * (1.0 - np.cos(np.pi * s))

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        t1 = self.t_on
        t2 = self.t_on + self.t_plateau
        on = self._rise(t / t1) if t1 > 0 else np.ones_like(t)
        off = self._rise((self.total - t) / self.t_off) if self.t_off > 0 else np.ones_like(t)
        env = np.where(t < t1, on, np.where(t <= t2, 1.0, off))
        env = np.where((t <= 0) | (t >= self.total), 0.0, env)
        return env if env.ndim else float(env)

    def integral(self, t0: float = 0.0, t1: float | None = None) -> float:
        """Integral of the envelope, used for the global phase of constant shifts."""
        t1 = self.total if t1 is None else t1
        breaks = sorted({t0, t1, *[b for b in (self.t_on, self.t_on + self.t_plateau) if t0 < b < t1]})
        total = 0.0
        xg, wg = np.polynomial.legendre.leggauss(64)
        for a, b in zip(breaks[:-1], breaks[1:]):
            t = 0.5 * (b - a) * xg + 0.5 * (b + a)
            total += 0.5 * (b - a) * float(np.sum(wg * self.envelope(t)))
        return total


# the operator ---------------------------------------------------------------

@dataclass(frozen=True)
class TridiagonalOperator:
    diagonal: np.ndarray
    off_diagonal: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diagonal, dtype=float)
        e = np.asarray(self.off_diagonal, dtype=float)
        if d.ndim != 1 or e.shape != (max(len(d) - 1, 0),):
            raise ConfigurationError("off-diagonal must have length N-1")
        object.__setattr__(self, "diagonal", d)
        object.__setattr__(self, "off_diagonal", e)

    @property
    def size(self) -> int:
        return len(self.diagonal)

    def dense(self) -> np.ndarray:
        return np.diag(self.diagonal) + np.diag(self.off_diagonal, 1) + np.diag(self.off_diagonal, -1)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        d = self.diagonal.reshape((-1,) + (1,) * (v.ndim - 1))
        e = self.off_diagonal.reshape((-1,) + (1,) * (v.ndim - 1))
        out = d * v
        out[1:] += e * v[:-1]
        out[:-1] += e * v[1:]
        return out

    def norm_bound(self) -> float:
        """Gershgorin bound on the spectral radius."""
        r = np.abs(self.diagonal).copy()
        r[1:] += np.abs(self.off_diagonal)
        r[:-1] += np.abs(self.off_diagonal)
        return float(r.max())


def build_hamiltonian(chain: ChainModel, phi: np.ndarray) -> TridiagonalOperator:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (chain.num_sites,):
        raise ConfigurationError(f"potential has length {phi.shape}, chain has {chain.num_sites} sites")
    return TridiagonalOperator(phi + chain.mass * chain.staggering,
                               np.full(chain.num_sites - 1, -0.5 * chain.hopping))


def free_dispersion(p, M: float, ell: float):
    return np.sqrt(M * M + np.cos(ell * np.asarray(p)) ** 2 / ell**2)


def momentum_diagonalizer(p: float, M: float, ell: float) -> np.ndarray:
    """U(p) with U K U^T = diag(E, -E) for K = [[M, c], [c, -M]], c = cos(l p)/l."""
    E = float(free_dispersion(p, M, ell))
    if E <= 1e-12 * (M + 1.0 / ell):
        raise DegeneracyError(f"E(p) = 0 at p={p}: massless zone edge has no unique mixing")
    c = math.cos(ell * p) / ell
    a = math.sqrt(E + M)
    b = math.sqrt(max(E - M, 0.0))
    if c < 0:  # keeps the rows eigenvectors on the far side of the zone
        b = -b
    return np.array([[a, b], [-b, a]]) / math.sqrt(2.0 * E)
