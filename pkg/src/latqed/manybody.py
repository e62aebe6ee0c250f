"""Exact diagonalization of small chains in the occupation-number basis.

States are bitmasks (bit n set = site n occupied) with fixed particle
number, kept in ascending integer order.  Fermions pick up the parity of
the occupied sites strictly between the two ends of a hop; hard-core bosons
use the same matrix without that sign.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .errors import ConfigurationError, DegeneracyError, PreconditionError

MAX_SITES = 16
MAX_DIMENSION = 200_000
KINDS = ("FermiHopping", "HardCoreBoseHopping")


@dataclass(frozen=True)
class FockBasis:
    num_sites: int
    num_particles: int
    states: np.ndarray

    @classmethod
    def build(cls, num_sites: int, num_particles: int) -> "FockBasis":
        if not 1 <= num_sites <= MAX_SITES:
            raise PreconditionError(f"num_sites={num_sites} outside [1, {MAX_SITES}]")
        if not 0 <= num_particles <= num_sites:
            raise PreconditionError(f"num_particles={num_particles} not in [0, {num_sites}]")
        dim = math.comb(num_sites, num_particles)
        if dim > MAX_DIMENSION:
            raise PreconditionError(f"Fock dimension {dim} exceeds {MAX_DIMENSION}")
        states = sorted(sum(1 << i for i in occ)
                        for occ in itertools.combinations(range(num_sites), num_particles))
        return cls(num_sites, num_particles, np.array(states, dtype=np.int64))

    @property
    def dimension(self) -> int:
        return len(self.states)

    def index(self, masks) -> np.ndarray:
        return np.searchsorted(self.states, masks)

    def occupations(self) -> np.ndarray:
        """(dimension, num_sites) 0/1 table."""
        return ((self.states[:, None] >> np.arange(self.num_sites)) & 1).astype(float)


@dataclass(frozen=True)
class InteractionSpec:
    D0: float
    cutoff: int | None = None  # in sites; None keeps all pairs
    exponent: int = 3

    def __post_init__(self):
        if self.exponent != 3:
            raise ConfigurationError(f"the dipolar exponent is fixed at 3, got {self.exponent}")
        if not math.isfinite(self.D0):
            raise ConfigurationError("D0 must be finite")
        if self.cutoff is not None and self.cutoff < 1:
            raise ConfigurationError(f"cutoff must be >= 1 site, got {self.cutoff}")

    def couplings(self, num_sites: int) -> np.ndarray:
        n = np.arange(num_sites)
        d = np.abs(n[:, None] - n[None, :]).astype(float)
        D = np.zeros_like(d)
        mask = d > 0
        if self.cutoff is not None:
            mask &= d <= self.cutoff
        D[mask] = self.D0 / d[mask] ** 3
        return D


@dataclass(frozen=True)
class ManyBodyOperator:
    matrix: sp.csr_matrix
    basis: FockBasis
    kind: str
    potential: np.ndarray
    interaction: InteractionSpec | None = None

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64)
    out = np.zeros_like(x)
    while np.any(x):
        out += x & 1
        x = x >> 1
    return out


def bonds(num_sites: int):
    """Hopping bonds of the open chain."""
    return [(n, n + 1) for n in range(num_sites - 1)]


def _between_mask(i: int, j: int) -> int:
    lo, hi = min(i, j), max(i, j)
    return ((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1)


def build_fock_hamiltonian(num_sites: int, num_particles: int, J: float, V=None,
                           kind: str = "FermiHopping",
                           interaction: InteractionSpec | None = None) -> ManyBodyOperator:
    """Hopping -J/2 between neighbours, sum V_n n_n and optional sum_{n<m} D_nm n_n n_m."""
    if kind not in KINDS:
        raise ConfigurationError(f"unknown hopping kind {kind!r}; expected one of {KINDS}")
    basis = FockBasis.build(num_sites, num_particles)
    V = np.zeros(num_sites) if V is None else np.asarray(V, dtype=float)
    if V.shape != (num_sites,):
        raise ConfigurationError(f"potential has shape {V.shape}, expected ({num_sites},)")
    occ = basis.occupations()
    diag = occ @ V
    if interaction is not None and interaction.D0 != 0.0:
        D = np.triu(interaction.couplings(num_sites), 1)
        diag = diag + np.einsum("sn,nm,sm->s", occ, D, occ)
    rows, cols, vals = [np.arange(basis.dimension)], [np.arange(basis.dimension)], [diag]
    s = basis.states
    for i, j in bonds(num_sites):
        a, b = 1 << i, 1 << j
        movable = ((s & a) != 0) & ((s & b) == 0)
        src = np.nonzero(movable)[0]
        dst = basis.index(s[src] ^ (a | b))
        amp = np.full(len(src), -0.5 * J)
        if kind == "FermiHopping":
            amp = amp * (1 - 2 * (_popcount(s[src] & _between_mask(i, j)) % 2))
        rows += [dst, src]
        cols += [src, dst]
        vals += [amp, amp]
    H = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(basis.dimension,) * 2)
    return ManyBodyOperator(H, basis, kind, V, interaction)


def _hop_sign(state: int, i: int, j: int) -> int:
    return -1 if bin(state & _between_mask(i, j)).count("1") % 2 else 1


def fermion_hop(state: int, i: int, j: int):
    """c_j^dagger c_i |state> as (sign, new_state), or None when it vanishes."""
    if not state >> i & 1 or (i != j and state >> j & 1):
        return None
    return _hop_sign(state, i, j), state ^ (1 << i) ^ (1 << j)


def spectrum(op: ManyBodyOperator) -> np.ndarray:
    return np.linalg.eigvalsh(op.dense())


def jordan_wigner_equivalence(num_sites: int, num_particles: int, J: float, V=None) -> float:
    """max |dE| between sorted fermion and hard-core-boson spectra (open chain)."""
    f = spectrum(build_fock_hamiltonian(num_sites, num_particles, J, V, "FermiHopping"))
    b = spectrum(build_fock_hamiltonian(num_sites, num_particles, J, V, "HardCoreBoseHopping"))
    return float(np.max(np.abs(f - b)))


def subset_sum_spectrum(single_particle: np.ndarray, num_particles: int) -> np.ndarray:
    """All sums over num_particles-subsets of single-particle levels, sorted."""
    e = np.asarray(single_particle, dtype=float)
    return np.sort([sum(c) for c in itertools.combinations(e, num_particles)])


@dataclass(frozen=True)
class GroundState:
    energy: float
    vector: np.ndarray
    densities: np.ndarray
    gap: float
    upper_density: float  # total density on the +M sites


def ground_state_occupations(op: ManyBodyOperator, upper_sites=None, degeneracy_tol: float = 1e-10) -> GroundState:
    """Ground state, site densities and the density sitting on the upper sites.

    upper_sites defaults to the even sites, which carry +M in the chain.
    """
    dim = op.basis.dimension
    if dim <= 2000:
        w, v = np.linalg.eigh(op.dense())
    else:
        w, v = eigsh(op.matrix, k=2, which="SA", tol=1e-12)
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    gap = float(w[1] - w[0]) if dim > 1 else math.inf
    if gap <= degeneracy_tol:
        raise DegeneracyError(f"ground state degenerate: gap {gap:.3e} <= {degeneracy_tol:.1e}")
    psi = v[:, 0]
    dens = (psi * psi) @ op.basis.occupations()
    if upper_sites is None:
        upper_sites = np.arange(0, op.basis.num_sites, 2)
    return GroundState(float(w[0]), psi, dens, gap, float(np.sum(dens[np.asarray(upper_sites)])))


@dataclass(frozen=True)
class InteractionRow:
    D0: float
    energy: float
    upper_density: float
    first_order: float  # <Omega| sum D n n |Omega> of the D0 = 0 ground state


def interaction_shift_scan(num_sites: int, J: float, V, D0_values, kind: str = "FermiHopping",
                           cutoff: int | None = None) -> list[InteractionRow]:
    """Ground energy and upper-site density at half filling for each D0."""
    if num_sites > 14 or num_sites % 2:
        raise PreconditionError(f"interaction scan needs an even chain of at most 14 sites, got {num_sites}")
    Np = num_sites // 2
    base = ground_state_occupations(build_fock_hamiltonian(num_sites, Np, J, V, kind))
    occ = build_fock_hamiltonian(num_sites, Np, J, V, kind).basis.occupations()
    rows = []
    for D0 in D0_values:
        inter = InteractionSpec(float(D0), cutoff)
        D = np.triu(inter.couplings(num_sites), 1)
        pair = np.einsum("sn,nm,sm->s", occ, D, occ)
        first = float(np.sum(base.vector**2 * pair))
        gs = ground_state_occupations(build_fock_hamiltonian(num_sites, Np, J, V, kind, inter))
        rows.append(InteractionRow(float(D0), gs.energy, gs.upper_density, first))
    return rows
