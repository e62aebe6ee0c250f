import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import trapezoid
from hypothesis import given
from hypothesis import strategies as st

from latqed import oracles as orc
from latqed.errors import DomainError, PoleError
from latqed.model import ChainModel, build_hamiltonian
from latqed.scenarios import delta_lattice_level
from latqed.spectral import solve_spectrum


# gamma ---------------------------------------------------------------------------

def test_gamma_factorials():
    assert orc.complex_gamma(1) == pytest.approx(1, rel=1e-13)
    assert orc.complex_gamma(5) == pytest.approx(24, rel=1e-13)


def test_gamma_half():
    assert abs(orc.complex_gamma(0.5) - math.sqrt(math.pi)) < 1e-12


def test_gamma_modulus_identity():
    assert abs(abs(orc.complex_gamma(1 + 1j)) - math.sqrt(math.pi / math.sinh(math.pi))) < 1e-10


@pytest.mark.parametrize("z", [0, -1, -7])
def test_gamma_poles(z):
    with pytest.raises(PoleError):
        orc.complex_gamma(z)


@given(st.floats(-10.0, 10.0), st.floats(-50.0, 50.0))
def test_gamma_against_mpmath(x, y):
    z = complex(x, y)
    if abs(y) < 1e-6 and x <= 0 and abs(x - round(x)) < 1e-6:
        return
    ref = complex(mpmath.gamma(mpmath.mpc(x, y)))
    if ref == 0 or not np.isfinite(ref):
        return
    assert abs(orc.complex_gamma(z) / ref - 1) < 1e-10


def test_gamma_vectorized():
    z = np.array([0.5, 2.0, -0.5 + 1j])
    out = orc.complex_gamma(z)
    assert out.shape == (3,)
    assert out[1] == pytest.approx(1.0)


def test_beta_symmetric():
    assert orc.complex_beta(2 + 1j, 0.5) == pytest.approx(orc.complex_beta(0.5, 2 + 1j))
    assert orc.complex_beta(2, 3) == pytest.approx(1 / 12)


# Woods-Saxon ----------------------------------------------------------------------

def test_squared_condition_is_modulus_vacuous():
    # both sides are unimodular in the gap, so log|LHS| - log|RHS| carries no information
    p = orc.WsParameters(2.0)
    for E in np.linspace(-0.9, 0.9, 7):
        lhs, rhs = orc.ws_sides(E, p)
        assert abs(abs(lhs) - 1) < 1e-9 and abs(abs(rhs) - 1) < 1e-9


def test_phase_squares_to_the_stated_ratio():
    p = orc.WsParameters(2.3)
    for E in (-0.5, 0.1, 0.7):
        lhs, rhs = orc.ws_sides(E, p)
        assert abs(orc.ws_phase(E, p) ** 2 - lhs / rhs) < 1e-9


def test_residual_changes_sign_at_roots():
    p = orc.WsParameters(2.0)
    for E in orc.solve_ws_bound_states(p):
        assert orc.ws_residual(E - 1e-6, p) * orc.ws_residual(E + 1e-6, p) < 0


def test_root_parity_alternates():
    p = orc.WsParameters(2.8)
    roots = orc.solve_ws_bound_states(p)
    signs = [round(orc.ws_phase(E, p).real) for E in roots]
    assert signs == [(-1) ** k for k in range(len(roots))]


def test_no_potential_no_roots():
    assert orc.solve_ws_bound_states(orc.WsParameters(0.0)) == []


def test_just_above_detachment_single_root():
    # one root appears just below +M for a weak well
    roots = orc.solve_ws_bound_states(orc.WsParameters(0.05))
    assert len(roots) == 1 and 0.99 < roots[0] < 1.0


def test_w28_lowest_root_close_to_threshold():
    roots = orc.solve_ws_bound_states(orc.WsParameters(2.8))
    assert roots[0] + 1 < 0.08
    assert roots[0] == pytest.approx(-0.97011, abs=1e-4)


def test_supercritical_lowest_root_gone():
    # the even ground state has dived; the lowest surviving root is odd
    p = orc.WsParameters(4.0)
    roots = orc.solve_ws_bound_states(p)
    assert orc.ws_phase(roots[0], p).real < 0


def test_w1_matches_lattice():
    chain = ChainModel.from_box(40, 0.02)
    from latqed.spectral import lattice_ws_energies
    lat = lattice_ws_energies(chain, 1.0)
    cont = orc.solve_ws_bound_states(orc.WsParameters(1.0))
    assert abs(lat[0] - cont[0]) < 0.01


def test_phase_domain_errors():
    with pytest.raises(DomainError):
        orc.ws_phase(1.0, orc.WsParameters(2.0))
    with pytest.raises(DomainError):
        orc.ws_phase(0.5, orc.WsParameters(0.2))


# delta: continuum and cubic ------------------------------------------------------------

def test_continuum_delta():
    assert orc.continuum_delta_energy(0.0) == 1.0
    assert orc.continuum_delta_energy(1.0) == 0.0
    assert orc.continuum_delta_energy(10.0) == pytest.approx(-99 / 101)


def test_cubic_roots_solve_the_cubic():
    for phi, M, J in [(0.3, 1, 1), (5, 1, 20), (100, 2, 0.5)]:
        for lam in orc.delta_cubic_roots(phi, M, J):
            lhs = (M - lam) * (M * M + J * J - lam * lam)
            assert lhs == pytest.approx(phi * phi * (M + lam), rel=1e-9, abs=1e-9)


def test_lattice_delta_at_zero():
    sol = orc.lattice_delta_energy(0.0)
    assert sol.lam == 1.0 and sol.branch == "FromUpperEdge"


def test_small_phi_expansion_general_J():
    # series of the cubic: lambda = M (1 - 2 phi^2 / J^2) + O(phi^4)
    M, J = 1.0, 3.0
    for phi in (1e-2, 3e-3):
        lam = orc.lattice_delta_energy(-phi, M, J).lam
        assert abs(lam - M * (1 - 2 * phi**2 / J**2)) < 10 * (phi / J) ** 4


def test_large_phi_asymptote():
    for phi in (30.0, 100.0):
        lam = orc.lattice_delta_energy(-phi, 1.0, 1.0).lam
        assert abs(lam - (-1 + 2 / phi**2)) < 10 / phi**4


@given(st.floats(0.0, 100.0))
def test_no_supercriticality(phi):
    sol = orc.lattice_delta_energy(-phi, 1.0, 1.0)
    assert sol.lam > -1.0


@given(st.floats(0.01, 20.0), st.floats(0.2, 5.0))
def test_mirror_branch(phi, J):
    up = orc.lattice_delta_energy(-phi, 1.0, J)
    lo = orc.lattice_delta_energy(phi, 1.0, J)
    assert lo.branch == "FromLowerEdge"
    assert lo.lam == pytest.approx(-up.lam, abs=1e-12)


def test_continuum_limit_monotone():
    phi, M = 0.7, 1.0
    target = orc.continuum_delta_energy(phi, M)
    errs = []
    for J in (5, 10, 20, 40, 80):
        # on-site energy phi/l with J = 1/l
        errs.append(abs(orc.lattice_delta_energy(-phi * J, M, J).lam - target))
    assert all(b < a for a, b in zip(errs, errs[1:]))


# momentum profile ------------------------------------------------------------------------

@pytest.mark.parametrize("phi", [-0.2, -1.0, -3.0, 0.5, 2.0])
def test_profile_averages(phi):
    J = 4.0
    sol = orc.lattice_delta_energy(phi, 1.0, J)
    prof = orc.delta_momentum_profile(sol, 0.25, np.linspace(-2, 2, 5))
    assert prof.norm == pytest.approx(1.0, abs=1e-12)
    assert abs(prof.momentum) < 1e-12
    if phi < 0:
        assert abs(prof.Bbar) < 1e-12 and prof.Abar > 0
    else:
        assert abs(prof.Abar) < 1e-12 and prof.Bbar > 0


def test_profile_normalization_trapezoid():
    sol = orc.lattice_delta_energy(-1.0, 1.0, 2.0)
    ell = 0.5
    p = np.linspace(-math.pi / ell, math.pi / ell, 20001)
    prof = orc.delta_momentum_profile(sol, ell, p)
    integral = trapezoid(prof.A**2 + prof.B**2, p) * ell / (2 * math.pi)
    assert integral == pytest.approx(1.0, abs=1e-8)


def test_profile_self_consistency():
    # Abar = (phi/l) * mean of the unnormalised A profile fixes the cubic
    sol = orc.lattice_delta_energy(-1.3, 1.0, 2.0)
    prof = orc.delta_momentum_profile(sol, 1.0, np.array([0.0]))
    th = np.linspace(-math.pi, math.pi, 4096, endpoint=False)
    det = sol.lam**2 - 1 - (2 * np.cos(th)) ** 2
    assert np.mean(sol.phi * (sol.lam + 1) / det) == pytest.approx(1.0, abs=1e-10)
    assert prof.Abar > 0


def test_gap_integral_closed_form():
    lam, M, J = 0.3, 1.0, 2.5
    th = np.linspace(-math.pi, math.pi, 8192, endpoint=False)
    num = np.mean(1 / (lam * lam - M * M - (J * np.cos(th)) ** 2))
    assert abs(num - orc.delta_gap_integral(lam, M, J)) < 1e-8


def test_profile_outside_gap():
    sol = orc.DeltaLatticeSolution(1.5, -1.0, 1.0, 1.0, "FromUpperEdge")
    with pytest.raises(DomainError):
        orc.delta_momentum_profile(sol, 1.0, [0.0])


# lattice vs closed form -------------------------------------------------------------------

@pytest.mark.parametrize("ell", [0.2, 0.1, 0.05])
def test_cross_oracle_convergence_in_n(ell):
    phi = -0.5
    target = orc.lattice_delta_energy(phi / ell, 1.0, 1 / ell).lam
    errs = [abs(delta_lattice_level(ChainModel(n, ell), phi)[0] - target) for n in (100, 200, 400)]
    assert errs[-1] <= errs[0] + 1e-14
    assert errs[-1] < 5e-4


def test_delta_n2000():
    chain = ChainModel(2000, 0.05)
    lam, _ = delta_lattice_level(chain, -0.5)
    assert abs(lam - orc.lattice_delta_energy(-10.0, 1.0, 20.0).lam) < 5e-4


def test_two_sublattice_delta_binds_one_level():
    # the both-types delta, realised as two decoupled interleaved chains,
    # has the same gap level as the single-type one
    ell, phi = 0.1, -0.8
    n = 400
    single, _ = delta_lattice_level(ChainModel(n, ell), phi)
    H = orc.two_sublattice_delta_operator(phi, n, ell)
    w = solve_spectrum(H).eigenvalues
    gap = w[np.abs(w) < 1.0]
    assert np.min(np.abs(gap - single)) < 1e-8
    # an attractive potential on the -M copy binds nothing inside the gap
    assert len(gap) == 1


def test_naive_adjacent_pair_differs():
    # putting the delta on two neighbouring sites of one chain is a different model
    ell, phi, n = 0.05, -0.5, 2000
    ch = ChainModel(n, ell)
    d = np.zeros(n)
    d[n // 2] = d[n // 2 + 1] = phi / ell
    w = solve_spectrum(build_hamiltonian(ch, d)).eigenvalues
    target = orc.lattice_delta_energy(phi / ell, 1.0, 1 / ell).lam
    assert np.min(np.abs(w - target)) > 0.05


def test_ground_state_track_ends_at_diving():
    W = np.round(np.arange(0.25, 3.2 + 1e-9, 0.05), 12)
    E = orc.track_ws_ground_state(W)
    ok = ~np.isnan(E)
    assert ok[0] and not ok[-1]
    # one contiguous run, falling monotonically, ending just above -M
    assert np.all(np.diff(np.nonzero(ok)[0]) == 1)
    assert np.all(np.diff(E[ok]) < 0)
    assert -1 < E[ok][-1] < -0.95
    assert 2.85 <= W[ok][-1] < 2.9


def test_ws_parity_of_the_lowest_roots():
    p = orc.WsParameters(2.0)
    roots = orc.solve_ws_bound_states(p)
    assert orc.ws_parity(roots[0], p) == 1
    assert [orc.ws_parity(E, p) for E in roots] == [(-1) ** i for i in range(len(roots))]
