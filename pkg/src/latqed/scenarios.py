"""One function per scenario.  Each returns a list of tables:
(file name, header, rows), written by the CLI in this order."""
from __future__ import annotations

import math

import numpy as np

from . import bands as bd
from . import dynamics as dyn
from . import manybody as mb
from . import oracles as orc
from . import spectral as spc
from .config import ScenarioConfig
from .errors import ConfigurationError
from .model import (ChainModel, DeltaSite, Linear, RampProfile, WoodsSaxon, Zero, build_hamiltonian,
                    sample_potential)

Table = tuple[str, list[str], list[list]]


def _chain(cfg: ScenarioConfig) -> ChainModel:
    kw = {"mass": cfg["mass"], "hopping": cfg.get("hopping")}
    if cfg.get("num_sites") is not None:
        return ChainModel(cfg["num_sites"], cfg["spacing"], **kw)
    return ChainModel.from_box(cfg["box"], cfg["spacing"], **kw)


def _potential(cfg: ScenarioConfig, chain: ChainModel):
    kind = cfg.get("potential", "woods_saxon")
    n = chain.num_sites
    if kind == "zero":
        return Zero()
    if kind == "woods_saxon":
        return WoodsSaxon(cfg["W"], cfg["a"], cfg["L"])
    if kind == "delta":
        return DeltaSite(cfg["phi"], cfg.get("site", n // 2))
    if kind == "linear":
        return Linear(cfg["field"], (cfg.get("window_start", 0), cfg.get("window_stop", n)))
    raise ConfigurationError(f"unknown potential {kind!r}")


def run_spectrum(cfg: ScenarioConfig) -> list[Table]:
    chain = _chain(cfg)
    pot = _potential(cfg, chain)
    H = build_hamiltonian(chain, sample_potential(pot, chain))
    spec = spc.solve_spectrum(H, chain)
    rows = [[i, e, spc.participation_ratio(spec.eigenvectors[:, i])] for i, e in enumerate(spec.eigenvalues)]
    states = spc.find_gap_states(spec, chain.mass, cfg["edge_margin"])
    bound = [[s.energy, s.participation, s.localization_length, spc.sign_changes(s.psi1),
              spc.sign_changes(s.psi2), s.finite_size] for s in states]
    profile = []
    if states:
        v = states[0].vector
        profile = [[n, x, v[n] if n % 2 == 0 else 0.0, v[n] if n % 2 else 0.0]
                   for n, x in enumerate(chain.positions)]
    return [("spectrum.csv", ["index", "energy", "participation_ratio"], rows),
            ("profile.csv", ["site", "x", "psi1", "psi2"], profile),
            ("bound_states.csv", ["energy", "participation_ratio", "localization_length",
                                  "psi1_sign_changes", "psi2_sign_changes", "finite_size"], bound)]


def run_criticality(cfg: ScenarioConfig) -> list[Table]:
    chain = _chain(cfg)
    a, L, M = cfg["a"], cfg["L"], chain.mass
    grid = np.asarray(cfg["W_grid"])
    trace = spc.trace_bound_state(chain, a, L, grid, cfg["edge_margin"])
    W_cr = spc.find_critical_strength(trace, cfg["tol"], W_max=float(grid[-1]))
    cont = orc.track_ws_ground_state(trace.W_values, a, L, M)
    rows = [[W, E, Ec, abs(E - Ec), bool(loc)]
            for W, E, Ec, loc in zip(trace.W_values, trace.E0_values, cont, trace.localized)]
    diffs = [r[3] for r in rows if not math.isnan(r[3])]
    summary = [[W_cr, cfg["tol"], trace.crossed_at if trace.crossed_at is not None else math.nan,
                max(diffs) if diffs else math.nan, chain.num_sites, chain.spacing]]
    return [("trace.csv", ["W", "E0_lattice", "E0_continuum", "abs_diff", "localized"], rows),
            ("critical.csv", ["W_cr", "tol", "crossed_at", "max_abs_diff", "num_sites", "spacing"], summary)]


def delta_lattice_level(chain: ChainModel, phi: float) -> tuple[float, int]:
    """Gap level of a single-site delta of strength phi (on-site phi/spacing).

    phi < 0 sits on a +M site, phi > 0 on a -M site, matching the two
    branches of the closed form.
    """
    site = chain.num_sites // 2 + (1 if phi > 0 else 0)
    H = build_hamiltonian(chain, sample_potential(DeltaSite(phi, site), chain))
    spec = spc.solve_spectrum(H, chain)
    inside = np.nonzero(np.abs(spec.eigenvalues) < chain.mass)[0]
    if not len(inside):
        return math.nan, site
    k = inside[np.argmax(np.abs(spec.eigenvectors[site, inside]))]
    return float(spec.eigenvalues[k]), site


def run_delta_oracle(cfg: ScenarioConfig) -> list[Table]:
    chain = ChainModel(cfg["num_sites"], cfg["spacing"], cfg["mass"])
    rows = []
    for phi in cfg["phi"]:
        lat, site = delta_lattice_level(chain, phi)
        sol = orc.lattice_delta_energy(phi / chain.spacing, chain.mass, chain.hopping)
        rows.append([phi, site, lat, sol.lam, abs(lat - sol.lam), orc.continuum_delta_energy(phi, chain.mass),
                     sol.branch])
    return [("delta.csv", ["phi", "site", "lambda_lattice", "lambda_cubic", "abs_diff", "lambda_continuum",
                           "branch"], rows)]


def _ramp(cfg):
    return RampProfile(cfg["t_on"], cfg["t_plateau"], cfg["t_off"], cfg["shape"])


def run_dynamics(cfg: ScenarioConfig) -> list[Table]:
    chain = _chain(cfg)
    res, ev = dyn.run_pair_creation(chain, _potential(cfg, chain), _ramp(cfg), cfg.get("dt"))
    s2 = res.singular_values**2
    return [("pairs.csv", ["n_pairs", "dominant_fraction", "unitarity_error", "norm_drift", "steps", "dt"],
             [[res.n_pairs, res.dominant_fraction, ev.unitarity_error, ev.norm_drift, ev.steps, ev.dt]]),
            ("modes.csv", ["index", "occupation"], [[i, v] for i, v in enumerate(s2[:20])])]


def run_adiabatic(cfg: ScenarioConfig, jobs: int) -> list[Table]:
    chain = _chain(cfg)
    pot = WoodsSaxon(cfg["W"], cfg["a"], cfg["L"])
    rows = dyn.adiabatic_scan(chain, pot, cfg["durations"], cfg["t_plateau"], cfg["shape"], jobs)
    return [("adiabatic.csv", ["duration", "n_pairs", "dominant_fraction", "unitarity_error"],
             [[r.duration, r.n_pairs, r.dominant_fraction, r.unitarity_error] for r in rows])]


def field_window(chain: ChainModel, length: float) -> tuple[int, int]:
    n = min(chain.num_sites, max(2, int(round(length / chain.spacing))))
    start = (chain.num_sites - n) // 2
    return start, start + n


def run_schwinger(cfg: ScenarioConfig, jobs: int) -> list[Table]:
    chain = _chain(cfg)
    window = field_window(chain, cfg["window_length"])
    scan = dyn.schwinger_scan(chain, cfg["fields"], window, cfg["t_ramp"], cfg["t_plateau"], jobs)
    rows = [[E, r, 1.0 / E, math.log(r) if r > 0 else -math.inf, n, bool(u)]
            for E, n, r, u in zip(scan.fields, scan.n_pairs, scan.rates, scan.used)]
    fit = [[scan.fit_slope, scan.fit_intercept, scan.r_squared, -math.pi * chain.mass**2,
            scan.window_length, scan.unitarity_error]]
    return [("schwinger.csv", ["field", "rate", "inverse_field", "ln_rate", "n_pairs", "used_in_fit"], rows),
            ("schwinger_fit.csv", ["slope", "intercept", "r_squared", "continuum_slope", "window_length",
                                   "unitarity_error"], fit)]


def run_bands(cfg: ScenarioConfig) -> list[Table]:
    pot = bd.BichromaticPotential(cfg["W0"], cfg["dW"], cfg["k"])
    edge = math.pi / (2 * pot.ell)
    p = np.linspace(-edge, edge, cfg["num_p"], endpoint=False)
    ex = bd.exact_bloch(pot, p, n_planewaves=cfg["n_planewaves"])
    wk = bd.wkb_band_solve(pot, p) if cfg["wkb"] else None
    nan = np.full(len(p), math.nan)
    rows = [list(r) for r in zip(p, ex.E_minus, ex.E_plus, wk.E_minus if wk else nan, wk.E_plus if wk else nan)]
    header = ["source", "gap", "J_fit", "M_fit", "E0_fit", "fit_rms", "J_wkb", "M_wkb", "alpha", "J_estimate"]
    J_est = bd.wkb_hopping_estimate(pot.W0, pot.recoil)
    params = []
    for band in (ex, wk):
        if band is None or pot.dW == 0:
            continue
        ef = bd.effective_params(band, pot if band is wk else None)
        params.append([band.source, band.gap, ef.J_fit, ef.M_fit, ef.E0_fit, ef.rms,
                       ef.J_wkb if ef.J_wkb is not None else math.nan,
                       ef.M_wkb if ef.M_wkb is not None else math.nan,
                       ef.alpha if ef.alpha is not None else math.nan, J_est])
    return [("bands.csv", ["p", "E_minus_exact", "E_plus_exact", "E_minus_wkb", "E_plus_wkb"], rows),
            ("band_params.csv", header, params)]


def run_wannier(cfg: ScenarioConfig) -> list[Table]:
    pot = bd.BichromaticPotential(cfg["W0"], cfg["dW"], cfg["k"])
    ws = bd.compute_wannier(pot, cfg["num_cells"], cfg["n_planewaves"])
    x = np.linspace(-cfg["x_range"], cfg["x_range"], cfg["num_x"])
    orbs = {"a": ws.a, "b": ws.b, "psi": ws.psi, "chi": ws.chi}
    vals = {k: o(x) for k, o in orbs.items()}
    rows = [[xi] + [c for k in orbs for c in (vals[k][i].real, vals[k][i].imag)] for i, xi in enumerate(x)]
    header = ["x"] + [f"{k}_{part}" for k in orbs for part in ("re", "im")]
    summ = [[k, o.center, ws.spreads[k], ws.decay_lengths[k]] for k, o in orbs.items()]
    return [("wannier.csv", header, rows),
            ("wannier_summary.csv", ["orbital", "center", "spread", "decay_length"], summ)]


_UNIT_SCALE = {"uK": 1.0, "nK": 1e-3}  # to uK


def run_hierarchy(cfg: ScenarioConfig) -> list[Table]:
    unit = cfg["unit"]
    rep = bd.check_hierarchy(bd.PhysicalParams(cfg["E_R"], cfg["W0"], cfg["dW"], cfg.get("temperature"), unit),
                             cfg["ratio"])
    to_nk = _UNIT_SCALE[unit] * 1e3
    quant = [["omega_osc", rep.omega_osc, unit, rep.omega_osc * to_nk],
             ["J", rep.J, unit, rep.J * to_nk],
             ["M", rep.M, unit, rep.M * to_nk]]
    if rep.temperature is not None:
        quant.append(["T", rep.temperature, unit, rep.temperature * to_nk])
    return [("hierarchy.csv", ["quantity", "value", "unit", "value_nK"], quant),
            ("hierarchy_checks.csv", ["check", "ratio", "threshold", "passed"],
             [[lab, r, rep.ratio_threshold, ok] for lab, r, ok in rep.checks])]


def manybody_potential(num_sites: int, mass: float, well_depth: float, well_width: int) -> np.ndarray:
    """Staggered mass plus a square attractive well on the central sites."""
    V = mass * np.where(np.arange(num_sites) % 2 == 0, 1.0, -1.0)
    c = num_sites // 2
    lo = max(0, c - well_width // 2)
    V[lo:lo + well_width] -= well_depth
    return V


def run_manybody(cfg: ScenarioConfig) -> list[Table]:
    L = cfg["num_sites"]
    V = manybody_potential(L, cfg["mass"], cfg["well_depth"], cfg["well_width"])
    op = mb.build_fock_hamiltonian(L, L // 2, cfg["hopping"], V, cfg["kind"])
    gs = mb.ground_state_occupations(op)
    rows = mb.interaction_shift_scan(L, cfg["hopping"], V, cfg["D0"], cfg["kind"], cfg.get("cutoff"))
    return [("densities.csv", ["site", "density", "potential"], [[i, d, v] for i, (d, v) in enumerate(zip(gs.densities, V))]),
            ("interaction.csv", ["D0", "E0", "upper_density", "first_order_shift"],
             [[r.D0, r.energy, r.upper_density, r.first_order] for r in rows])]


def run_jw_check(cfg: ScenarioConfig) -> list[Table]:
    rng = np.random.default_rng(cfg.seed)
    J, amp = cfg["hopping"], cfg["amplitude"]
    rows = []
    for L in cfg["sizes"]:
        for d in range(cfg["draws"]):
            V = rng.uniform(-amp, amp, L)
            dev = mb.jordan_wigner_equivalence(L, L // 2, J, V)
            H1 = build_hamiltonian_single(V, J)
            many = mb.spectrum(mb.build_fock_hamiltonian(L, L // 2, J, V))
            sub = mb.subset_sum_spectrum(np.linalg.eigvalsh(H1), L // 2)
            rows.append([L, d, dev, float(np.max(np.abs(many - sub)))])
    return [("jw_check.csv", ["num_sites", "draw", "jw_max_dev", "subset_sum_max_dev"], rows)]


def build_hamiltonian_single(V, J) -> np.ndarray:
    """Dense single-particle matrix with on-site V and hopping -J/2."""
    L = len(V)
    off = np.full(L - 1, -0.5 * J)
    return np.diag(np.asarray(V, float)) + np.diag(off, 1) + np.diag(off, -1)


RUNNERS = {
    "Spectrum": run_spectrum,
    "Criticality": run_criticality,
    "DeltaOracle": run_delta_oracle,
    "Dynamics": run_dynamics,
    "AdiabaticScan": run_adiabatic,
    "SchwingerScan": run_schwinger,
    "Bands": run_bands,
    "Wannier": run_wannier,
    "Hierarchy": run_hierarchy,
    "ManyBody": run_manybody,
    "JWCheck": run_jw_check,
}
PARALLEL = {"AdiabaticScan", "SchwingerScan"}


def run(cfg: ScenarioConfig, jobs: int = 1) -> list[Table]:
    fn = RUNNERS[cfg.scenario]
    return fn(cfg, jobs) if cfg.scenario in PARALLEL else fn(cfg)
