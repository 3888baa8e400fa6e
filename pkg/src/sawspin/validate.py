"""Self-contained invariant checks behind the `validate` CLI preset.

Each check returns (passed, detail). They are quick spot checks of the core
algebra, dynamics, and plumbing; the full test suite is the authoritative
verification.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import io as io_mod
from .darkstate import dark_state, embed_fock, verify_dark
from .device import IDTParams, ev_to_joules, electron_phonon_coupling, idt_center_frequency
from .dynamics import (
    DensityMatrix3,
    LambdaDriveParams,
    RatesParams,
    obe_derivative,
    steady_state,
)
from .hamiltonian import (
    DriveParams,
    build_interaction_hamiltonian,
    build_lab_hamiltonian,
    build_transformed_hamiltonian,
    detunings,
    effective_sideband_rabi,
    exact_propagator,
    interaction_frame_map,
    lamb_dicke_hamiltonian,
    polaron_transform,
    rotating_frame_generator,
)
from .space import HilbertSpace, fock_subspace_projector, phonon_displacement

TWO_PI = 2.0 * np.pi


def _test_params(lam: float = 0.1) -> DriveParams:
    wm = TWO_PI * 1.0
    return DriveParams.from_detunings(omega_m=wm, Delta_1=wm, Delta_2=0.0,
                                      Omega_1=TWO_PI * 0.2, Omega_2=TWO_PI * 0.15,
                                      g=lam * wm)


def check_boson_algebra():
    space = HilbertSpace(20)
    b = space.annihilation()
    comm = b @ b.conj().T - b.conj().T @ b
    proj = np.zeros(20)
    proj[:19] = 1.0
    defect = np.linalg.norm((comm - np.eye(20)) * proj[:, None] * proj[None, :], 2)
    number_ok = np.allclose(np.diag(space.number()).real, np.arange(20), atol=1e-14)
    ok = defect < 1e-12 and number_ok
    return ok, f"commutator defect {defect:.1e} on n <= N-2"


def check_displacement():
    n = 20
    alpha = 0.1
    d = phonon_displacement(alpha, n)
    vac = abs(d[0, 0] - np.exp(-alpha * alpha / 2.0))
    prod = phonon_displacement(alpha, n) @ phonon_displacement(-alpha, n)
    sub = slice(0, n - 5)
    inv = np.linalg.norm(prod[sub, sub] - np.eye(n)[sub, sub], 2)
    ok = vac < 1e-12 and inv < 1e-8
    return ok, f"vacuum overlap error {vac:.1e}, inverse defect {inv:.1e}"


def check_builder_hermiticity():
    space = HilbertSpace(12)
    p = _test_params()
    worst = 0.0
    for builder in (build_lab_hamiltonian, build_transformed_hamiltonian,
                    build_interaction_hamiltonian, lamb_dicke_hamiltonian):
        h = builder(p, space)
        for t in (0.0, 0.3, 7.7):
            m = h(t)
            worst = max(worst, np.linalg.norm(m - m.conj().T, 2))
    return worst < 1e-12, f"worst hermiticity defect {worst:.1e}"


def check_polaron_conjugation():
    space = HilbertSpace(20)
    p = _test_params(lam=0.1)
    h1 = build_lab_hamiltonian(p, space)
    h3 = build_transformed_hamiltonian(p, space)
    u = polaron_transform(p, space).entries
    proj = fock_subspace_projector(space, 12)
    worst = max(
        np.linalg.norm(proj @ (u.conj().T @ h1(t) @ u - h3(t)) @ proj, 2)
        for t in (0.0, 0.31, 1.7)
    )
    return worst < 1e-8, f"conjugation defect {worst:.1e} on n <= 12"


def check_frame_chain():
    space = HilbertSpace(12)
    p = _test_params(lam=0.08)
    h3 = build_transformed_hamiltonian(p, space)
    h4 = build_interaction_hamiltonian(p, space)
    k3 = rotating_frame_generator(p, space, "transformed")
    k4 = rotating_frame_generator(p, space, "interaction")
    t = 0.8
    psi0 = np.zeros(space.total_dim, dtype=complex)
    psi0[space.index(0, 1)] = 1.0
    psi_tilde = exact_propagator(h3, k3, t) @ psi0
    w_t = interaction_frame_map(p, space, t)
    w_0 = interaction_frame_map(p, space, 0.0)
    psi_pred = w_t @ psi_tilde
    psi_prop = exact_propagator(h4, k4, t) @ (w_0 @ psi0)
    fid = abs(np.vdot(psi_pred, psi_prop))
    return (1.0 - fid) < 1e-9, f"frame-map fidelity defect {1.0 - fid:.1e}"


def check_dark_state():
    rng = np.random.default_rng(3)
    space = HilbertSpace(8)
    wm = TWO_PI * 1.0
    n_sector = 3
    worst = 0.0
    for _ in range(10):
        omega_r, omega_2 = TWO_PI * rng.uniform(0.5, 10.0, 2)
        lam = 0.05
        omega_1 = omega_r / (lam * np.sqrt(n_sector))
        p = DriveParams.from_detunings(omega_m=wm, Delta_1=wm + TWO_PI * 0.3,
                                       Delta_2=TWO_PI * 0.3, Omega_1=omega_1,
                                       Omega_2=omega_2, g=lam * wm)
        h = lamb_dicke_hamiltonian(p, space)
        psi = embed_fock(dark_state(omega_r, omega_2), space, n_sector)
        worst = max(worst, verify_dark(h, psi))
    return worst < 1e-10, f"worst residual {worst:.1e}"


def check_obe_structure():
    rng = np.random.default_rng(5)
    d = LambdaDriveParams(*(TWO_PI * rng.uniform(0.1, 3.0, 4)))
    r = RatesParams(*(TWO_PI * rng.uniform(0.05, 2.0, 4)))
    worst_trace = 0.0
    worst_lin = 0.0
    for _ in range(20):
        y1 = rng.standard_normal(9)
        y2 = rng.standard_normal(9)
        a, b = rng.standard_normal(2)
        d1 = obe_derivative(DensityMatrix3.from_real9(y1), d, r).to_real9()
        d2 = obe_derivative(DensityMatrix3.from_real9(y2), d, r).to_real9()
        dc = obe_derivative(DensityMatrix3.from_real9(a * y1 + b * y2), d, r).to_real9()
        worst_lin = max(worst_lin, np.abs(dc - a * d1 - b * d2).max())
        worst_trace = max(worst_trace, abs(d1[0] + d1[1] + d1[2]))
    ok = worst_trace < 1e-12 and worst_lin < 1e-12
    return ok, f"trace defect {worst_trace:.1e}, linearity defect {worst_lin:.1e}"


def check_steady_state():
    r = RatesParams(gamma_s=TWO_PI * 0.35, gamma_orb=TWO_PI * 12.0,
                    Gamma_1=TWO_PI * 12.2, Gamma_2=TWO_PI * 1.8)
    d = LambdaDriveParams(Omega_R=TWO_PI * 8.0, Omega_2=TWO_PI * 8.0,
                          Delta_R=TWO_PI * 30.0, Delta_2=TWO_PI * 30.0)
    ss = steady_state(d, r)
    deriv = np.linalg.norm(obe_derivative(ss, d, r).to_real9())
    # two-photon symmetry holds for Delta_2 = 0
    sym = 0.0
    for delta in TWO_PI * np.array([0.5, 2.0]):
        up = steady_state(d.replace(Delta_R=delta, Delta_2=0.0), r).rho_ee
        dn = steady_state(d.replace(Delta_R=-delta, Delta_2=0.0), r).rho_ee
        sym = max(sym, abs(up - dn))
    ok = deriv < 1e-10 and sym < 1e-10
    return ok, f"stationarity {deriv:.1e}, detuning symmetry defect {sym:.1e}"


def check_sideband_rabi_formula():
    om = effective_sideband_rabi(TWO_PI * 8.0, TWO_PI * 8.0, TWO_PI * 100.0)
    value_ok = abs(om / TWO_PI - 0.32) < 1e-12
    halved = effective_sideband_rabi(TWO_PI * 8.0, TWO_PI * 8.0, TWO_PI * 200.0)
    scaling_ok = abs(halved / om - 0.5) < 1e-12
    return value_ok and scaling_ok, f"0.32 MHz check ({om / TWO_PI:.6f}), 1/Delta scaling"


def check_device_formulas():
    p = IDTParams(finger_width_w=1.5e-6, saw_velocity_v_s=5600.0)
    f = idt_center_frequency(p)
    freq_ok = abs(f - 933.3333333e6) < 1e3
    omega_m = TWO_PI * 900e6
    p1 = IDTParams.with_ev(1.5e-6, 5600.0, deformation_potential_ev=5.0,
                           effective_mass_m=1e-12, wavenumber_k_m=1.0e6)
    p2 = IDTParams(finger_width_w=1.5e-6, saw_velocity_v_s=5600.0,
                   deformation_potential_j=ev_to_joules(5.0),
                   effective_mass_m=1e-12, wavenumber_k_m=1.0e6)
    g1 = electron_phonon_coupling(p1, omega_m)
    g2 = electron_phonon_coupling(p2, omega_m)
    round_trip_ok = abs(g1 - g2) <= 1e-12 * abs(g2)
    return freq_ok and round_trip_ok, f"center frequency {f / 1e6:.1f} MHz, unit round trip"


def check_config_roundtrip():
    cfg = config_mod.resolve("cpt", overrides=["omega_r_mhz=7.5", "seed=3"])
    text = cfg.serialize()
    cfg2 = config_mod.resolve("cpt", file_text=text)
    ok = cfg2.values == cfg.values
    return ok, "serialize/parse fixpoint" if ok else "round trip changed values"


def check_csv_roundtrip():
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "probe.csv"
        x = np.linspace(0.0, 1.0, 11)
        y = np.sin(x) * 1e-3
        io_mod.write_csv_atomic(path, ["experiment = probe"], [
            ("axis_MHz", x), ("signal_arb", y),
        ])
        meta, cols = io_mod.read_csv(path)
        ok = (np.array_equal(cols["axis_MHz"], x)
              and np.array_equal(cols["signal_arb"], y)
              and meta[0] == "experiment = probe")
    return ok, "write/read identity" if ok else "values changed in round trip"


CHECKS = [
    ("boson-algebra", check_boson_algebra),
    ("displacement-operator", check_displacement),
    ("builder-hermiticity", check_builder_hermiticity),
    ("polaron-conjugation", check_polaron_conjugation),
    ("frame-chain", check_frame_chain),
    ("dark-state", check_dark_state),
    ("equations-of-motion", check_obe_structure),
    ("steady-state", check_steady_state),
    ("sideband-rabi-formula", check_sideband_rabi_formula),
    ("device-formulas", check_device_formulas),
    ("config-roundtrip", check_config_roundtrip),
    ("csv-roundtrip", check_csv_roundtrip),
]


def run_all(out=print) -> int:
    """Run every check, print one pass/fail line each, return failure count."""
    failures = 0
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        status = "PASS" if ok else "FAIL"
        if not ok:
            failures += 1
        out(f"{status} {name}: {detail}")
    return failures
