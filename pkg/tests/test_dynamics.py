"""Density-matrix equations of motion, steady states, and the Fock-resolved cross-check."""

import numpy as np
import pytest

from sawspin.darkstate import dark_state
from sawspin.dynamics import (
    CutoffConvergenceError,
    DegenerateSteadyStateError,
    DensityMatrix3,
    LambdaDriveParams,
    RatesParams,
    eig_final_state,
    eig_window_average,
    evolve,
    fock_resolved_evolve,
    generator_batch,
    generator_matrix,
    induced_decoherence_rate,
    obe_derivative,
    steady_state,
    trajectory_grid,
)
from sawspin.hamiltonian import DriveParams, lamb_dicke_hamiltonian
from sawspin.space import DensityMatrixFull, HilbertSpace

TWO_PI = 2.0 * np.pi


def random_state(rng) -> DensityMatrix3:
    """Random valid density matrix via a random positive 3x3 matrix."""
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    m = a @ a.conj().T
    m /= np.trace(m).real
    return DensityMatrix3.from_matrix(m)


def random_params(rng):
    d = LambdaDriveParams(Omega_R=TWO_PI * rng.uniform(0, 3),
                          Omega_2=TWO_PI * rng.uniform(0, 3),
                          Delta_R=TWO_PI * rng.uniform(-3, 3),
                          Delta_2=TWO_PI * rng.uniform(-3, 3))
    gamma_s = TWO_PI * rng.uniform(0, 0.5)
    r = RatesParams(gamma_s=gamma_s,
                    gamma_orb=TWO_PI * rng.uniform(0.3, 2.0) + gamma_s / 4.0,
                    Gamma_1=TWO_PI * rng.uniform(0, 2),
                    Gamma_2=TWO_PI * rng.uniform(0, 2))
    return d, r


def lindblad_superoperator(d: LambdaDriveParams, r: RatesParams) -> np.ndarray:
    """Independent 9x9 generator on row-major vec(rho).

    Built from the Hamiltonian commutator and collapse operators through the
    vectorization identity vec(A rho B) = (A kron B^T) vec(rho); the dephasing
    rates are realized by two diagonal collapse channels reproducing gamma on
    the optical coherences and gamma_s on the spin coherence.
    """
    h = np.array([
        [-d.Delta_R, 0.0, 0.5 * d.Omega_R],
        [0.0, -d.Delta_2, 0.5 * d.Omega_2],
        [0.5 * d.Omega_R, 0.5 * d.Omega_2, 0.0],
    ], dtype=complex)
    ops = []
    flip1 = np.zeros((3, 3), dtype=complex)
    flip1[0, 2] = np.sqrt(r.Gamma_1)
    flip2 = np.zeros((3, 3), dtype=complex)
    flip2[1, 2] = np.sqrt(r.Gamma_2)
    ops += [flip1, flip2]
    orb = r.gamma_orb - r.gamma_s / 4.0
    assert orb >= -1e-15
    ops.append(np.diag([0.0, 0.0, np.sqrt(2.0 * max(orb, 0.0))]).astype(complex))
    ops.append(np.diag([0.0, np.sqrt(2.0 * r.gamma_s),
                        0.5 * np.sqrt(2.0 * r.gamma_s)]).astype(complex))
    eye = np.eye(3)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op in ops:
        sup += np.kron(op, op.conj())
        sq = op.conj().T @ op
        sup -= 0.5 * (np.kron(sq, eye) + np.kron(eye, sq.T))
    return sup


def test_decay_only_derivative():
    rng = np.random.default_rng(1)
    r = RatesParams(gamma_s=0.0, gamma_orb=0.0,
                    Gamma_1=TWO_PI * rng.uniform(0.5, 2.0),
                    Gamma_2=TWO_PI * rng.uniform(0.5, 2.0))
    d = LambdaDriveParams(0.0, 0.0, 0.0, 0.0)
    rho = DensityMatrix3(0.0, 0.0, 1.0, 0j, 0j, 0j)
    deriv = obe_derivative(rho, d, r)
    assert deriv.rho_11 == pytest.approx(r.Gamma_1)
    assert deriv.rho_22 == pytest.approx(r.Gamma_2)
    assert deriv.rho_ee == pytest.approx(-r.Gamma)


def test_dark_state_is_stationary_at_resonance():
    omega_r, omega_2 = TWO_PI * 5.0, TWO_PI * 3.0
    r = RatesParams(gamma_s=0.0, gamma_orb=TWO_PI * 12.0,
                    Gamma_1=TWO_PI * 12.2, Gamma_2=TWO_PI * 1.8)
    d = LambdaDriveParams(Omega_R=omega_r, Omega_2=omega_2,
                          Delta_R=TWO_PI * 1.3, Delta_2=TWO_PI * 1.3)
    rho = DensityMatrix3.from_amplitudes(*dark_state(omega_r, omega_2).amplitudes)
    deriv = obe_derivative(rho, d, r).to_real9()
    assert np.abs(deriv).max() < 1e-14


def test_matches_independent_lindblad_superoperator():
    rng = np.random.default_rng(7)
    for _ in range(100):
        d, r = random_params(rng)
        rho = random_state(rng)
        sup = lindblad_superoperator(d, r)
        expected = (sup @ rho.to_matrix().ravel()).reshape(3, 3)
        got = obe_derivative(rho, d, r).to_matrix()
        assert np.abs(got - expected).max() < 1e-12


def test_derivative_is_linear_in_the_state():
    rng = np.random.default_rng(17)
    d, r = random_params(rng)
    for _ in range(20):
        y1, y2 = rng.standard_normal(9), rng.standard_normal(9)
        a, b = rng.standard_normal(2)
        lhs = obe_derivative(DensityMatrix3.from_real9(a * y1 + b * y2), d, r).to_real9()
        rhs = (a * obe_derivative(DensityMatrix3.from_real9(y1), d, r).to_real9()
               + b * obe_derivative(DensityMatrix3.from_real9(y2), d, r).to_real9())
        assert np.abs(lhs - rhs).max() < 1e-13


def test_generator_matrix_matches_derivative_columns():
    rng = np.random.default_rng(3)
    d, r = random_params(rng)
    g = generator_matrix(d, r)
    for col in range(9):
        y = np.zeros(9)
        y[col] = 1.0
        expected = obe_derivative(DensityMatrix3.from_real9(y), d, r).to_real9()
        assert np.abs(g[:, col] - expected).max() < 1e-13


def test_rabi_oscillation_closed_form():
    # two-level limit: rho_11(t) = cos^2(Omega t / 2)
    omega = TWO_PI * 1.7
    d = LambdaDriveParams(Omega_R=omega, Omega_2=0.0, Delta_R=0.0, Delta_2=0.0)
    r = RatesParams(0.0, 0.0, 0.0, 0.0)
    t = np.linspace(0.01, 2.5, 40)
    traj = evolve(DensityMatrix3.ground_g1(), d, r, t)
    assert np.abs(traj.rho_11 - np.cos(omega * t / 2.0) ** 2).max() < 1e-8


def test_optical_pumping_into_undriven_state():
    d = LambdaDriveParams(Omega_R=0.0, Omega_2=TWO_PI * 2.0, Delta_R=0.0, Delta_2=0.0)
    r = RatesParams(gamma_s=0.0, gamma_orb=TWO_PI * 1.0,
                    Gamma_1=TWO_PI * 1.0, Gamma_2=TWO_PI * 1.0)
    rho0 = DensityMatrix3(0.0, 1.0, 0.0, 0j, 0j, 0j)
    traj = evolve(rho0, d, r, np.linspace(1.0, 40.0, 10))
    assert traj.final().rho_11 == pytest.approx(1.0, abs=1e-6)


def test_trace_conserved_over_hundred_microseconds(default_rates, balanced_drive):
    t = np.linspace(0.5, 100.0, 50)
    traj = evolve(DensityMatrix3.ground_g1(), balanced_drive, default_rates, t)
    trace = traj.rho_11 + traj.rho_22 + traj.rho_ee
    assert np.abs(trace - 1.0).max() < 1e-8


def test_positivity_along_trajectories(default_rates):
    rng = np.random.default_rng(5)
    t = np.linspace(0.1, 20.0, 30)
    for _ in range(5):
        d, _ = random_params(rng)
        traj = evolve(DensityMatrix3.ground_g1(), d, default_rates, t)
        for i in range(len(t)):
            eigs = np.linalg.eigvalsh(traj.state_at(i).to_matrix())
            assert eigs.min() > -1e-7


def test_fixed_step_halving(default_rates, balanced_drive):
    t = np.linspace(0.5, 5.0, 6)
    rho0 = DensityMatrix3.ground_g1()
    a = evolve(rho0, balanced_drive, default_rates, t, method="fixed", dt=2e-4)
    b = evolve(rho0, balanced_drive, default_rates, t, method="fixed", dt=1e-4)
    assert np.abs(a.states[:, :3] - b.states[:, :3]).max() < 1e-8


def test_adaptive_matches_eigendecomposition_path(default_rates, balanced_drive):
    t = np.linspace(0.2, 8.0, 17)
    rho0 = DensityMatrix3.ground_g1()
    traj = evolve(rho0, balanced_drive, default_rates, t)
    g = generator_matrix(balanced_drive, default_rates)
    states = trajectory_grid(g, rho0.to_real9(), t)
    assert np.abs(states - traj.states).max() < 1e-6


def test_batched_eig_helpers_consistent(default_rates):
    deltas = TWO_PI * np.linspace(-3, 3, 11)
    g = generator_batch(deltas, np.zeros_like(deltas), TWO_PI * 2.0, TWO_PI * 2.0,
                        default_rates)
    y0 = DensityMatrix3.ground_g1().to_real9()
    finals = eig_final_state(g, y0, 2.0)
    avgs = eig_window_average(g, y0, 5.0)
    for i, delta in enumerate(deltas):
        d = LambdaDriveParams(TWO_PI * 2.0, TWO_PI * 2.0, delta, 0.0)
        tgrid = np.linspace(0.01, 5.0, 400)
        traj = evolve(DensityMatrix3.ground_g1(), d, default_rates,
                      np.concatenate((tgrid, [5.0 + 1e-9])))
        assert abs(finals[i, 2] - evolve(DensityMatrix3.ground_g1(), d, default_rates,
                                         np.array([2.0])).final().rho_ee) < 1e-7
        window_avg = np.trapezoid(traj.rho_ee[:-1], tgrid) / 5.0
        assert abs(avgs[i] - window_avg) < 2e-3


def test_steady_state_stationary_and_matches_long_evolution(default_rates, balanced_drive):
    ss = steady_state(balanced_drive, default_rates)
    deriv = obe_derivative(ss, balanced_drive, default_rates).to_real9()
    assert np.linalg.norm(deriv) < 1e-10
    horizon = 50.0 / (default_rates.gamma_s / TWO_PI)
    traj = evolve(DensityMatrix3.ground_g1(), balanced_drive, default_rates,
                  np.array([horizon]))
    assert np.abs(traj.final().to_real9() - ss.to_real9()).max() < 1e-6


def test_steady_state_perfect_trapping_without_spin_decay():
    omega_r, omega_2 = TWO_PI * 4.0, TWO_PI * 2.0
    r = RatesParams(gamma_s=0.0, gamma_orb=TWO_PI * 12.0,
                    Gamma_1=TWO_PI * 12.2, Gamma_2=TWO_PI * 1.8)
    d = LambdaDriveParams(Omega_R=omega_r, Omega_2=omega_2, Delta_R=0.0, Delta_2=0.0)
    ss = steady_state(d, r)
    assert ss.rho_ee == pytest.approx(0.0, abs=1e-12)
    expected = DensityMatrix3.from_amplitudes(*dark_state(omega_r, omega_2).amplitudes)
    assert np.abs(ss.to_real9() - expected.to_real9()).max() < 1e-10


def test_steady_state_pumping_limit(default_rates):
    d = LambdaDriveParams(Omega_R=0.0, Omega_2=TWO_PI * 3.0, Delta_R=0.0, Delta_2=0.0)
    ss = steady_state(d, default_rates)
    assert ss.rho_11 == pytest.approx(1.0, abs=1e-9)


def test_steady_state_partial_trapping_with_spin_decay(default_rates, balanced_drive):
    ss = steady_state(balanced_drive, default_rates)
    assert ss.rho_ee > 1e-4


def test_steady_state_degenerate_reported():
    r = RatesParams(gamma_s=0.0, gamma_orb=0.0, Gamma_1=0.0, Gamma_2=0.0)
    d = LambdaDriveParams(Omega_R=0.0, Omega_2=0.0, Delta_R=0.0, Delta_2=0.0)
    with pytest.raises(DegenerateSteadyStateError):
        steady_state(d, r)


def test_steady_state_detuning_symmetry(default_rates, balanced_drive):
    for delta in TWO_PI * np.array([0.4, 1.7, 5.0]):
        up = steady_state(balanced_drive.replace(Delta_R=delta), default_rates).rho_ee
        dn = steady_state(balanced_drive.replace(Delta_R=-delta), default_rates).rho_ee
        assert abs(up - dn) < 1e-10


def test_upper_state_scaling_with_dipole_detuning(default_rates):
    deltas = TWO_PI * np.geomspace(200.0, 2000.0, 7)
    rho_ee = np.array([
        steady_state(LambdaDriveParams(TWO_PI * 8.0, TWO_PI * 8.0, dd, dd),
                     default_rates).rho_ee
        for dd in deltas
    ])
    slope = np.polyfit(np.log(deltas), np.log(rho_ee), 1)[0]
    assert slope == pytest.approx(-2.0, abs=0.1)


def test_induced_decoherence_scale(default_rates):
    delta = TWO_PI * 480.0
    d = LambdaDriveParams(Omega_R=TWO_PI * 8.0, Omega_2=TWO_PI * 8.0,
                          Delta_R=delta + TWO_PI * 1.0, Delta_2=delta)
    rate = induced_decoherence_rate(d, default_rates)
    assert TWO_PI * 1e-3 / 3.0 < rate < TWO_PI * 1e-3 * 3.0


def test_evolve_validates_grid(default_rates, balanced_drive):
    with pytest.raises(ValueError):
        evolve(DensityMatrix3.ground_g1(), balanced_drive, default_rates,
               np.array([1.0, 0.5]))
    with pytest.raises(ValueError):
        evolve(DensityMatrix3.ground_g1(), balanced_drive, default_rates,
               np.array([1.0]), method="fixed")


def test_density_matrix3_validation():
    rho = DensityMatrix3(0.6, 0.39999999, 0.0, 0j, 0j, 0.6 + 0j)
    with pytest.raises(ValueError):
        rho.validate()
    DensityMatrix3(0.5, 0.5, 0.0, 0j, 0j, 0.3 + 0.1j).validate()


# ---------------------------------------------------------------------------
# Fock-resolved cross-check
# ---------------------------------------------------------------------------

def fock_sideband(lam, n_bar, omega_1, rates_scale, fock):
    wm = TWO_PI * 1.0
    p = DriveParams.from_detunings(omega_m=wm, Delta_1=wm, Delta_2=0.0,
                                   Omega_1=omega_1, Omega_2=0.3 * omega_1,
                                   g=lam * wm)
    space = HilbertSpace(fock)
    return p, space


def test_fock_resolved_factorizes_without_coupling():
    # zero coupling leaves the sideband leg dark; the driven leg reproduces
    # the reduced two-level dynamics
    wm = TWO_PI * 1.0
    omega_2 = TWO_PI * 0.8
    p = DriveParams.from_detunings(omega_m=wm, Delta_1=wm, Delta_2=0.0,
                                   Omega_1=TWO_PI * 0.5, Omega_2=omega_2, g=0.0)
    space = HilbertSpace(4)
    big = HilbertSpace(9)
    rates = RatesParams(gamma_s=0.0, gamma_orb=TWO_PI * 0.05,
                        Gamma_1=TWO_PI * 0.05, Gamma_2=TWO_PI * 0.05)
    h = lamb_dicke_hamiltonian(p, space)
    h_big = lamb_dicke_hamiltonian(p, big)
    rho0 = DensityMatrixFull.from_ket(space.basis_ket(1, 0))
    t = np.linspace(0.2, 3.0, 8)
    traj = fock_resolved_evolve(rho0, h, rates, t, h_large=h_big)
    d3 = LambdaDriveParams(Omega_R=0.0, Omega_2=omega_2, Delta_R=0.0, Delta_2=0.0)
    rho3 = DensityMatrix3(0.0, 1.0, 0.0, 0j, 0j, 0j)
    ref = evolve(rho3, d3, rates, t)
    for i in range(len(t)):
        pops = traj[i].electronic_populations()
        assert abs(pops[1] - ref.rho_22[i]) < 1e-6
        assert abs(pops[2] - ref.rho_ee[i]) < 1e-6


def test_fock_resolved_vacuum_frozen():
    p, space = fock_sideband(lam=0.05, n_bar=0, omega_1=TWO_PI * 0.5, rates_scale=0, fock=4)
    p = DriveParams.from_detunings(omega_m=p.omega_m, Delta_1=p.omega_m, Delta_2=0.0,
                                   Omega_1=p.Omega_1, Omega_2=0.0, g=p.g)
    rates = RatesParams(0.0, 0.0, 0.0, 0.0)
    h = lamb_dicke_hamiltonian(p, space)
    h_big = lamb_dicke_hamiltonian(p, HilbertSpace(9))
    rho0 = DensityMatrixFull.from_ket(space.basis_ket(0, 0))
    traj = fock_resolved_evolve(rho0, h, rates, np.linspace(0.5, 5.0, 5), h_large=h_big)
    for state in traj:
        assert np.abs(state.entries - rho0.entries).max() < 1e-9


def test_fock_resolved_first_rabi_period_matches_reduced_model(default_rates):
    # sector n_bar = 4 with weak decay: the full model's first sideband Rabi
    # period agrees with the reduced three-level prediction within 2%
    lam, n_bar = 0.05, 4
    wm = TWO_PI * 1.0
    omega_1 = TWO_PI * 2.0
    p = DriveParams.from_detunings(omega_m=wm, Delta_1=wm, Delta_2=0.0,
                                   Omega_1=omega_1, Omega_2=0.0, g=lam * wm)
    omega_r = lam * np.sqrt(n_bar) * omega_1
    period = TWO_PI / omega_r
    rates = RatesParams(gamma_s=0.0, gamma_orb=0.002 * omega_r,
                        Gamma_1=0.002 * omega_r, Gamma_2=0.002 * omega_r)
    space = HilbertSpace(9)
    h = lamb_dicke_hamiltonian(p, space)
    h_big = lamb_dicke_hamiltonian(p, HilbertSpace(14))
    rho0 = DensityMatrixFull.from_ket(space.basis_ket(0, n_bar))
    t = np.linspace(0.05 * period, 1.2 * period, 60)
    traj = fock_resolved_evolve(rho0, h, rates, t, h_large=h_big)
    pop_g1 = np.array([s.electronic_populations()[0] for s in traj])
    i0 = len(t) // 2
    full_period = t[i0 + np.argmax(pop_g1[i0:])]
    d3 = LambdaDriveParams(Omega_R=omega_r, Omega_2=0.0, Delta_R=0.0, Delta_2=0.0)
    ref = evolve(DensityMatrix3.ground_g1(), d3, rates, t)
    ref_period = t[i0 + np.argmax(ref.rho_11[i0:])]
    assert abs(full_period - ref_period) / period < 0.02
    assert abs(full_period - period) / period < 0.02
    # pointwise agreement of populations over the first period
    assert np.abs(pop_g1 - ref.rho_11).max() < 0.02


def test_fock_resolved_reports_cutoff_nonconvergence():
    # a phonon-emitting drive climbs the ladder; a tight cutoff clips it and
    # must be reported
    lam = 0.2
    wm = TWO_PI * 1.0
    p = DriveParams.from_detunings(omega_m=wm, Delta_1=-wm, Delta_2=0.0,
                                   Omega_1=TWO_PI * 3.0, Omega_2=0.0, g=lam * wm)
    rates = RatesParams(0.0, 0.0, 0.0, 0.0)
    space = HilbertSpace(3)
    h = lamb_dicke_hamiltonian(p, space, sideband="blue")
    h_big = lamb_dicke_hamiltonian(p, HilbertSpace(12), sideband="blue")
    rho0 = DensityMatrixFull.from_ket(space.basis_ket(0, 2))
    with pytest.raises(CutoffConvergenceError):
        fock_resolved_evolve(rho0, h, rates, np.linspace(0.5, 6.0, 4),
                             h_large=h_big, cutoff_tol=1e-6)


def test_fock_resolved_requires_larger_hamiltonian_for_check():
    space = HilbertSpace(4)
    p, _ = fock_sideband(0.05, 0, TWO_PI * 0.5, 0, 4)
    h = lamb_dicke_hamiltonian(p, space)
    rho0 = DensityMatrixFull.from_ket(space.basis_ket(0, 0))
    with pytest.raises(ValueError):
        fock_resolved_evolve(rho0, h, RatesParams(0, 0, 0, 0), np.array([1.0]))
