"""Rotating-frame density-matrix dynamics of the effective three-level system.

The model evolves the six independent density-matrix components

    rho_11, rho_22, rho_ee              (real populations)
    rho_e1, rho_e2, rho_21              (complex coherences)

with rho_12 = conj(rho_21) and rho_ie = conj(rho_ei). The equation set couples
the effective Rabi frequencies (Omega_R on the phonon-assisted leg, Omega_2 on
the direct leg), the effective detunings Delta_R and Delta_2, excited-state
decay Gamma = Gamma_1 + Gamma_2 with branching into |g1> and |g2>, the optical
dipole coherence decay gamma = Gamma/2 + gamma_orb, and the spin coherence
decay gamma_s. Trace is conserved exactly.

The derivative is linear in the state; sweeps exploit this by assembling the
9x9 real generator from per-parameter stencils and batching its
eigendecomposition over all sweep points.

Units: rad/us and us throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .space import LEVEL_E, LEVEL_G1, LEVEL_G2, DensityMatrixFull, HilbertSpace
from .hamiltonian import TimeDependentHamiltonian


class IntegrationError(RuntimeError):
    """The ODE integrator failed to reach the requested tolerance."""


class DegenerateSteadyStateError(RuntimeError):
    """The generator null space has dimension > 1; fall back to long-time evolution."""


class CutoffConvergenceError(RuntimeError):
    """Observables changed too much when the Fock cutoff was enlarged."""


@dataclass(frozen=True)
class RatesParams:
    """Decay and dephasing rates (rad/us).

    Gamma (total excited decay) and gamma (optical dipole coherence decay) are
    derived: Gamma = Gamma_1 + Gamma_2 and gamma = Gamma/2 + gamma_orb.
    """

    gamma_s: float
    gamma_orb: float
    Gamma_1: float
    Gamma_2: float

    def __post_init__(self):
        for name in ("gamma_s", "gamma_orb", "Gamma_1", "Gamma_2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def Gamma(self) -> float:
        return self.Gamma_1 + self.Gamma_2

    @property
    def gamma(self) -> float:
        return 0.5 * self.Gamma + self.gamma_orb

    def replace(self, **kw) -> "RatesParams":
        d = {"gamma_s": self.gamma_s, "gamma_orb": self.gamma_orb,
             "Gamma_1": self.Gamma_1, "Gamma_2": self.Gamma_2}
        d.update(kw)
        return RatesParams(**d)


@dataclass(frozen=True)
class LambdaDriveParams:
    """Effective drive parameters of the reduced three-level model (rad/us)."""

    Omega_R: float
    Omega_2: float
    Delta_R: float
    Delta_2: float

    def replace(self, **kw) -> "LambdaDriveParams":
        d = {"Omega_R": self.Omega_R, "Omega_2": self.Omega_2,
             "Delta_R": self.Delta_R, "Delta_2": self.Delta_2}
        d.update(kw)
        return LambdaDriveParams(**d)


@dataclass(frozen=True)
class DensityMatrix3:
    """State of the three-level model: populations and independent coherences."""

    rho_11: float
    rho_22: float
    rho_ee: float
    rho_e1: complex
    rho_e2: complex
    rho_21: complex

    TRACE_TOL = 1e-8
    POPULATION_TOL = -1e-9
    PURITY_TOL = 1e-8

    @classmethod
    def ground_g1(cls) -> "DensityMatrix3":
        return cls(1.0, 0.0, 0.0, 0j, 0j, 0j)

    @classmethod
    def from_amplitudes(cls, c1: complex, c2: complex, ce: complex) -> "DensityMatrix3":
        """Pure-state density matrix from amplitudes on (|g1>, |g2>, |e>)."""
        norm = abs(c1) ** 2 + abs(c2) ** 2 + abs(ce) ** 2
        if norm == 0:
            raise ValueError("zero state")
        c1, c2, ce = c1 / np.sqrt(norm), c2 / np.sqrt(norm), ce / np.sqrt(norm)
        return cls(
            rho_11=abs(c1) ** 2, rho_22=abs(c2) ** 2, rho_ee=abs(ce) ** 2,
            rho_e1=ce * np.conj(c1), rho_e2=ce * np.conj(c2), rho_21=c2 * np.conj(c1),
        )

    def to_matrix(self) -> np.ndarray:
        """3x3 matrix in the (g1, g2, e) basis."""
        m = np.empty((3, 3), dtype=complex)
        m[LEVEL_G1, LEVEL_G1] = self.rho_11
        m[LEVEL_G2, LEVEL_G2] = self.rho_22
        m[LEVEL_E, LEVEL_E] = self.rho_ee
        m[LEVEL_G2, LEVEL_G1] = self.rho_21
        m[LEVEL_G1, LEVEL_G2] = np.conj(self.rho_21)
        m[LEVEL_E, LEVEL_G1] = self.rho_e1
        m[LEVEL_G1, LEVEL_E] = np.conj(self.rho_e1)
        m[LEVEL_E, LEVEL_G2] = self.rho_e2
        m[LEVEL_G2, LEVEL_E] = np.conj(self.rho_e2)
        return m

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "DensityMatrix3":
        return cls(
            rho_11=float(m[LEVEL_G1, LEVEL_G1].real),
            rho_22=float(m[LEVEL_G2, LEVEL_G2].real),
            rho_ee=float(m[LEVEL_E, LEVEL_E].real),
            rho_e1=complex(m[LEVEL_E, LEVEL_G1]),
            rho_e2=complex(m[LEVEL_E, LEVEL_G2]),
            rho_21=complex(m[LEVEL_G2, LEVEL_G1]),
        )

    def validate(self):
        pops = (self.rho_11, self.rho_22, self.rho_ee)
        if min(pops) < self.POPULATION_TOL:
            raise ValueError("negative population beyond tolerance")
        if abs(sum(pops) - 1.0) > self.TRACE_TOL:
            raise ValueError("trace deviates from 1 beyond tolerance")
        for rho_ij, (pi, pj) in (
            (self.rho_21, (self.rho_22, self.rho_11)),
            (self.rho_e1, (self.rho_ee, self.rho_11)),
            (self.rho_e2, (self.rho_ee, self.rho_22)),
        ):
            if abs(rho_ij) ** 2 > pi * pj + self.PURITY_TOL:
                raise ValueError("coherence exceeds the Cauchy-Schwarz bound")

    def to_real9(self) -> np.ndarray:
        return np.array([
            self.rho_11, self.rho_22, self.rho_ee,
            self.rho_e1.real, self.rho_e1.imag,
            self.rho_e2.real, self.rho_e2.imag,
            self.rho_21.real, self.rho_21.imag,
        ])

    @classmethod
    def from_real9(cls, y: np.ndarray) -> "DensityMatrix3":
        return cls(
            rho_11=float(y[0]), rho_22=float(y[1]), rho_ee=float(y[2]),
            rho_e1=complex(y[3], y[4]), rho_e2=complex(y[5], y[6]),
            rho_21=complex(y[7], y[8]),
        )


IDX_R11, IDX_R22, IDX_REE = 0, 1, 2


def obe_derivative(rho: DensityMatrix3, d: LambdaDriveParams,
                   r: RatesParams) -> DensityMatrix3:
    """Time derivative of the three-level density matrix components.

    The six equations implemented verbatim; the trace of the derivative is
    zero because Gamma = Gamma_1 + Gamma_2.
    """
    rho_12 = np.conj(rho.rho_21)
    rho_2e = np.conj(rho.rho_e2)
    gamma = r.gamma

    d_e1 = (-(1j * d.Delta_R + gamma) * rho.rho_e1
            + 0.5j * d.Omega_R * (rho.rho_ee - rho.rho_11)
            - 0.5j * d.Omega_2 * rho.rho_21)
    d_e2 = (-(1j * d.Delta_2 + gamma) * rho.rho_e2
            + 0.5j * d.Omega_2 * (rho.rho_ee - rho.rho_22)
            - 0.5j * d.Omega_R * rho_12)
    d_21 = (-(1j * (d.Delta_R - d.Delta_2) + r.gamma_s) * rho.rho_21
            + 0.5j * d.Omega_R * rho_2e
            - 0.5j * d.Omega_2 * rho.rho_e1)
    pump_1 = 2.0 * np.real(0.5j * d.Omega_R * rho.rho_e1)
    pump_2 = 2.0 * np.real(0.5j * d.Omega_2 * rho.rho_e2)
    d_ee = -r.Gamma * rho.rho_ee + pump_1 + pump_2
    d_11 = r.Gamma_1 * rho.rho_ee - pump_1
    d_22 = r.Gamma_2 * rho.rho_ee - pump_2

    return DensityMatrix3(
        rho_11=float(d_11), rho_22=float(d_22), rho_ee=float(d_ee),
        rho_e1=complex(d_e1), rho_e2=complex(d_e2), rho_21=complex(d_21),
    )


# ---------------------------------------------------------------------------
# Linear-generator machinery
# ---------------------------------------------------------------------------

_STENCIL_PARAMS = ("Omega_R", "Omega_2", "Delta_R", "Delta_2",
                   "gamma_s", "gamma_orb", "Gamma_1", "Gamma_2")
_STENCILS: dict[str, np.ndarray] | None = None


def _unit_params(name: str) -> tuple[LambdaDriveParams, RatesParams]:
    drive = {"Omega_R": 0.0, "Omega_2": 0.0, "Delta_R": 0.0, "Delta_2": 0.0}
    rates = {"gamma_s": 0.0, "gamma_orb": 0.0, "Gamma_1": 0.0, "Gamma_2": 0.0}
    if name in drive:
        drive[name] = 1.0
    else:
        rates[name] = 1.0
    return LambdaDriveParams(**drive), RatesParams(**rates)


def _parameter_stencils() -> dict[str, np.ndarray]:
    """Per-parameter 9x9 blocks of the generator, extracted column by column.

    The derivative is linear both in the state and in each parameter, so the
    full generator is the parameter-weighted sum of these constant stencils.
    """
    global _STENCILS
    if _STENCILS is None:
        stencils = {}
        for name in _STENCIL_PARAMS:
            d, r = _unit_params(name)
            g = np.zeros((9, 9))
            for col in range(9):
                y = np.zeros(9)
                y[col] = 1.0
                g[:, col] = obe_derivative(DensityMatrix3.from_real9(y), d, r).to_real9()
            stencils[name] = g
        _STENCILS = stencils
    return _STENCILS


def generator_matrix(d: LambdaDriveParams, r: RatesParams) -> np.ndarray:
    """9x9 real generator G with dy/dt = G y for the real component vector."""
    s = _parameter_stencils()
    return (d.Omega_R * s["Omega_R"] + d.Omega_2 * s["Omega_2"]
            + d.Delta_R * s["Delta_R"] + d.Delta_2 * s["Delta_2"]
            + r.gamma_s * s["gamma_s"] + r.gamma_orb * s["gamma_orb"]
            + r.Gamma_1 * s["Gamma_1"] + r.Gamma_2 * s["Gamma_2"])


def generator_batch(Delta_R: np.ndarray, Delta_2: np.ndarray, Omega_R, Omega_2,
                    r: RatesParams) -> np.ndarray:
    """Stack of generators for arrays of detunings (Rabi frequencies scalar or array)."""
    s = _parameter_stencils()
    Delta_R = np.asarray(Delta_R, dtype=float)
    Delta_2 = np.broadcast_to(np.asarray(Delta_2, dtype=float), Delta_R.shape)
    Omega_R = np.broadcast_to(np.asarray(Omega_R, dtype=float), Delta_R.shape)
    Omega_2 = np.broadcast_to(np.asarray(Omega_2, dtype=float), Delta_R.shape)
    const = (r.gamma_s * s["gamma_s"] + r.gamma_orb * s["gamma_orb"]
             + r.Gamma_1 * s["Gamma_1"] + r.Gamma_2 * s["Gamma_2"])
    g = np.empty(Delta_R.shape + (9, 9))
    g[...] = const
    g += Delta_R[..., None, None] * s["Delta_R"]
    g += Delta_2[..., None, None] * s["Delta_2"]
    g += Omega_R[..., None, None] * s["Omega_R"]
    g += Omega_2[..., None, None] * s["Omega_2"]
    return g


def _phi(z: np.ndarray) -> np.ndarray:
    """(exp(z) - 1)/z, continuous at z = 0."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-8
    zs = z[small]
    out[small] = 1.0 + zs / 2.0 + zs * zs / 6.0
    zb = z[~small]
    out[~small] = (np.exp(zb) - 1.0) / zb
    return out


def _eig_coefficients(g_stack: np.ndarray, y0: np.ndarray):
    w, v = np.linalg.eig(g_stack)
    rhs = np.broadcast_to(y0.astype(complex), g_stack.shape[:-2] + (9,))[..., None]
    c = np.linalg.solve(v, np.ascontiguousarray(rhs))[..., 0]
    return w, v, c


def eig_window_average(g_stack: np.ndarray, y0: np.ndarray, window: float,
                       component: int = IDX_REE) -> np.ndarray:
    """(1/T) integral of one state component over [0, T] for a stack of generators."""
    w, v, c = _eig_coefficients(g_stack, y0)
    return np.real(np.sum(v[..., component, :] * c * _phi(w * window), axis=-1))


def eig_final_state(g_stack: np.ndarray, y0: np.ndarray, t: float) -> np.ndarray:
    """y(t) for a stack of generators, via batched eigendecomposition."""
    w, v, c = _eig_coefficients(g_stack, y0)
    return np.real(np.einsum("...jk,...k->...j", v, c * np.exp(w * t)))


def trajectory_grid(g: np.ndarray, y0: np.ndarray, t_grid: np.ndarray) -> np.ndarray:
    """y(t) on a time grid for a single constant generator (shape (nt, 9))."""
    w, v = np.linalg.eig(g)
    c = np.linalg.solve(v, y0.astype(complex))
    phases = np.exp(np.outer(np.asarray(t_grid, dtype=float), w))
    return np.real(phases * c @ v.T)


# ---------------------------------------------------------------------------
# Trajectory integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory3:
    """Trajectory of the three-level model on a time grid."""

    times: np.ndarray
    states: np.ndarray  # (nt, 9) real component vectors

    @property
    def rho_11(self) -> np.ndarray:
        return self.states[:, IDX_R11]

    @property
    def rho_22(self) -> np.ndarray:
        return self.states[:, IDX_R22]

    @property
    def rho_ee(self) -> np.ndarray:
        return self.states[:, IDX_REE]

    @property
    def rho_21(self) -> np.ndarray:
        return self.states[:, 7] + 1j * self.states[:, 8]

    def state_at(self, i: int) -> DensityMatrix3:
        return DensityMatrix3.from_real9(self.states[i])

    def final(self) -> DensityMatrix3:
        return self.state_at(len(self.times) - 1)


def evolve(rho0: DensityMatrix3, d: LambdaDriveParams, r: RatesParams,
           t_grid, method: str = "adaptive", dt: float | None = None,
           rtol: float = 1e-9, atol: float = 1e-12) -> Trajectory3:
    """Integrate the density-matrix equations over an increasing time grid.

    method="adaptive" uses an embedded Runge-Kutta pair at the given
    tolerances; method="fixed" uses classic fixed-step RK4 with step dt for
    bit-reproducible runs (testable by step halving).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    g = generator_matrix(d, r)
    y0 = rho0.to_real9()

    if t_grid[0] != 0.0:
        t_eval = np.concatenate(([0.0], t_grid))
        drop_first = True
    else:
        t_eval = t_grid
        drop_first = False

    if method == "adaptive":
        sol = solve_ivp(lambda t, y: g @ y, (0.0, float(t_eval[-1])), y0,
                        t_eval=t_eval, rtol=rtol, atol=atol, method="DOP853")
        if not sol.success:
            raise IntegrationError(sol.message)
        states = sol.y.T
    elif method == "fixed":
        if dt is None:
            raise ValueError("fixed-step integration requires dt")
        states = np.empty((len(t_eval), 9))
        y = y0.copy()
        t = 0.0
        for i, t_target in enumerate(t_eval):
            while t < t_target - 1e-15:
                h = min(dt, t_target - t)
                k1 = g @ y
                k2 = g @ (y + 0.5 * h * k1)
                k3 = g @ (y + 0.5 * h * k2)
                k4 = g @ (y + h * k3)
                y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                t += h
            states[i] = y
    else:
        raise ValueError("method must be 'adaptive' or 'fixed'")

    if drop_first:
        states = states[1:]
    return Trajectory3(times=t_grid, states=states)


def steady_state(d: LambdaDriveParams, r: RatesParams,
                 degeneracy_tol: float = 1e-9) -> DensityMatrix3:
    """Stationary state of the generator under the unit-trace constraint.

    Solves the linear system with one row replaced by the trace condition and
    reports a degenerate null space (dimension > 1) instead of picking a
    member arbitrarily.
    """
    g = generator_matrix(d, r)
    svals = np.linalg.svd(g, compute_uv=False)
    scale = svals[0] if svals[0] > 0 else 1.0
    if svals[-2] < degeneracy_tol * scale:
        raise DegenerateSteadyStateError(
            "steady-state manifold has dimension > 1; use long-time evolution"
        )
    a = g.copy()
    a[0, :] = 0.0
    a[0, [IDX_R11, IDX_R22, IDX_REE]] = 1.0
    b = np.zeros(9)
    b[0] = 1.0
    y = np.linalg.solve(a, b)
    # The replaced row is redundant for a valid solution; verify stationarity.
    resid = np.linalg.norm(g @ y)
    if resid > 1e-8 * max(scale, 1.0):
        raise DegenerateSteadyStateError(f"steady-state residual too large ({resid:.2e})")
    return DensityMatrix3.from_real9(y)


def induced_decoherence_rate(d: LambdaDriveParams, r: RatesParams,
                             t_max: float | None = None, n_points: int = 60) -> float:
    """Spin-coherence decay rate caused by the drives alone.

    Runs the model with gamma_s = 0 from an equal superposition of the ground
    states and fits an exponential to |rho_21|(t); the result is the
    drive-induced decoherence rate. The caller chooses detunings (typically a
    two-photon offset large compared to the effective spin Rabi frequency so
    coherent transfer does not masquerade as decay).
    """
    r0 = r.replace(gamma_s=0.0)
    rho0 = DensityMatrix3.from_amplitudes(1.0, 1.0, 0.0)
    if t_max is None:
        delta_scale = max(abs(d.Delta_R), abs(d.Delta_2), 1.0)
        est = r0.Gamma * ((d.Omega_R / (2 * delta_scale)) ** 2
                          + (d.Omega_2 / (2 * delta_scale)) ** 2)
        t_max = 2.5 / max(est, 1e-9)
    t_grid = np.linspace(t_max / n_points, t_max, n_points)
    g = generator_matrix(d, r0)
    states = trajectory_grid(g, rho0.to_real9(), t_grid)
    coh = np.hypot(states[:, 7], states[:, 8])
    if np.any(coh <= 0):
        raise IntegrationError("spin coherence vanished; cannot fit a decay rate")
    slope = np.polyfit(t_grid, np.log(coh), 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# Fock-resolved cross-check
# ---------------------------------------------------------------------------

def _lindblad_channels(space: HilbertSpace, r: RatesParams) -> list[np.ndarray]:
    """Collapse operators on the composite space reproducing the three-level rates.

    Decay channels |e>->|g1| and |e>->|g2> plus two diagonal dephasing
    channels chosen so the coherence decay rates are gamma (optical) and
    gamma_s (spin); requires gamma_orb >= gamma_s / 4. The phonon is lossless.
    """
    if r.gamma_orb < r.gamma_s / 4.0 - 1e-15:
        raise ValueError("dephasing decomposition requires gamma_orb >= gamma_s/4")
    n = space.fock_cutoff
    eye_ph = np.eye(n)

    def emb(elec):
        return np.kron(elec, eye_ph).astype(complex)

    flip1 = np.zeros((3, 3)); flip1[LEVEL_G1, LEVEL_E] = 1.0
    flip2 = np.zeros((3, 3)); flip2[LEVEL_G2, LEVEL_E] = 1.0
    proj_e = np.zeros((3, 3)); proj_e[LEVEL_E, LEVEL_E] = 1.0
    spin_deph = np.diag([0.0, np.sqrt(2.0 * r.gamma_s), 0.5 * np.sqrt(2.0 * r.gamma_s)])

    ops = [np.sqrt(r.Gamma_1) * emb(flip1), np.sqrt(r.Gamma_2) * emb(flip2)]
    orb_rate = r.gamma_orb - r.gamma_s / 4.0
    if orb_rate > 0:
        ops.append(np.sqrt(2.0 * orb_rate) * emb(proj_e))
    if r.gamma_s > 0:
        ops.append(emb(spin_deph))
    return [op for op in ops if np.abs(op).max() > 0]


def fock_resolved_evolve(rho0: DensityMatrixFull, h: TimeDependentHamiltonian,
                         r: RatesParams, t_grid, check_cutoff: bool = True,
                         h_large: TimeDependentHamiltonian | None = None,
                         cutoff_tol: float = 1e-6,
                         rtol: float = 1e-8, atol: float = 1e-10) -> list[DensityMatrixFull]:
    """Master-equation evolution on the full electronic-phonon space.

    Cross-check model: the Hamiltonian is one of the builders' outputs and the
    collapse operators mirror the three-level rates with an undamped phonon.
    With check_cutoff the run is repeated on h_large (the same Hamiltonian
    built with a larger Fock cutoff) and the electronic populations must agree
    to cutoff_tol (relative); disagreement is reported as
    CutoffConvergenceError.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if check_cutoff and h_large is None:
        raise ValueError("check_cutoff=True requires h_large built on a larger space")

    def run(rho_init: DensityMatrixFull, ham: TimeDependentHamiltonian):
        sp = rho_init.space
        dim = sp.total_dim
        channels = _lindblad_channels(sp, r)
        ch_dag = [c.conj().T for c in channels]
        ch_sq = [cd @ c for c, cd in zip(channels, ch_dag)]

        def rhs(t, y):
            rho = y.reshape(dim, dim)
            hm = ham(t)
            drho = -1j * (hm @ rho - rho @ hm)
            for c, cd, sq in zip(channels, ch_dag, ch_sq):
                drho += c @ rho @ cd - 0.5 * (sq @ rho + rho @ sq)
            return drho.ravel()

        t_eval = t_grid if t_grid[0] == 0.0 else np.concatenate(([0.0], t_grid))
        sol = solve_ivp(rhs, (0.0, float(t_eval[-1])), rho_init.entries.ravel(),
                        t_eval=t_eval, rtol=rtol, atol=atol, method="DOP853")
        if not sol.success:
            raise IntegrationError(sol.message)
        states = sol.y.T.reshape(-1, dim, dim)
        if t_grid[0] != 0.0:
            states = states[1:]
        return [DensityMatrixFull(sp, s) for s in states]

    result = run(rho0, h)

    if check_cutoff:
        rho_big = rho0.with_cutoff(h_large.space.fock_cutoff)
        result_big = run(rho_big, h_large)
        for small, big in zip(result, result_big):
            p_small = small.electronic_populations()
            p_big = big.electronic_populations()
            if np.abs(p_small - p_big).max() > cutoff_tol * max(1.0, np.abs(p_big).max()):
                raise CutoffConvergenceError(
                    "electronic populations changed beyond tolerance when the "
                    "Fock cutoff was raised"
                )
    return result
