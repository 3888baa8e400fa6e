"""Hamiltonian builders for the driven three-level emitter with a strain-coupled phonon.

Four equivalent pictures are provided, connected by explicit unitary maps:

lab frame
    H(t) = w_m b'b - nu1 |g1><g1| - nu2 |g2><g2| + g (b' + b) |e><e|
           + (Omega1/2) (exp(-i w1 t) |e><g1| + h.c.)
           + (Omega2/2) (exp(-i w2 t) |e><g2| + h.c.)

polaron frame
    Conjugation by U = exp[-(g/w_m)(b' - b)|e><e|] removes the static strain
    term. The excited level acquires the polaron shift -g^2/w_m and the drive
    operators the static dressing exp[+(g/w_m)(b' - b)].

interaction picture
    Relative to the full static part H0 of the polaron-frame Hamiltonian,
    composed with the phonon parity (-1)^(b'b). Drive phases become
    exp(i Delta_i t) with Delta_1 = (nu1 - g^2/w_m) - w1 (same for leg 2) and
    the dressing oscillates: exp[-(g/w_m)(b' exp(i w_m t) - b exp(-i w_m t))].

sideband (Lamb-Dicke) approximation
    First order of the dressing, keeping the near-resonant phonon exchange:
    (Omega1/2)(g/w_m) (b exp(i(Delta_1 - w_m) t) |e><g1| + h.c.)
    + (Omega2/2) (exp(i Delta_2 t) |e><g2| + h.c.)

Sign convention: the parity factor in the interaction-frame map is what makes
the polaron-frame dressing sign (+) and the interaction/sideband dressing sign
(-) mutually consistent; the frame-equivalence tests enforce this choice. The
excited-state shift is -g^2/w_m, the value consistent with the Delta_1
definition and with direct conjugation by U.

Units: hbar = 1, angular frequencies in rad/us, time in us.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .space import (
    LEVEL_E,
    LEVEL_G1,
    LEVEL_G2,
    HilbertSpace,
    OperatorMatrix,
    electronic_flip,
    electronic_projector,
    phonon_displacement,
    phonon_parity,
    tensor_embed,
)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class DriveParams:
    """Drive and coupling parameters, all angular frequencies in rad/us.

    omega_m   phonon (SAW) frequency
    nu_1/nu_2 transition frequencies |g1>->|e| and |g2>->|e| (bare, unshifted)
    omega_1/omega_2 laser frequencies on the two legs
    Omega_1/Omega_2 bare Rabi frequencies (real, non-negative; phases zero)
    g         electron-phonon coupling rate
    n_bar     mean phonon number (dimensionless)
    """

    omega_m: float
    nu_1: float
    nu_2: float
    omega_1: float
    omega_2: float
    Omega_1: float
    Omega_2: float
    g: float
    n_bar: float = 0.0

    def __post_init__(self):
        for name in ("omega_m", "nu_1", "nu_2", "omega_1", "omega_2",
                     "Omega_1", "Omega_2", "g", "n_bar"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.omega_m == 0:
            raise ValueError("omega_m must be positive")

    @property
    def lamb_dicke(self) -> float:
        """Effective Lamb-Dicke parameter g / omega_m."""
        return self.g / self.omega_m

    @classmethod
    def from_detunings(cls, omega_m, Delta_1, Delta_2, Omega_1, Omega_2, g,
                       nu_1=None, nu_2=None, n_bar=0.0):
        """Construct with laser frequencies chosen to realize given detunings.

        The absolute transition frequencies are a gauge choice; defaults keep
        them a few omega_m above zero so all frequencies stay non-negative.
        """
        shift = g * g / omega_m
        if nu_1 is None:
            nu_1 = 3.0 * omega_m + shift + max(Delta_1, 0.0)
        if nu_2 is None:
            nu_2 = 2.0 * omega_m + shift + max(Delta_2, 0.0)
        return cls(
            omega_m=omega_m,
            nu_1=nu_1,
            nu_2=nu_2,
            omega_1=(nu_1 - shift) - Delta_1,
            omega_2=(nu_2 - shift) - Delta_2,
            Omega_1=Omega_1,
            Omega_2=Omega_2,
            g=g,
            n_bar=n_bar,
        )


@dataclass(frozen=True)
class DetuningSet:
    """Effective detunings; always recomputed from DriveParams."""

    Delta_1: float
    Delta_2: float
    Delta_R: float


def detunings(p: DriveParams) -> DetuningSet:
    shift = p.g * p.g / p.omega_m
    d1 = (p.nu_1 - shift) - p.omega_1
    d2 = (p.nu_2 - shift) - p.omega_2
    return DetuningSet(Delta_1=d1, Delta_2=d2, Delta_R=d1 - p.omega_m)


@dataclass(frozen=True)
class Term:
    """One operator with an exponential scalar coefficient amp * exp(i omega t)."""

    op: np.ndarray
    amplitude: complex
    omega: float


class TimeDependentHamiltonian:
    """Sum of (constant operator, amp * exp(i omega t)) terms.

    Non-Hermitian operators are added together with their conjugate partner so
    the evaluated matrix is Hermitian at every time.
    """

    def __init__(self, space: HilbertSpace):
        self.space = space
        self.terms: list[Term] = []
        self._norm_cache = None

    def add(self, op: np.ndarray, amplitude: complex = 1.0, omega: float = 0.0,
            with_conjugate: bool = False):
        op = np.asarray(op, dtype=complex)
        if op.shape != (self.space.total_dim, self.space.total_dim):
            raise ValueError("term operator does not match the space dimension")
        self.terms.append(Term(op, complex(amplitude), float(omega)))
        if with_conjugate:
            self.terms.append(Term(op.conj().T, np.conj(amplitude), -float(omega)))
        self._norm_cache = None

    def __call__(self, t: float) -> np.ndarray:
        h = np.zeros((self.space.total_dim, self.space.total_dim), dtype=complex)
        for term in self.terms:
            h += (term.amplitude * np.exp(1j * term.omega * t)) * term.op
        return h

    def omega_max(self) -> float:
        """Fastest coefficient oscillation frequency (rad/us)."""
        return max((abs(t.omega) for t in self.terms), default=0.0)

    def slowest_nonzero_omega(self) -> float:
        freqs = [abs(t.omega) for t in self.terms if abs(t.omega) > 1e-12]
        return min(freqs) if freqs else 0.0

    def norm_bound(self) -> float:
        """Upper bound on sup_t ||H(t)||_2."""
        if self._norm_cache is None:
            self._norm_cache = sum(
                abs(t.amplitude) * np.linalg.norm(t.op, 2) for t in self.terms
            )
        return self._norm_cache

    def static_part(self) -> np.ndarray:
        h = np.zeros((self.space.total_dim, self.space.total_dim), dtype=complex)
        for term in self.terms:
            if abs(term.omega) <= 1e-12:
                h += term.amplitude * term.op
        return h


def build_lab_hamiltonian(p: DriveParams, space: HilbertSpace) -> TimeDependentHamiltonian:
    """Rotating-wave lab-frame Hamiltonian (strain coupling plus two drives)."""
    n_hat = space.number()
    b = space.annihilation()
    eye_ph = np.eye(space.fock_cutoff)

    h = TimeDependentHamiltonian(space)
    h.add(tensor_embed(np.eye(3), n_hat, space).entries, p.omega_m)
    h.add(tensor_embed(electronic_projector(LEVEL_G1), eye_ph, space).entries, -p.nu_1)
    h.add(tensor_embed(electronic_projector(LEVEL_G2), eye_ph, space).entries, -p.nu_2)
    h.add(tensor_embed(electronic_projector(LEVEL_E), b + b.conj().T, space).entries, p.g)
    h.add(tensor_embed(electronic_flip(LEVEL_E, LEVEL_G1), eye_ph, space).entries,
          0.5 * p.Omega_1, -p.omega_1, with_conjugate=True)
    h.add(tensor_embed(electronic_flip(LEVEL_E, LEVEL_G2), eye_ph, space).entries,
          0.5 * p.Omega_2, -p.omega_2, with_conjugate=True)
    return h


def polaron_transform(p: DriveParams, space: HilbertSpace) -> OperatorMatrix:
    """Displacement unitary exp[-(g/w_m)(b' - b)|e><e|].

    Identity on the ground blocks exactly; displaces the phonon on the excited
    block. Conjugating the lab Hamiltonian with it removes the strain term.
    """
    lam = p.lamb_dicke
    if lam > 0.5:
        warnings.warn(
            f"g/omega_m = {lam:.3f} exceeds the documented validity range (<= 0.5)",
            stacklevel=2,
        )
    n = space.fock_cutoff
    u = np.kron(electronic_projector(LEVEL_G1) + electronic_projector(LEVEL_G2),
                np.eye(n)).astype(complex)
    u += np.kron(electronic_projector(LEVEL_E), phonon_displacement(-lam, n))
    return OperatorMatrix(space, u)


def build_transformed_hamiltonian(p: DriveParams, space: HilbertSpace) -> TimeDependentHamiltonian:
    """Polaron-frame Hamiltonian: strain removed, drives dressed by exp[+(g/w_m)(b'-b)]."""
    lam = p.lamb_dicke
    n_hat = space.number()
    eye_ph = np.eye(space.fock_cutoff)
    dressing = phonon_displacement(lam, space.fock_cutoff)

    h = TimeDependentHamiltonian(space)
    h.add(tensor_embed(np.eye(3), n_hat, space).entries, p.omega_m)
    h.add(tensor_embed(electronic_projector(LEVEL_G1), eye_ph, space).entries, -p.nu_1)
    h.add(tensor_embed(electronic_projector(LEVEL_G2), eye_ph, space).entries, -p.nu_2)
    # Polaron shift of the excited level; sign fixed by conjugation with U.
    h.add(tensor_embed(electronic_projector(LEVEL_E), eye_ph, space).entries,
          -p.g * p.g / p.omega_m)
    h.add(tensor_embed(electronic_flip(LEVEL_E, LEVEL_G1), dressing, space).entries,
          0.5 * p.Omega_1, -p.omega_1, with_conjugate=True)
    h.add(tensor_embed(electronic_flip(LEVEL_E, LEVEL_G2), dressing, space).entries,
          0.5 * p.Omega_2, -p.omega_2, with_conjugate=True)
    return h


def transformed_static_frame(p: DriveParams, space: HilbertSpace) -> np.ndarray:
    """Static part H0 of the polaron-frame Hamiltonian (defines the interaction picture)."""
    return build_transformed_hamiltonian(p, space).static_part()


def _diagonal_bands(mat: np.ndarray, drop_below: float = 1e-14):
    """Split a matrix into its diagonal bands {m: B_m} with row - col = m."""
    n = mat.shape[0]
    bands = {}
    for m in range(-(n - 1), n):
        band = np.zeros_like(mat)
        idx = np.arange(max(0, m), min(n, n + m))
        band[idx, idx - m] = mat[idx, idx - m]
        if np.abs(band).max() > drop_below:
            bands[m] = band
    return bands


def build_interaction_hamiltonian(p: DriveParams, space: HilbertSpace) -> TimeDependentHamiltonian:
    """Interaction-picture Hamiltonian with the oscillating phonon dressing.

    The dressing exp[-(g/w_m)(b' exp(i w_m t) - b exp(-i w_m t))] equals the
    static displacement exp[-(g/w_m)(b'-b)] conjugated by the phonon rotation,
    so each of its diagonal bands B_m carries the phase exp(i m w_m t). Terms
    are stored band by band.
    """
    lam = p.lamb_dicke
    d = detunings(p)
    dressing = phonon_displacement(-lam, space.fock_cutoff)
    bands = _diagonal_bands(dressing)

    h = TimeDependentHamiltonian(space)
    for level, delta, omega_rabi in (
        (LEVEL_G1, d.Delta_1, p.Omega_1),
        (LEVEL_G2, d.Delta_2, p.Omega_2),
    ):
        if omega_rabi == 0.0:
            continue
        flip = electronic_flip(LEVEL_E, level)
        for m, band in bands.items():
            h.add(tensor_embed(flip, band, space).entries,
                  0.5 * omega_rabi, delta + m * p.omega_m, with_conjugate=True)
    return h


def lamb_dicke_hamiltonian(p: DriveParams, space: HilbertSpace,
                           sideband: str = "red") -> TimeDependentHamiltonian:
    """First-order sideband Hamiltonian.

    sideband="red" keeps the phonon-absorbing term, resonant at
    Delta_1 = w_m; the matrix element <e, n-1|H|g1, n> at t = 0 is
    (Omega_1/2)(g/w_m) sqrt(n), so the effective Rabi frequency on the
    n-phonon manifold is (g/w_m) sqrt(n) Omega_1.

    sideband="blue" keeps the phonon-emitting term instead (resonant at
    Delta_1 = -w_m). The lab experiment only establishes the red case; the
    blue variant follows from the same expansion and is provided as written.
    """
    lam = p.lamb_dicke
    d = detunings(p)
    b = space.annihilation()
    eye_ph = np.eye(space.fock_cutoff)

    h = TimeDependentHamiltonian(space)
    if sideband == "red":
        h.add(tensor_embed(electronic_flip(LEVEL_E, LEVEL_G1), b, space).entries,
              0.5 * p.Omega_1 * lam, d.Delta_1 - p.omega_m, with_conjugate=True)
    elif sideband == "blue":
        h.add(tensor_embed(electronic_flip(LEVEL_E, LEVEL_G1), b.conj().T, space).entries,
              -0.5 * p.Omega_1 * lam, d.Delta_1 + p.omega_m, with_conjugate=True)
    else:
        raise ValueError("sideband must be 'red' or 'blue'")
    if p.Omega_2 != 0.0:
        h.add(tensor_embed(electronic_flip(LEVEL_E, LEVEL_G2), eye_ph, space).entries,
              0.5 * p.Omega_2, d.Delta_2, with_conjugate=True)
    return h


def effective_sideband_rabi(Omega_R: float, Omega_pm: float, Delta: float) -> float:
    """Effective spin-flip Rabi frequency after adiabatic elimination: O_R O_pm / (2|Delta|)."""
    if Delta == 0.0:
        raise ValueError("Delta must be nonzero (adiabatic elimination invalid)")
    return Omega_R * Omega_pm / (2.0 * abs(Delta))


def interaction_frame_map(p: DriveParams, space: HilbertSpace, t: float) -> np.ndarray:
    """Unitary W(t) mapping polaron-frame states to interaction-picture states.

    W(t) = P exp(i H0 t) with P the phonon parity; P commutes with H0. The
    parity factor fixes the sign convention of the interaction-picture
    dressing (see the module docstring).
    """
    h0 = transformed_static_frame(p, space)
    # H0 is diagonal in this basis.
    w = np.exp(1j * np.diag(h0).real * t)
    return phonon_parity(space).entries @ np.diag(w)


def rotating_frame_generator(p: DriveParams, space: HilbertSpace, picture: str) -> np.ndarray:
    """Diagonal generator K such that exp(iKt) H(t) exp(-iKt) - K is static.

    picture: "lab" or "transformed" (laser-frequency frame) or
    "interaction" / "lamb_dicke" (detuning + phonon frame).
    """
    eye_ph = np.eye(space.fock_cutoff)
    if picture in ("lab", "transformed"):
        k = -p.omega_1 * tensor_embed(electronic_projector(LEVEL_G1), eye_ph, space).entries
        k += -p.omega_2 * tensor_embed(electronic_projector(LEVEL_G2), eye_ph, space).entries
        return k
    if picture in ("interaction", "lamb_dicke"):
        d = detunings(p)
        k = -p.omega_m * tensor_embed(np.eye(3), space.number(), space).entries
        k += d.Delta_1 * tensor_embed(electronic_projector(LEVEL_G1), eye_ph, space).entries
        k += d.Delta_2 * tensor_embed(electronic_projector(LEVEL_G2), eye_ph, space).entries
        return k
    raise ValueError(f"unknown picture {picture!r}")


def exact_propagator(h: TimeDependentHamiltonian, k: np.ndarray, t: float,
                     check: bool = True) -> np.ndarray:
    """Propagator U(t) for a Hamiltonian made static by the diagonal frame K.

    With H_rot = H(0) - K constant in the rotating frame, the propagator is
    U(t) = exp(-iKt) exp(-i H_rot t). A consistency check verifies that the
    frame really freezes the time dependence.
    """
    kd = np.diag(k).real
    if not np.allclose(k, np.diag(kd.astype(complex)), atol=1e-12):
        raise ValueError("frame generator must be diagonal")
    h_rot = h(0.0) - k
    if check:
        t_probe = 0.37 if t == 0 else 0.37 * t
        phase = np.exp(1j * kd * t_probe)
        probe = (phase[:, None] * h(t_probe) * phase.conj()[None, :]) - k
        defect = np.linalg.norm(probe - h_rot, 2)
        scale = max(np.linalg.norm(h_rot, 2), 1.0)
        if defect > 1e-9 * scale:
            raise ValueError("frame generator does not make this Hamiltonian static")
    evals, vecs = np.linalg.eigh(h_rot)
    u_rot = (vecs * np.exp(-1j * evals * t)) @ vecs.conj().T
    return np.diag(np.exp(-1j * kd * t)) @ u_rot


def _expm_antihermitian(omega: np.ndarray) -> np.ndarray:
    """exp(omega) for anti-Hermitian omega via the Hermitian eigenproblem."""
    m = 1j * omega
    evals, vecs = np.linalg.eigh(m)
    return (vecs * np.exp(-1j * evals)) @ vecs.conj().T


_GL_C1 = 0.5 - np.sqrt(3.0) / 6.0
_GL_C2 = 0.5 + np.sqrt(3.0) / 6.0


def propagate(h: TimeDependentHamiltonian, t_final: float, psi0: np.ndarray | None = None,
              dt: float | None = None, method: str = "magnus4",
              points_per_period: int = 96) -> np.ndarray:
    """Time-ordered propagator over [0, t_final] by fixed-step exponential stepping.

    method="midpoint" uses the piecewise-constant midpoint rule (2nd order);
    method="magnus4" adds the two-point Gauss commutator correction (4th
    order). The default step resolves the fastest coefficient oscillation and
    the spectral-norm bound of H; both methods are testable by step halving.
    Returns the propagator, or the final state when psi0 is given.
    """
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if dt is None:
        omega_char = max(h.omega_max(), h.norm_bound(), 1e-30)
        dt = (TWO_PI / omega_char) / points_per_period
    n_steps = max(1, int(np.ceil(t_final / dt)))
    step = t_final / n_steps

    dim = h.space.total_dim
    u = np.eye(dim, dtype=complex)
    if method == "midpoint":
        for j in range(n_steps):
            t_mid = (j + 0.5) * step
            u = _expm_antihermitian(-1j * step * h(t_mid)) @ u
    elif method == "magnus4":
        for j in range(n_steps):
            t0 = j * step
            h1 = h(t0 + _GL_C1 * step)
            h2 = h(t0 + _GL_C2 * step)
            omega = -0.5j * step * (h1 + h2)
            comm = h1 @ h2 - h2 @ h1
            omega += (np.sqrt(3.0) * step * step / 12.0) * comm
            u = _expm_antihermitian(omega) @ u
    else:
        raise ValueError("method must be 'midpoint' or 'magnus4'")

    if psi0 is not None:
        return u @ np.asarray(psi0, dtype=complex)
    return u
