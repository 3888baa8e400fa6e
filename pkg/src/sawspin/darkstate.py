"""Dark state of the phonon-assisted Lambda system and its decoupling check."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonian import TimeDependentHamiltonian
from .space import LEVEL_E, LEVEL_G1, LEVEL_G2, HilbertSpace, Ket


@dataclass(frozen=True)
class DarkState:
    """Superposition of the two ground states decoupled from the excited state.

    Amplitudes on (|g1>, |g2>, |e>) are
    (-Omega_2, +Omega_R, 0) / sqrt(Omega_R^2 + Omega_2^2); the amplitude on
    |g2> is real and non-negative by convention. The composition depends only
    on the ratio Omega_R / Omega_2.
    """

    amplitudes: np.ndarray
    Omega_R: float
    Omega_2: float

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        a.flags.writeable = False
        object.__setattr__(self, "amplitudes", a)


def dark_state(Omega_R: float, Omega_2: float) -> DarkState:
    """Normalized dark state for effective Rabi frequencies (Omega_R, Omega_2)."""
    w = Omega_R * Omega_R + Omega_2 * Omega_2
    if w == 0.0:
        raise ValueError("at least one Rabi frequency must be nonzero")
    norm = np.sqrt(w)
    amps = np.zeros(3, dtype=complex)
    amps[LEVEL_G1] = -Omega_2 / norm
    amps[LEVEL_G2] = Omega_R / norm
    amps[LEVEL_E] = 0.0
    return DarkState(amplitudes=amps, Omega_R=float(Omega_R), Omega_2=float(Omega_2))


def embed_fock(state: DarkState, space: HilbertSpace, n: int) -> Ket:
    """Embed at phonon sector n: |g1> pairs with n phonons, |g2> with n - 1.

    The red-sideband coupling exchanges one phonon on the |g1> leg, so the
    Fock-resolved dark state lives on the pair (|g1, n>, |g2, n-1>). The
    caller supplies the effective Omega_R of the chosen sector (which carries
    the sqrt(n) factor).
    """
    if n < 1:
        raise ValueError("phonon sector n must be >= 1 (no phonon to absorb at n = 0)")
    if n >= space.fock_cutoff:
        raise ValueError("phonon sector exceeds the Fock cutoff")
    amp = np.zeros(space.total_dim, dtype=complex)
    amp[space.index(LEVEL_G1, n)] = state.amplitudes[LEVEL_G1]
    amp[space.index(LEVEL_G2, n - 1)] = state.amplitudes[LEVEL_G2]
    return Ket(space, amp)


def bright_partner(state: DarkState, space: HilbertSpace, n: int) -> Ket:
    """The orthogonal ground-manifold state on the same phonon pair."""
    if n < 1 or n >= space.fock_cutoff:
        raise ValueError("invalid phonon sector")
    w = np.sqrt(state.Omega_R ** 2 + state.Omega_2 ** 2)
    amp = np.zeros(space.total_dim, dtype=complex)
    amp[space.index(LEVEL_G1, n)] = state.Omega_R / w
    amp[space.index(LEVEL_G2, n - 1)] = state.Omega_2 / w
    return Ket(space, amp)


def verify_dark(h: TimeDependentHamiltonian, psi: Ket, n_samples: int = 17) -> float:
    """Largest ||H(t) psi|| over one period of the slowest oscillating term.

    Samples t = 0 plus one full period of the slowest nonzero coefficient
    frequency (a fixed 1 us window if every term is static). For a true dark
    state at the two-photon resonance the result vanishes to rounding.
    """
    if h.space != psi.space:
        raise ValueError("state and Hamiltonian live on different spaces")
    slow = h.slowest_nonzero_omega()
    window = (2.0 * np.pi / slow) if slow > 0 else 1.0
    times = np.concatenate(([0.0], np.linspace(0.0, window, n_samples)))
    return max(float(np.linalg.norm(h(t) @ psi.amplitudes)) for t in times)
