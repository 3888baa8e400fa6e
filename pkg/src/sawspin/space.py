"""Truncated Hilbert space for three electronic levels coupled to one phonon mode.

The electronic basis is |g1>, |g2>, |e> (indices 0, 1, 2). The phonon mode is
truncated to Fock states |0> ... |N-1>. Composite indices are electronic-major:

    index = level * fock_cutoff + n

so electronic projectors are block diagonal. All matrices are dense complex
numpy arrays; all container types are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

LEVEL_G1 = 0
LEVEL_G2 = 1
LEVEL_E = 2

_LEVEL_NAMES = ("g1", "g2", "e")


class DimensionError(ValueError):
    """Operand dimensions do not match the Hilbert space."""


@dataclass(frozen=True)
class HilbertSpace:
    """Truncated (3 electronic levels) x (N Fock states) product space."""

    fock_cutoff: int
    electronic_dim: int = 3

    def __post_init__(self):
        if self.electronic_dim != 3:
            raise DimensionError("electronic_dim is fixed to 3")
        if self.fock_cutoff < 1:
            raise DimensionError("fock_cutoff must be >= 1")

    @property
    def total_dim(self) -> int:
        return self.electronic_dim * self.fock_cutoff

    def index(self, level: int, n: int) -> int:
        """Composite index of the basis state |level, n>."""
        if not 0 <= level < self.electronic_dim:
            raise DimensionError(f"level {level} out of range")
        if not 0 <= n < self.fock_cutoff:
            raise DimensionError(f"Fock index {n} out of range")
        return level * self.fock_cutoff + n

    def level_n(self, index: int) -> tuple[int, int]:
        """Inverse of :meth:`index`."""
        if not 0 <= index < self.total_dim:
            raise DimensionError(f"index {index} out of range")
        return divmod(index, self.fock_cutoff)

    def annihilation(self) -> np.ndarray:
        """Phonon annihilation operator b on the N-dim Fock factor, b|n> = sqrt(n)|n-1>."""
        N = self.fock_cutoff
        b = np.zeros((N, N), dtype=complex)
        for n in range(1, N):
            b[n - 1, n] = np.sqrt(n)
        return b

    def number(self) -> np.ndarray:
        """Phonon number operator b†b (diagonal 0..N-1)."""
        return np.diag(np.arange(self.fock_cutoff, dtype=float)).astype(complex)

    def basis_ket(self, level: int, n: int) -> "Ket":
        amp = np.zeros(self.total_dim, dtype=complex)
        amp[self.index(level, n)] = 1.0
        return Ket(self, amp)


def electronic_projector(level: int) -> np.ndarray:
    """3x3 projector |level><level|."""
    p = np.zeros((3, 3), dtype=complex)
    p[level, level] = 1.0
    return p


def electronic_flip(to_level: int, from_level: int) -> np.ndarray:
    """3x3 operator |to><from|."""
    m = np.zeros((3, 3), dtype=complex)
    m[to_level, from_level] = 1.0
    return m


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense operator on the composite space, dimension-checked against it."""

    space: HilbertSpace
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.shape != (self.space.total_dim, self.space.total_dim):
            raise DimensionError(
                f"entries shape {e.shape} does not match total_dim {self.space.total_dim}"
            )
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.space, self.entries.conj().T)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.space != other.space:
            raise DimensionError("operator spaces differ")
        return OperatorMatrix(self.space, self.entries @ other.entries)

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))

    def hermiticity_defect(self) -> float:
        return float(np.linalg.norm(self.entries - self.entries.conj().T, 2))


@dataclass(frozen=True)
class Ket:
    """State vector on the composite space."""

    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (self.space.total_dim,):
            raise DimensionError("amplitude vector length does not match space")
        a.flags.writeable = False
        object.__setattr__(self, "amplitudes", a)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "Ket":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return Ket(self.space, self.amplitudes / n)

    def overlap(self, other: "Ket") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrixFull:
    """Density matrix on the composite space (state of the Fock-resolved model)."""

    space: HilbertSpace
    entries: np.ndarray

    HERMITICITY_TOL = 1e-10
    TRACE_TOL = 1e-9
    EIGENVALUE_TOL = -1e-9

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.shape != (self.space.total_dim, self.space.total_dim):
            raise DimensionError("density matrix shape does not match space")
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @classmethod
    def from_ket(cls, psi: Ket) -> "DensityMatrixFull":
        a = psi.amplitudes
        return cls(psi.space, np.outer(a, a.conj()))

    def validate(self):
        """Raise if Hermiticity, trace or positivity tolerances are violated."""
        e = self.entries
        if np.linalg.norm(e - e.conj().T, 2) > self.HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian within tolerance")
        if abs(np.trace(e).real - 1.0) > self.TRACE_TOL:
            raise ValueError("density matrix trace deviates from 1")
        if np.linalg.eigvalsh(0.5 * (e + e.conj().T)).min() < self.EIGENVALUE_TOL:
            raise ValueError("density matrix has a significantly negative eigenvalue")

    def electronic_populations(self) -> np.ndarray:
        """Populations of |g1>, |g2>, |e> traced over the phonon."""
        N = self.space.fock_cutoff
        d = np.real(np.diag(self.entries))
        return np.array([d[i * N:(i + 1) * N].sum() for i in range(3)])

    def with_cutoff(self, fock_cutoff: int) -> "DensityMatrixFull":
        """Re-embed into a space with a different Fock cutoff (pad or truncate)."""
        new_space = HilbertSpace(fock_cutoff)
        old_n, new_n = self.space.fock_cutoff, fock_cutoff
        out = np.zeros((new_space.total_dim, new_space.total_dim), dtype=complex)
        keep = min(old_n, new_n)
        for li in range(3):
            for lj in range(3):
                out[li * new_n:li * new_n + keep, lj * new_n:lj * new_n + keep] = \
                    self.entries[li * old_n:li * old_n + keep, lj * old_n:lj * old_n + keep]
        return DensityMatrixFull(new_space, out)


def tensor_embed(electronic_op: np.ndarray, phonon_op: np.ndarray,
                 space: HilbertSpace) -> OperatorMatrix:
    """Kronecker product (electronic ⊗ phonon) in the electronic-major convention."""
    electronic_op = np.asarray(electronic_op, dtype=complex)
    phonon_op = np.asarray(phonon_op, dtype=complex)
    if electronic_op.shape != (space.electronic_dim, space.electronic_dim):
        raise DimensionError("electronic operator must be 3x3")
    if phonon_op.shape != (space.fock_cutoff, space.fock_cutoff):
        raise DimensionError("phonon operator must be N x N")
    return OperatorMatrix(space, np.kron(electronic_op, phonon_op))


def phonon_displacement(alpha: float, fock_cutoff: int) -> np.ndarray:
    """exp[alpha (b† - b)] on the truncated Fock factor.

    Unitary up to truncation error; the caller is responsible for choosing a
    cutoff with alpha**2 << N.
    """
    b = HilbertSpace(fock_cutoff).annihilation()
    return expm(alpha * (b.conj().T - b))


def displacement_operator(alpha: float, space: HilbertSpace) -> OperatorMatrix:
    """exp[alpha (b† - b)] acting on the phonon factor, identity on the levels."""
    d = phonon_displacement(alpha, space.fock_cutoff)
    return tensor_embed(np.eye(3), d, space)


def phonon_parity(space: HilbertSpace) -> OperatorMatrix:
    """(-1)^(b†b) on the phonon factor, identity on the levels."""
    signs = np.diag((-1.0) ** np.arange(space.fock_cutoff)).astype(complex)
    return tensor_embed(np.eye(3), signs, space)


def fock_subspace_projector(space: HilbertSpace, n_max: int) -> np.ndarray:
    """Projector onto phonon occupations n <= n_max (all electronic levels)."""
    diag = np.zeros(space.fock_cutoff)
    diag[:min(n_max + 1, space.fock_cutoff)] = 1.0
    return np.kron(np.eye(3), np.diag(diag)).astype(complex)
