"""Hilbert-space primitives: indexing, ladder operators, embeddings, displacement."""

import numpy as np
import pytest

from sawspin.space import (
    LEVEL_E,
    LEVEL_G1,
    DimensionError,
    HilbertSpace,
    Ket,
    OperatorMatrix,
    DensityMatrixFull,
    displacement_operator,
    electronic_flip,
    electronic_projector,
    fock_subspace_projector,
    phonon_displacement,
    phonon_parity,
    tensor_embed,
)


def test_index_roundtrip_is_identity():
    space = HilbertSpace(7)
    for level in range(3):
        for n in range(7):
            idx = space.index(level, n)
            assert space.level_n(idx) == (level, n)
    assert space.total_dim == 21


def test_index_convention_is_electronic_major():
    space = HilbertSpace(5)
    assert space.index(0, 0) == 0
    assert space.index(0, 4) == 4
    assert space.index(1, 0) == 5
    assert space.index(2, 3) == 13


def test_annihilation_ladder_rule():
    space = HilbertSpace(6)
    b = space.annihilation()
    for n in range(1, 6):
        assert b[n - 1, n] == pytest.approx(np.sqrt(n))
    # b|0> = 0
    assert np.all(b[:, 0] == 0)


def test_number_operator_diagonal():
    for n in (1, 4, 20):
        space = HilbertSpace(n)
        num = space.annihilation().conj().T @ space.annihilation()
        assert np.allclose(num, np.diag(np.arange(n)), atol=1e-13)
        assert np.allclose(space.number(), np.diag(np.arange(n)), atol=0)


def test_commutator_on_interior():
    space = HilbertSpace(20)
    b = space.annihilation()
    comm = b @ b.conj().T - b.conj().T @ b
    interior = comm[:19, :19]
    assert np.linalg.norm(interior - np.eye(19), 2) < 1e-13
    # cutoff row is the only violation
    assert comm[19, 19] == pytest.approx(-19.0)


def test_tensor_embed_identity():
    space = HilbertSpace(4)
    op = tensor_embed(np.eye(3), np.eye(4), space)
    assert np.array_equal(op.entries, np.eye(12))


def test_tensor_embed_strain_block_n2():
    space = HilbertSpace(2)
    b = space.annihilation()
    op = tensor_embed(electronic_projector(LEVEL_E), b + b.conj().T, space)
    nz = np.argwhere(op.entries != 0)
    expected = {(space.index(2, 0), space.index(2, 1)),
                (space.index(2, 1), space.index(2, 0))}
    assert {tuple(r) for r in nz} == expected
    assert np.abs(op.entries[space.index(2, 0), space.index(2, 1)]) == pytest.approx(1.0)


def test_tensor_embed_flip_with_annihilation_n3():
    # hand-computed Kronecker product entry: <e,1| (|e><g1| x b) |g1,2> = sqrt(2)
    space = HilbertSpace(3)
    op = tensor_embed(electronic_flip(LEVEL_E, LEVEL_G1), space.annihilation(), space)
    row = space.index(LEVEL_E, 1)
    col = space.index(LEVEL_G1, 2)
    assert op.entries[row, col] == pytest.approx(np.sqrt(2.0))


def test_tensor_embed_rejects_mismatched_shapes():
    space = HilbertSpace(4)
    with pytest.raises(DimensionError):
        tensor_embed(np.eye(2), np.eye(4), space)
    with pytest.raises(DimensionError):
        tensor_embed(np.eye(3), np.eye(5), space)


def test_displacement_zero_is_identity():
    space = HilbertSpace(10)
    op = displacement_operator(0.0, space)
    assert np.allclose(op.entries, np.eye(30), atol=0)


def test_displacement_vacuum_overlap():
    # coherent-state overlap: <0|D(alpha)|0> = exp(-alpha^2/2)
    alpha = 0.1
    d = phonon_displacement(alpha, 20)
    assert d[0, 0].real == pytest.approx(np.exp(-alpha ** 2 / 2.0), abs=1e-12)
    assert abs(d[0, 0].imag) < 1e-14


def test_displacement_inverse_on_subspace():
    n = 20
    prod = phonon_displacement(0.1, n) @ phonon_displacement(-0.1, n)
    sub = prod[:n - 5, :n - 5]
    assert np.linalg.norm(sub - np.eye(n - 5), 2) < 1e-8


def test_displacement_unitary_on_projected_subspace():
    n, alpha = 20, 0.1
    d = phonon_displacement(alpha, n)
    keep = n - int(np.ceil(5 * alpha)) - 5
    defect = (d.conj().T @ d - np.eye(n))[:keep, :keep]
    assert np.linalg.norm(defect, 2) < 1e-8


def test_phonon_parity_squares_to_identity():
    space = HilbertSpace(8)
    p = phonon_parity(space).entries
    assert np.allclose(p @ p, np.eye(24), atol=0)
    b_full = tensor_embed(np.eye(3), space.annihilation(), space).entries
    assert np.allclose(p @ b_full @ p, -b_full, atol=0)


def test_operator_matrix_validates_dimensions():
    space = HilbertSpace(3)
    with pytest.raises(DimensionError):
        OperatorMatrix(space, np.eye(5))


def test_ket_normalization_and_overlap():
    space = HilbertSpace(2)
    k = Ket(space, np.array([3.0, 0, 0, 4.0, 0, 0], dtype=complex))
    kn = k.normalized()
    assert kn.norm() == pytest.approx(1.0, abs=1e-12)
    assert abs(kn.overlap(kn) - 1.0) < 1e-12


def test_density_matrix_full_validation_and_reduction():
    space = HilbertSpace(3)
    psi = space.basis_ket(LEVEL_G1, 1)
    rho = DensityMatrixFull.from_ket(psi)
    rho.validate()
    pops = rho.electronic_populations()
    assert pops == pytest.approx([1.0, 0.0, 0.0])
    bad = DensityMatrixFull(space, 2.0 * rho.entries)
    with pytest.raises(ValueError):
        bad.validate()


def test_density_matrix_cutoff_embedding():
    space = HilbertSpace(4)
    rho = DensityMatrixFull.from_ket(space.basis_ket(LEVEL_E, 2))
    big = rho.with_cutoff(9)
    assert big.space.fock_cutoff == 9
    assert big.entries[big.space.index(2, 2), big.space.index(2, 2)] == pytest.approx(1.0)
    back = big.with_cutoff(4)
    assert np.allclose(back.entries, rho.entries, atol=0)


def test_subspace_projector():
    space = HilbertSpace(6)
    p = fock_subspace_projector(space, 2)
    diag = np.diag(p).real
    for level in range(3):
        for n in range(6):
            assert diag[space.index(level, n)] == (1.0 if n <= 2 else 0.0)
