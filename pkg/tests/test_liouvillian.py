"""Superoperator assembly tests.

Small closed-form channels (dephasing, single-qubit unitaries) anchor the
vectorization convention; structural checks (trace row, diagonality of the
flat-coupling dissipator, weight-adjacency of the commutator generator) run
on sampled models.
"""

from fractions import Fraction

import numpy as np
import pytest
from conftest import pairing_distance

from klindblad.ensemble import (
    HamiltonianSpec,
    RANDOM_ALL_TO_ALL,
    heisenberg_hamiltonian,
    sample_kossakowski,
    sample_random_hamiltonian,
)
from klindblad.errors import NonPositiveKossakowskiError, NumericalError, ResourceLimitError
from klindblad.liouvillian import (
    BASIS_PAULI,
    PART_DISSIPATOR,
    PART_DISSIPATOR_DIAG,
    PART_DISSIPATOR_OFFDIAG,
    PART_UNITARY,
    JumpOperatorSet,
    Superoperator,
    assemble,
    assemble_weak,
    build_dissipator,
    build_unitary_part,
    jump_operator_set,
    lambda0,
    lambda0_fraction,
    load_superoperator,
    pauli_basis_form,
    real_pauli_form,
    save_superoperator,
    split_dissipator,
    string_basis_matrix,
    unitary_pauli_matrix,
    vec_identity,
)
from klindblad.pauli import PauliBasis, PauliString


# ---------------------------------------------------------------- jumps


def test_jump_set_counts_and_orthonormality():
    jumps = jump_operator_set(2, 2)
    assert len(jumps) == 15
    assert len(jump_operator_set(4, 2)) == 66
    for a in jumps.stack:
        assert abs(np.trace(a)) < 1e-14
    gram = np.einsum("nij,mij->nm", jumps.stack.conj(), jumps.stack)
    assert np.abs(gram - np.eye(15)).max() < 1e-14


def test_jump_set_rejects_identity():
    with pytest.raises(ValueError):
        JumpOperatorSet.from_strings([PauliString.identity(2)])


# ---------------------------------------------------------------- dissipator


def test_dephasing_channel_spectrum():
    # single Z channel on one qubit with coupling 2: rates {0, 0, -2, -2}
    jumps = JumpOperatorSet.from_strings([PauliString.from_label("Z")])
    ld = build_dissipator(np.array([[2.0]]), jumps)
    eigs = np.linalg.eigvals(ld.matrix)
    assert pairing_distance(eigs, np.array([0, 0, -2, -2], dtype=complex)) < 1e-12


def test_trace_preservation_row():
    ld = build_dissipator(sample_kossakowski(3, 2, seed=1), jump_operator_set(3, 2))
    assert ld.trace_violation() < 1e-10
    # the identity test vector itself
    v = vec_identity(3)
    assert np.abs(v.conj() @ ld.matrix).max() < 1e-10


def test_dissipator_trace_identity():
    # Tr L_D = -N^2 whenever Tr K = N and the jumps are traceless strings
    for num_sites, seed in ((2, 3), (3, 4)):
        ld = build_dissipator(sample_kossakowski(num_sites, 2, seed=seed), jump_operator_set(num_sites, 2))
        n = 2.0**num_sites
        assert np.trace(ld.matrix).real == pytest.approx(-(n**2), abs=1e-9)
        assert abs(np.trace(ld.matrix).imag) < 1e-9


def test_flat_coupling_dissipator_is_diagonal_in_string_basis():
    for num_sites in (2, 3):
        jumps = jump_operator_set(num_sites, 2)
        d = 2.0**num_sites / len(jumps)
        ld = build_dissipator(d * np.eye(len(jumps)), jumps, part=PART_DISSIPATOR_DIAG)
        basis = PauliBasis(num_sites)
        form = pauli_basis_form(ld, basis).matrix
        off = form - np.diag(np.diag(form))
        assert np.abs(off).max() < 1e-12
        for i, s in enumerate(basis):
            assert form[i, i].real == pytest.approx(lambda0(s.weight, num_sites), abs=1e-10)


def test_coupling_validation():
    jumps = jump_operator_set(2, 2)
    bad_psd = -0.5 * np.eye(15)
    with pytest.raises(NonPositiveKossakowskiError):
        build_dissipator(bad_psd, jumps)
    not_hermitian = np.eye(15) + 0j
    not_hermitian[0, 1] = 1.0
    with pytest.raises(ValueError):
        build_dissipator(not_hermitian, jumps)
    with pytest.raises(ValueError):
        build_dissipator(np.eye(4), jumps)
    # validation can be bypassed for constructed splits
    build_dissipator(bad_psd, jumps, validate=False)


def test_size_guardrail():
    with pytest.raises(ResourceLimitError):
        jump_operator_set(7, 2), build_dissipator(
            np.eye(231), jump_operator_set(7, 2)
        )


# ---------------------------------------------------------------- unitary part


def test_unitary_part_small_cases():
    zero = build_unitary_part(HamiltonianSpec(2, RANDOM_ALL_TO_ALL, {}))
    assert np.count_nonzero(zero.matrix) == 0
    assert zero.part == PART_UNITARY

    lu = build_unitary_part(np.array([[1.0, 0.0], [0.0, -1.0]]))
    eigs = np.linalg.eigvals(lu.matrix)
    assert pairing_distance(eigs, np.array([0, 0, 2j, -2j])) < 1e-12


def test_unitary_part_is_antihermitian_with_symmetric_spectrum():
    h = sample_random_hamiltonian(3, seed=5)
    lu = build_unitary_part(h)
    assert np.abs(lu.matrix + lu.matrix.conj().T).max() < 1e-12
    eigs = np.linalg.eigvals(lu.matrix)
    assert np.abs(eigs.real).max() < 1e-10
    assert pairing_distance(eigs, -eigs) < 1e-8


# ---------------------------------------------------------------- split


def test_split_reconstruction_and_parts():
    k = sample_kossakowski(4, 2, seed=6)
    jumps = jump_operator_set(4, 2)
    diag, off = split_dissipator(k, jumps)
    assert diag.part == PART_DISSIPATOR_DIAG
    assert off.part == PART_DISSIPATOR_OFFDIAG
    full = build_dissipator(k, jumps)
    assert np.abs(diag.matrix + off.matrix - full.matrix).max() < 1e-10


def test_split_of_flat_coupling_has_zero_offdiagonal_part():
    jumps = jump_operator_set(2, 2)
    d = 4.0 / 15.0
    k = sample_kossakowski(2, 2, seed=7)
    flat = build_dissipator(d * np.eye(15), jumps, validate=False, part=PART_DISSIPATOR)
    # replace the sampled matrix with its own diagonal target
    diag, off = split_dissipator(
        type(k)(num_sites=2, k_max=2, k_matrix=d * np.eye(15), d_diag=np.full(15, d), seed=None),
        jumps,
    )
    assert np.abs(off.matrix).max() < 1e-14
    assert np.abs(diag.matrix - flat.matrix).max() < 1e-14


# ---------------------------------------------------------------- assembly


def test_assemble_linear_combinations():
    k = sample_kossakowski(2, 2, seed=8)
    h = sample_random_hamiltonian(2, seed=9)
    ld = build_dissipator(k, jump_operator_set(2, 2))
    lu = build_unitary_part(h)

    zero_alpha = assemble(0.0, lu, ld)
    assert np.array_equal(zero_alpha.matrix, ld.matrix)
    assert zero_alpha.strength == 0.0 and zero_alpha.strength_kind == "alpha"

    one = assemble(1.0, lu, ld)
    assert np.abs(one.matrix - (lu.matrix + ld.matrix)).max() == 0.0

    weak = assemble_weak(0.0, lu, ld)
    assert np.array_equal(weak.matrix, lu.matrix)
    assert weak.strength_kind == "beta"

    got = assemble_weak(0.25, lu, ld).matrix
    assert np.abs(got - (lu.matrix + 0.25 * ld.matrix)).max() == 0.0


def test_assemble_rejects_mismatched_parts():
    k = sample_kossakowski(2, 2, seed=8)
    h = sample_random_hamiltonian(2, seed=9)
    ld = build_dissipator(k, jump_operator_set(2, 2))
    lu = build_unitary_part(h)
    with pytest.raises(ValueError):
        assemble(1.0, ld, lu)  # swapped roles
    lup = pauli_basis_form(lu, PauliBasis(2))
    with pytest.raises(ValueError):
        assemble(1.0, lup, ld)  # basis mismatch


# ---------------------------------------------------------------- closed form


def test_lambda0_values():
    assert lambda0_fraction(1, 6) == Fraction(-64, 153)
    assert lambda0_fraction(4, 6) == Fraction(-160, 153)
    assert lambda0_fraction(5, 6) == Fraction(-160, 153)
    assert lambda0_fraction(3, 6) == lambda0_fraction(6, 6) == Fraction(-144, 153)
    assert lambda0(0, 4) == 0.0
    assert lambda0(1, 6) == pytest.approx(-0.41830, abs=5e-6)
    with pytest.raises(ValueError):
        lambda0(5, 4)
    with pytest.raises(ValueError):
        lambda0(-1, 4)


# ---------------------------------------------------------------- pauli basis


def test_string_basis_matrix_is_unitary():
    for num_sites in (1, 2, 3):
        b = string_basis_matrix(PauliBasis(num_sites))
        dim = 4**num_sites
        assert np.abs((b.conj().T @ b).toarray() - np.eye(dim)).max() < 1e-12


def test_pauli_form_of_identity_superoperator():
    dim = 4**2
    ident = Superoperator(2, np.eye(dim, dtype=complex))
    form = pauli_basis_form(ident, PauliBasis(2))
    assert np.abs(form.matrix - np.eye(dim)).max() < 1e-12


def test_pauli_form_preserves_spectrum():
    for num_sites in (2, 3, 4):
        k = sample_kossakowski(num_sites, 2, seed=10)
        h = sample_random_hamiltonian(num_sites, seed=11)
        full = assemble(0.7, build_unitary_part(h), build_dissipator(k, jump_operator_set(num_sites, 2)))
        form = pauli_basis_form(full, PauliBasis(num_sites))
        a = np.linalg.eigvals(full.matrix)
        b = np.linalg.eigvals(form.matrix)
        assert pairing_distance(a, b) < 1e-8


def test_full_spectrum_closed_under_conjugation():
    k = sample_kossakowski(3, 2, seed=12)
    h = sample_random_hamiltonian(3, seed=13)
    full = assemble(0.5, build_unitary_part(h), build_dissipator(k, jump_operator_set(3, 2)))
    eigs = np.linalg.eigvals(full.matrix)
    assert pairing_distance(eigs, eigs.conj()) < 1e-8


def test_real_pauli_form_and_unitary_antisymmetry():
    h = sample_random_hamiltonian(3, seed=14)
    lup = pauli_basis_form(build_unitary_part(h), PauliBasis(3))
    m = real_pauli_form(lup)
    assert m.dtype == np.float64
    assert np.abs(m + m.T).max() < 1e-10

    k = sample_kossakowski(3, 2, seed=15)
    ldp = pauli_basis_form(build_dissipator(k, jump_operator_set(3, 2)), PauliBasis(3))
    real_pauli_form(ldp)  # no drift for Hermitian-jump generators

    poisoned = Superoperator(2, 1j * np.eye(16), basis=BASIS_PAULI)
    with pytest.raises(NumericalError):
        real_pauli_form(poisoned)


def test_pauli_trace_violation_uses_identity_row():
    k = sample_kossakowski(2, 2, seed=16)
    ld = build_dissipator(k, jump_operator_set(2, 2))
    form = pauli_basis_form(ld, PauliBasis(2))
    assert form.trace_violation() < 1e-10


# ---------------------------------------------------------------- commutator generator


def h_count(k: int, k_prime: int, num_sites: int) -> int:
    if k_prime == k + 1:
        return 6 * k * (num_sites - k)
    if k_prime == k - 1:
        return 2 * k * (k - 1)
    return 0


@pytest.mark.parametrize("num_sites", [3, 4])
def test_unitary_pauli_matrix_matches_dense_route(num_sites):
    h = sample_random_hamiltonian(num_sites, seed=17)
    basis = PauliBasis(num_sites)
    sparse = unitary_pauli_matrix(h, basis).toarray()
    dense = pauli_basis_form(build_unitary_part(h), basis).matrix
    assert np.abs(sparse - dense).max() < 1e-10


def test_unitary_pauli_matrix_weight_adjacency_exact():
    for h in (sample_random_hamiltonian(4, seed=18), heisenberg_hamiltonian(4)):
        basis = PauliBasis(4)
        m = unitary_pauli_matrix(h, basis).tocoo()
        wr = basis.weight_array[m.row]
        wc = basis.weight_array[m.col]
        assert np.all(np.abs(wr - wc) == 1)


def test_unitary_pauli_matrix_row_counts_and_entries():
    num_sites = 4
    h = sample_random_hamiltonian(num_sites, seed=19)
    basis = PauliBasis(num_sites)
    m = unitary_pauli_matrix(h, basis).tocsc()
    for y, s in enumerate(basis):
        k = s.weight
        expected = h_count(k, k + 1, num_sites) + h_count(k, k - 1, num_sites)
        assert m.indptr[y + 1] - m.indptr[y] == expected
    # every entry is +-2J for some coupling
    allowed = np.sort(np.concatenate([[2 * j, -2 * j] for j in h.coefficients.values()]))
    vals = m.data
    pos = np.searchsorted(allowed, vals)
    pos = np.clip(pos, 0, len(allowed) - 1)
    near = np.minimum(
        np.abs(allowed[pos] - vals), np.abs(allowed[np.maximum(pos - 1, 0)] - vals)
    )
    assert near.max() < 1e-15


def test_unitary_pauli_matrix_k2_row_counts_at_six_sites():
    h = sample_random_hamiltonian(6, seed=20)
    basis = PauliBasis(6)
    m = unitary_pauli_matrix(h, basis).tocsc()
    sec = basis.sector(2)
    up = h_count(2, 3, 6)
    down = h_count(2, 1, 6)
    assert (up, down) == (48, 4)
    wr = basis.weight_array
    for y in range(sec.start, sec.stop):
        col = m.indices[m.indptr[y] : m.indptr[y + 1]]
        assert np.count_nonzero(wr[col] == 3) == up
        assert np.count_nonzero(wr[col] == 1) == down


def test_unitary_pauli_matrix_truncated_basis_window():
    # with a truncated basis the out-of-window images simply drop out
    h = sample_random_hamiltonian(3, seed=21)
    basis = PauliBasis(3, max_weight=2)
    m = unitary_pauli_matrix(h, basis)
    assert m.shape == (len(basis), len(basis))
    full = unitary_pauli_matrix(h, PauliBasis(3)).toarray()
    assert np.abs(m.toarray() - full[: len(basis), : len(basis)]).max() < 1e-14


# ---------------------------------------------------------------- dumps


def test_superoperator_dump_round_trip(tmp_path):
    k = sample_kossakowski(2, 2, seed=22)
    h = sample_random_hamiltonian(2, seed=23)
    full = assemble(1.5, build_unitary_part(h), build_dissipator(k, jump_operator_set(2, 2)))
    path = tmp_path / "sup.bin"
    save_superoperator(path, full)
    back = load_superoperator(path)
    assert np.array_equal(back.matrix, full.matrix)
    assert back.basis == full.basis and back.part == full.part
    assert back.strength == 1.5 and back.strength_kind == "alpha"

    with pytest.raises(ValueError):
        bad = tmp_path / "bad.bin"
        bad.write_bytes(b'{"format": "something-else"}\n')
        load_superoperator(bad)
