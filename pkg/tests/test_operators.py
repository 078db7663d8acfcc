import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from divprop.errors import (
    HermiticityViolationError,
    InvalidDimensionError,
    NotCompletelyPositiveError,
    NotHermiticityPreservingError,
)
from divprop.models import PSI, PSI_KRAUS, projector_transfer
from divprop.operators import (
    SIGMA,
    action_to_transfer,
    apply_map,
    apply_map_ancilla,
    choi_spectrum,
    choi_to_kraus,
    choi_to_transfer,
    coords,
    eig_herm,
    from_coords,
    herm_basis,
    is_trace_preserving,
    kraus_to_transfer,
    random_channel,
    random_density,
    random_hermitian,
    random_pure,
    svd,
    superop,
    superop_to_transfer,
    trace_norm,
    transfer_to_choi,
)
from oracles import qubit_apply, qubit_choi, qubit_transfer

seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_basis_is_orthonormal_and_hermitian(d):
    B = herm_basis(d)
    assert B.shape == (d * d, d, d)
    gram = np.einsum("aij,bji->ab", B, B)
    assert np.allclose(gram, np.eye(d * d), atol=1e-14)
    assert np.allclose(B, np.conj(np.transpose(B, (0, 2, 1))))
    assert np.allclose(B[0], np.eye(d) / np.sqrt(d))
    assert np.allclose(np.trace(B[1:], axis1=1, axis2=2), 0)


def test_qubit_basis_is_scaled_pauli():
    assert np.array_equal(herm_basis(2), np.array(SIGMA) / np.sqrt(2))


def test_basis_rejects_small_dimension():
    with pytest.raises(InvalidDimensionError):
        herm_basis(1)


def test_basis_is_read_only():
    with pytest.raises(ValueError):
        herm_basis(2)[0, 0, 0] = 3


@given(seeds)
def test_coordinates_round_trip(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.allclose(from_coords(coords(X), 3), X, atol=1e-13)


def test_identity_and_psi_transfer_matrices():
    assert np.allclose(action_to_transfer(lambda X: X, 2), np.eye(4))
    psi = action_to_transfer(lambda X: 0.5 * (np.trace(X) * SIGMA[0] + np.trace(SIGMA[3] @ X) * SIGMA[1]), 2)
    assert np.allclose(psi, PSI, atol=1e-15)


def test_attractor_transfer_first_column():
    w = np.array([0.3, -0.2, 0.4])
    omega = 0.5 * (SIGMA[0] + sum(c * s for c, s in zip(w, SIGMA[1:])))
    T = action_to_transfer(lambda X: omega * np.trace(X), 2)
    expected = np.zeros((4, 4))
    expected[:, 0] = [1, *w]
    assert np.allclose(T, expected, atol=1e-15)


def test_non_hermiticity_preserving_map_rejected():
    with pytest.raises(NotHermiticityPreservingError):
        action_to_transfer(lambda X: 1j * X, 2)


@given(seeds)
def test_qubit_convention_equals_pauli_formula(seed):
    rng = np.random.default_rng(seed)
    T = random_channel(2, rng)
    T_pauli = qubit_transfer(lambda X: apply_map(T, X))
    assert np.allclose(T, T_pauli, atol=1e-13)


@given(seeds, st.sampled_from([2, 3]))
def test_action_round_trip(seed, d):
    rng = np.random.default_rng(seed)
    K = [rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) for _ in range(2)]

    def phi(X):
        return sum(k @ X @ k.conj().T for k in K)

    T = action_to_transfer(phi, d)
    for tau in herm_basis(d):
        assert np.allclose(apply_map(T, tau), phi(tau), atol=1e-12)
    S = superop(T)
    assert np.allclose(superop_to_transfer(S), T, atol=1e-12)


def test_choi_of_identity():
    C = transfer_to_choi(np.eye(4))
    omega = np.zeros(4)
    omega[[0, 3]] = 1
    assert np.allclose(C, np.outer(omega, omega))
    assert np.allclose(np.linalg.eigvalsh(C), [0, 0, 0, 2])


@given(seeds)
def test_choi_matches_explicit_sum(seed):
    T = random_channel(2, np.random.default_rng(seed))
    assert np.allclose(transfer_to_choi(T), qubit_choi(T), atol=1e-13)


@given(seeds, st.sampled_from([2, 3]))
def test_choi_round_trip_and_trace(seed, d):
    T = random_channel(d, np.random.default_rng(seed))
    C = transfer_to_choi(T)
    assert abs(np.trace(C) - d) < 1e-10
    assert np.allclose(C, C.conj().T, atol=1e-12)
    assert np.allclose(choi_to_transfer(C, d), T, atol=1e-10)


@given(seeds, st.sampled_from([2, 3]))
def test_kraus_reconstructs_channel(seed, d):
    T = random_channel(d, np.random.default_rng(seed))
    K = choi_to_kraus(transfer_to_choi(T))
    assert np.allclose(kraus_to_transfer(K), T, atol=1e-9)
    assert np.allclose(sum(k.conj().T @ k for k in K), np.eye(d), atol=1e-9)


def test_rectangular_maps():
    rng = np.random.default_rng(3)
    T = random_channel(2, rng, d_out=3)
    assert T.shape == (9, 4)
    K = choi_to_kraus(transfer_to_choi(T), 2)
    assert K[0].shape == (3, 2)
    assert np.allclose(kraus_to_transfer(K), T, atol=1e-9)


def test_kraus_of_psi_spans_reference_operators():
    K = choi_to_kraus(transfer_to_choi(PSI))
    assert len(K) == 2
    span = np.array([k.reshape(-1) for k in K]).T
    for k in PSI_KRAUS:
        coef, *_ = np.linalg.lstsq(span, k.reshape(-1), rcond=None)
        assert np.allclose(span @ coef, k.reshape(-1), atol=1e-12)


def test_kraus_of_identity_is_unitary_multiple_of_identity():
    (K,) = choi_to_kraus(transfer_to_choi(np.eye(4)))
    assert np.allclose(K / K[0, 0], np.eye(2))
    assert abs(abs(K[0, 0]) - 1) < 1e-12


def test_kraus_of_rank_two_projector_is_pauli_twirl():
    K = choi_to_kraus(transfer_to_choi(np.diag([1.0, 1.0, 0.0, 0.0])))
    X = np.array([[0.3, 0.1 - 0.2j], [0.1 + 0.2j, 0.7]])
    out = sum(k @ X @ k.conj().T for k in K)
    assert np.allclose(out, 0.5 * (X + SIGMA[1] @ X @ SIGMA[1]), atol=1e-12)


def test_kraus_rejects_non_cp():
    with pytest.raises(NotCompletelyPositiveError):
        choi_to_kraus(transfer_to_choi(projector_transfer(3, (0, 1, 1))))


def test_rank_three_projector_choi_has_negative_eigenvalue():
    # oracle: explicit Pauli-sum Choi of the projector, frozen
    assert choi_spectrum(projector_transfer(3, (0, 1, 1)))[0] == pytest.approx(-0.8660254037844386, abs=1e-12)
    assert np.linalg.eigvalsh(qubit_choi(projector_transfer(3, (0, 1, 1))))[0] == pytest.approx(
        -0.8660254037844386, abs=1e-12)


def test_trace_norm_examples(rng):
    assert trace_norm(SIGMA[3]) == pytest.approx(2)
    assert trace_norm(random_density(3, rng)) == pytest.approx(1)
    psi = random_pure(2, rng)
    perp = np.array([-psi[1].conj(), psi[0].conj()])
    assert trace_norm(np.outer(psi, psi.conj()) - np.outer(perp, perp.conj())) == pytest.approx(2)


@given(seeds)
def test_trace_norm_is_a_norm(seed):
    rng = np.random.default_rng(seed)
    A, B = random_hermitian(3, rng), random_hermitian(3, rng)
    c = rng.normal()
    assert trace_norm(A) >= 0
    assert trace_norm(c * A) == pytest.approx(abs(c) * trace_norm(A), rel=1e-10)
    assert trace_norm(A + B) <= trace_norm(A) + trace_norm(B) + 1e-10


def test_svd_examples(rng):
    assert np.allclose(svd(PSI).singular_values, [1, 1, 0, 0])
    assert svd(PSI).rank == 2
    assert np.allclose(svd(np.eye(5)).singular_values, 1)
    A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    f = svd(A)
    assert np.linalg.norm(f.reconstruct() - A) <= 1e-12
    assert np.all(np.diff(f.singular_values) <= 0)


def test_svd_rank_is_relative(rng):
    A = rng.standard_normal((5, 3)) @ rng.standard_normal((3, 5))
    assert svd(A).rank == 3
    assert svd(1e-8 * A).rank == 3


def test_eig_herm():
    vals, vecs = eig_herm(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(vals, [1, 2, 3])
    with pytest.raises(HermiticityViolationError):
        eig_herm(np.array([[0, 1], [0, 0]]))


def test_doubled_choi_spectra_of_rank_two_examples():
    # the closed-form qubit spectra refer to twice the Choi matrix
    for T in (np.diag([1.0, 1.0, 0.0, 0.0]), PSI):
        assert np.allclose(np.linalg.eigvalsh(2 * transfer_to_choi(T)), [0, 0, 2, 2], atol=1e-12)


def test_trace_preservation_flag(rng):
    assert is_trace_preserving(random_channel(3, rng))
    assert not is_trace_preserving(2 * np.eye(4))


@given(seeds)
def test_ancilla_action_matches_kronecker_form(seed):
    rng = np.random.default_rng(seed)
    T = random_channel(2, rng)
    K = choi_to_kraus(transfer_to_choi(T))
    X = random_hermitian(4, rng)
    expected = sum(np.kron(np.eye(2), k) @ X @ np.kron(np.eye(2), k).conj().T for k in K)
    assert np.allclose(apply_map_ancilla(T, X, 2), expected, atol=1e-10)


def test_pauli_apply_oracle_agrees(rng):
    T = random_channel(2, rng)
    X = random_hermitian(2, rng)
    assert np.allclose(apply_map(T, X), qubit_apply(T, X), atol=1e-13)
