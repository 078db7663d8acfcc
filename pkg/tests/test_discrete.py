import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from divprop.discrete import (
    DiscreteFamily,
    Ensemble2,
    append_state_map,
    cumulative_channel_family,
    depolarizing,
    discrete_propagator,
    family_from_json,
    helstrom,
    info_decreasing_check,
    non_cp_family,
    partial_trace_map,
    right_inverse,
    transpose_map,
)
from divprop.errors import (
    InvalidDimensionError,
    InvalidEnsembleError,
    NoRightInverseError,
    NotDivisibleError,
    OrderingError,
)
from divprop.io import ParseError, transfer_to_json
from divprop.operators import apply_map, min_choi_eigenvalue, random_density, random_pure

seeds = st.integers(0, 2**32 - 1)


def test_family_requires_identity_first():
    with pytest.raises(InvalidDimensionError):
        DiscreteFamily((depolarizing(0.5),))
    with pytest.raises(InvalidDimensionError):
        DiscreteFamily(())


def test_rectangular_steps():
    fam = DiscreteFamily((np.eye(16), partial_trace_map()))
    assert fam.dims == (4, 2)
    assert fam.d_system == 4
    assert len(fam) == 2


def test_partial_trace_and_appended_state():
    rng = np.random.default_rng(5)
    sigma = random_density(2, rng)
    A = append_state_map(sigma)
    P = partial_trace_map()
    assert A.shape == (16, 4) and P.shape == (4, 16)
    assert np.allclose(P @ A, np.eye(4), atol=1e-12)
    rho = random_density(2, rng)
    assert np.allclose(apply_map(A, rho), np.kron(rho, sigma), atol=1e-12)


def test_right_inverse_family():
    P = partial_trace_map()
    fam = right_inverse(P)
    assert fam.free_shape == (12, 4)
    rng = np.random.default_rng(0)
    for _ in range(5):
        assert np.allclose(P @ fam.random(rng), np.eye(4), atol=1e-10)
    sigma = random_density(2, rng)
    A = append_state_map(sigma)
    C = fam.kernel.T @ (A - fam.base)
    assert np.allclose(fam(C), A, atol=1e-10)


def test_no_right_inverse_for_proper_image():
    with pytest.raises(NoRightInverseError):
        right_inverse(np.diag([1.0, 1.0, 0.0, 0.0]))


def test_discrete_propagator_ordering_and_divisibility():
    fam = DiscreteFamily.from_maps([np.diag([1.0, 0, 0, 0]), np.eye(4)])
    with pytest.raises(OrderingError):
        discrete_propagator(fam, 2, 1)
    with pytest.raises(NotDivisibleError):
        discrete_propagator(fam, 1, 2)
    assert np.allclose(discrete_propagator(fam, 0, 1), fam[1])


@given(seeds)
def test_cumulative_family_has_cptp_propagators(seed):
    fam = cumulative_channel_family(2, 3, np.random.default_rng(seed))
    assert fam.divisible()
    for i in range(len(fam)):
        for j in range(i, len(fam)):
            V = discrete_propagator(fam, i, j)
            assert np.allclose(V @ fam[i], fam[j], atol=1e-8)
            assert min_choi_eigenvalue(V) >= -1e-8


def test_non_cp_family():
    fam = non_cp_family()
    V = discrete_propagator(fam, 1, 2)
    assert np.allclose(V, transpose_map(), atol=1e-12)
    assert min_choi_eigenvalue(V) < -0.1
    assert not info_decreasing_check(fam, samples=300).violated
    rep = info_decreasing_check(fam, samples=300, ancilla=2)
    assert rep.violated
    assert max(v["increase"] for v in rep.violations) > 0.05


def test_theta_after_strong_depolarizing_is_cp():
    # Theta D_p is CP for p <= 1/3, so such a family would not be a non-CP example
    assert min_choi_eigenvalue(transpose_map() @ depolarizing(1 / 3)) >= -1e-12
    assert min_choi_eigenvalue(transpose_map() @ depolarizing(0.5)) < 0


@given(seeds)
def test_cptp_divisible_family_is_information_decreasing(seed):
    fam = cumulative_channel_family(2, 3, np.random.default_rng(seed))
    for k in (1, 2):
        assert not info_decreasing_check(fam, samples=20, ancilla=k, seed=seed % 1000).violated


def test_ensemble_inputs_and_explicit_inputs():
    fam = non_cp_family()
    rep = info_decreasing_check(fam, samples=100, ancilla=2, ensembles=True)
    assert rep.norms.shape == (100, 3)
    bell = np.zeros((4, 4))
    bell[np.ix_([0, 3], [0, 3])] = 0.5
    E = Ensemble2(1.0, bell, 0.0, np.eye(4) / 4)
    rep2 = info_decreasing_check(fam, samples=1, ancilla=2, inputs=[E.operator()])
    assert rep2.norms.shape == (2, 3)
    assert rep2.norms[0] == pytest.approx([1.0, 1.0, 1.25])


def test_helstrom_examples(rng):
    psi = random_pure(2, rng)
    perp = np.array([-psi[1].conj(), psi[0].conj()])
    g = helstrom([(0.5, np.outer(psi, psi.conj())), (0.5, np.outer(perp, perp.conj()))])
    assert g.trace_norm_term == pytest.approx(0.5)
    assert g.helstrom_value == pytest.approx(1.0)
    rho = random_density(2, rng)
    g = helstrom(Ensemble2(0.5, rho, 0.5, rho))
    assert g.trace_norm_term == pytest.approx(0.0, abs=1e-12)
    assert g.helstrom_value == pytest.approx(0.5)


@given(seeds)
def test_helstrom_bounds_and_monotonicity(seed):
    rng = np.random.default_rng(seed)
    E = Ensemble2.random(2, rng)
    g = helstrom(E)
    assert max(E.p1, E.p2) - 1e-12 <= g.helstrom_value <= 1 + 1e-12
    g2 = helstrom(E.mapped(depolarizing(0.4)))
    assert g2.helstrom_value <= g.helstrom_value + 1e-12


def test_ensemble_validation(rng):
    rho = random_density(2, rng)
    with pytest.raises(InvalidEnsembleError):
        Ensemble2(0.7, rho, 0.7, rho)
    with pytest.raises(InvalidEnsembleError):
        Ensemble2(0.5, rho, 0.5, 2 * rho)
    with pytest.raises(InvalidEnsembleError):
        Ensemble2(0.5, rho, 0.5, np.eye(3) / 3)
    with pytest.raises(InvalidEnsembleError):
        helstrom([(0.3, rho), (0.3, rho), (0.4, rho)])


def test_family_from_json():
    steps = [transfer_to_json(depolarizing(0.5)), transfer_to_json(depolarizing(0.25))]
    fam = family_from_json(steps)
    assert len(fam) == 3
    fam2 = family_from_json({"steps": [transfer_to_json(np.eye(4))] + steps})
    assert len(fam2) == 3
    with pytest.raises(ParseError):
        family_from_json([])
