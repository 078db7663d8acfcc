import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from divprop.analysis import certify, contraction_holds, kernel_inclusion, monotonicity_check
from divprop.errors import DivpropError, InvalidDimensionError
from divprop.models import PSI, NonDiagonal, PauliChannel, Rate, builtin_model, projector_transfer
from divprop.operators import apply_map, apply_map_ancilla, coords, random_channel, random_hermitian, trace_norm

seeds = st.integers(0, 2**32 - 1)


def test_certify_identity():
    c = certify(np.eye(4))
    assert c.trace_preserving and c.completely_positive and c.positivity_sampled
    assert c.rank == 4 and c.kernel_basis == []


def test_certify_psi():
    c = certify(PSI)
    assert c.trace_preserving and c.completely_positive and c.rank == 2
    assert len(c.kernel_basis) == 2 and len(c.image_basis) == 2
    for K in c.kernel_basis:
        assert np.allclose(apply_map(PSI, K), 0, atol=1e-12)


def test_certify_rank_three_projector():
    c = certify(projector_transfer(3, (0.0, 1.0, 1.0)))
    assert not c.completely_positive
    assert c.min_choi_eigenvalue <= -0.5
    assert c.positivity_samples == 1000


def test_certify_detects_non_positive_map():
    T = np.diag([1.0, 2.0, 0.0, 0.0])
    c = certify(T, samples=200)
    assert not c.completely_positive and not c.positivity_sampled


def test_transpose_is_positive_but_not_cp():
    T = np.diag([1.0, 1.0, -1.0, 1.0])
    c = certify(T, samples=300)
    assert c.positivity_sampled and not c.completely_positive


@given(seeds)
def test_certificate_invariants(seed):
    rng = np.random.default_rng(seed)
    T = random_channel(2, rng, kraus_rank=int(rng.integers(1, 5)))
    mask = rng.choice([0.0, 1.0], 4, p=[0.3, 0.7])
    mask[0] = 1.0
    T = T @ np.diag(mask)
    c = certify(T, samples=50, seed=seed)
    assert c.completely_positive == (c.min_choi_eigenvalue >= -1e-9)
    assert c.rank + len(c.kernel_basis) == 4
    if c.kernel_basis:
        Nc = np.array([coords(K) for K in c.kernel_basis]).T
        assert np.allclose(Nc.conj().T @ Nc, np.eye(Nc.shape[1]), atol=1e-10)
        assert np.linalg.norm(T @ Nc) <= 1e-9


def test_kernel_inclusion_examples():
    model = builtin_model("ex2")
    assert kernel_inclusion(model.transfer(0.2), model.transfer(0.5))[0]
    assert kernel_inclusion(model.transfer(1.5), model.transfer(3.0))[0]
    assert not kernel_inclusion(model.transfer(1.5), model.transfer(0.5))[0]
    with pytest.raises(InvalidDimensionError):
        kernel_inclusion(np.eye(4), np.eye(9))


@given(seeds)
def test_kernel_inclusion_reflexive_and_transitive(seed):
    rng = np.random.default_rng(seed)
    model = builtin_model("phasecov-drop")
    s, u, t = np.sort(rng.uniform(0, 3, 3))
    Ts, Tu, Tt = (model.transfer(x) for x in (s, u, t))
    assert kernel_inclusion(Ts, Ts)[0]
    if kernel_inclusion(Ts, Tu)[0] and kernel_inclusion(Tu, Tt)[0]:
        assert kernel_inclusion(Ts, Tt)[0]


def test_monotonicity_pauli_no_violation():
    ch = PauliChannel((Rate.constant(0.3), Rate.constant(0.5), Rate.constant(1.0)))
    rep = monotonicity_check(ch.transfer, np.linspace(0, 2, 9), ancilla=2, samples=200, refine=False)
    assert not rep.violated
    assert rep.norms.shape == (200, 9)


def test_monotonicity_constant_family():
    T = random_channel(2, np.random.default_rng(0))
    rep = monotonicity_check(lambda t: T, np.linspace(0, 1, 4), samples=20, refine=False)
    assert not rep.violated
    assert np.allclose(rep.norms, rep.norms[:, :1])


def test_monotonicity_finds_exnon_witness():
    fam = NonDiagonal(lambda t: t, 1.0).transfer
    rep = monotonicity_check(fam, np.linspace(0, 1, 11), ancilla=2, samples=500, seed=42)
    assert rep.violated
    inc = rep.violations[0].increase if rep.violations else rep.witness.increase
    assert inc >= 1e-6
    w = rep.violations[0] if rep.violations else rep.witness
    k = 2
    n0 = trace_norm(apply_map_ancilla(fam(w.t_start), w.X, k))
    n1 = trace_norm(apply_map_ancilla(fam(w.t_end), w.X, k))
    assert n1 - n0 == pytest.approx(w.increase, rel=1e-9)


def test_monotonicity_traceless_inputs_for_enlarged_ancilla():
    T = random_channel(2, np.random.default_rng(1))
    rep = monotonicity_check(lambda t: T, [0.0, 1.0], ancilla=3, samples=3, refine=False)
    assert rep.ancilla == 3


def test_monotonicity_is_deterministic():
    fam = NonDiagonal(lambda t: t, 1.0).transfer
    a = monotonicity_check(fam, np.linspace(0, 1, 5), ancilla=2, samples=30, seed=7)
    b = monotonicity_check(fam, np.linspace(0, 1, 5), ancilla=2, samples=30, seed=7)
    assert np.array_equal(a.norms, b.norms)


def test_monotonicity_input_validation():
    with pytest.raises(DivpropError):
        monotonicity_check(lambda t: np.eye(4), [0.0])
    with pytest.raises(DivpropError):
        monotonicity_check(lambda t: np.eye(4), [0.0, 1.0], samples=0)


@given(seeds)
def test_cptp_maps_contract_trace_norm(seed):
    rng = np.random.default_rng(seed)
    T = random_channel(2, rng)
    assert certify(T).completely_positive
    assert contraction_holds(T, rng, samples=100)


def test_non_cp_map_can_expand_trace_norm():
    theta = np.diag([1.0, 1.0, -1.0, 1.0])
    X = np.zeros((4, 4))
    X[[0, 0, 3, 3], [0, 3, 0, 3]] = 0.5
    assert trace_norm(apply_map_ancilla(theta, X, 2)) > trace_norm(X) + 0.5
    assert not contraction_holds(theta, np.random.default_rng(0), samples=200)


def test_random_hermitian_is_hermitian(rng):
    X = random_hermitian(3, rng)
    assert np.allclose(X, X.conj().T)
