import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from divprop.errors import FamilyTooLargeError, NotDivisibleError, NotTracePreservingError, OrderingError
from divprop.ginverse import GInverseParams
from divprop.models import builtin_model, projector_transfer
from divprop.operators import min_choi_eigenvalue, random_channel, svd
from divprop.propagator import (
    RULES,
    AffineFamily,
    composition_check,
    cptp_search,
    image_condition_check,
    inverse_by_rule,
    propagate,
    propagator_by_rule,
    propagator_family,
    tp_inverse_family,
)

seeds = st.integers(0, 2**32 - 1)


def test_propagate_attractor():
    model = builtin_model("example1")
    Ts, Tt = model.transfer(0.3), model.transfer(0.8)
    rep = propagate(Ts, Tt, inverse_by_rule(Ts, "mp"), 0.3, 0.8)
    assert rep.propagator_residual <= 1e-12
    assert rep.image_match
    assert rep.certificate.trace_preserving


def test_propagate_requires_nested_kernels():
    model = builtin_model("ex2")
    Ts, Tt = model.transfer(1.5), model.transfer(0.5)
    with pytest.raises(NotDivisibleError):
        propagate(Ts, Tt, inverse_by_rule(Ts, "mp"))


@given(seeds, st.floats(0.05, 2.5), st.floats(0.0, 1.0))
def test_tp_family_invariants(seed, s, frac):
    rng = np.random.default_rng(seed)
    model = builtin_model("phasecov-drop")
    t = s + frac * (2.9 - s)
    Ts, Tt = model.transfer(s), model.transfer(t)
    fam = tp_inverse_family(Ts)
    theta = rng.uniform(-2, 2, fam.dim)
    G = fam(theta)
    assert np.allclose(G[0], np.eye(4)[0], atol=1e-12)
    assert np.linalg.norm(Ts @ G @ Ts - Ts) <= 1e-9
    V = propagator_family(Tt, fam)
    assert np.linalg.norm(V(rng.uniform(-2, 2, V.dim)) @ Ts - Tt) <= 1e-8


def test_block_parameterization_is_also_tp():
    model = builtin_model("phasecov-drop")
    Ts = model.transfer(1.3)
    fam = tp_inverse_family(Ts)
    rng = np.random.default_rng(3)
    f = svd(Ts[1:, 1:])
    G = fam.from_blocks(GInverseParams.random(f, rng), rng.standard_normal(fam.kernel_basis.shape[1]))
    assert np.allclose(G[0], np.eye(4)[0])
    assert np.linalg.norm(Ts @ G @ Ts - Ts) <= 1e-10


@given(seeds)
def test_choi_minimum_is_concave_on_segments(seed):
    rng = np.random.default_rng(seed)
    model = builtin_model("exnon")
    fam = propagator_family(model.transfer(1.5), tp_inverse_family(model.transfer(1.2)))
    a, b = rng.uniform(-3, 3, (2, fam.dim))
    w = rng.uniform()
    mid = min_choi_eigenvalue(fam(w * a + (1 - w) * b))
    assert mid >= w * min_choi_eigenvalue(fam(a)) + (1 - w) * min_choi_eigenvalue(fam(b)) - 1e-12


def test_tp_family_requires_trace_preservation():
    with pytest.raises(NotTracePreservingError):
        tp_inverse_family(2 * np.eye(4))


def test_invertible_map_has_zero_dimensional_family(rng):
    T = random_channel(2, rng)
    fam = tp_inverse_family(T)
    assert fam.dim == 0
    assert np.allclose(fam(), np.linalg.inv(T), atol=1e-10)
    res = cptp_search(propagator_family(T, fam))
    assert res.verdict == "unique-CPTP"


def test_attractor_after_saturation_has_twelve_free_parameters():
    Ts = builtin_model("ex2").transfer(2.0)
    fam = tp_inverse_family(Ts)
    assert fam.dim == 12 and fam.fixed == {}


def test_rank_two_family_names_and_fixed_entries():
    fam = tp_inverse_family(builtin_model("exnon").transfer(1.0))
    assert fam.fixed == pytest.approx({"a30": 0.0, "a31": 1.0})
    V = propagator_family(builtin_model("exnon").transfer(1.4), fam)
    assert V.names == ("a32", "a33")


def test_phase_covariant_family_after_rank_drop():
    pc = builtin_model("phasecov-drop")
    s, t = 1.2, 1.6
    fam = tp_inverse_family(pc.transfer(s))
    eg = np.exp(pc.big_gamma(s))
    assert fam.fixed["a33"] == pytest.approx(eg, rel=1e-9)
    assert fam.fixed["a30"] == pytest.approx(-eg + 2 * pc.big_g(s) + 1, rel=1e-9, abs=1e-12)
    V = propagator_family(pc.transfer(t), fam)
    assert V.names == ("a31", "a32")
    scale = np.exp(-pc.big_gamma(t))
    assert scale == pytest.approx(0.08986579282344433, rel=1e-9)
    assert np.abs(V.directions).max() == pytest.approx(scale, rel=1e-9)


def test_rank_three_projector_family():
    T = np.diag([1.0, 1.0, 1.0, 0.0])
    fam = tp_inverse_family(T)
    assert fam.names == ("a30", "a13", "a23", "a31", "a32", "a33")
    V = propagator_family(T, fam)
    assert V.names == ("a13", "a23")
    res = cptp_search(V)
    assert res.verdict == "none-CPTP"
    assert res.best_min_eigenvalue == pytest.approx(-0.5, abs=1e-6)


def test_exnon_search_is_unique_at_origin():
    model = builtin_model("exnon")
    V = propagator_family(model.transfer(1.5), tp_inverse_family(model.transfer(1.2)))
    res = cptp_search(V)
    assert res.verdict == "unique-CPTP"
    assert np.allclose(res.theta, 0, atol=1e-4)
    assert res.diameters[1e-14] < res.diameters[1e-10]


def test_phase_covariant_search_finds_dephasing():
    model = builtin_model("phasecov-drop")
    Ts = model.transfer(1.2)
    res = cptp_search(propagator_family(Ts, tp_inverse_family(Ts)))
    assert res.verdict == "unique-CPTP"
    assert np.allclose(res.witnesses[0]["V"] @ Ts, Ts, atol=1e-6)
    assert np.allclose(res.witnesses[0]["V"], np.diag([1, 0, 0, 1]), atol=1e-3)


def test_open_family_is_multi_cptp():
    base = np.diag([1.0, 0.5, 0.5, 0.5])
    d = np.zeros((1, 4, 4))
    d[0, 1, 1] = d[0, 2, 2] = 0.1
    res = cptp_search(AffineFamily(base, d, ("u",)))
    assert res.verdict == "multi-CPTP"
    assert len(res.witnesses) >= 2


def test_search_rejects_large_families():
    fam = AffineFamily(np.eye(4), np.zeros((9, 4, 4)), tuple(f"p{i}" for i in range(9)))
    with pytest.raises(FamilyTooLargeError):
        cptp_search(fam)


@pytest.mark.parametrize("rule", sorted(RULES))
def test_composition_for_consistent_rules(rule):
    fam = builtin_model("example1").transfer
    assert composition_check(fam, rule, 0.2, 0.5, 0.9) <= 1e-9


def test_composition_ordering():
    with pytest.raises(OrderingError):
        composition_check(builtin_model("example1").transfer, "mp", 0.5, 0.2, 0.9)


def test_image_condition():
    Tt = projector_transfer(2, (0, 0, 0, 0))
    assert image_condition_check(Tt, Tt)
    padded = Tt.copy()
    padded[3, 3] = 1.0
    assert not image_condition_check(padded, Tt)


def test_unknown_rule():
    with pytest.raises(ValueError):
        inverse_by_rule(np.eye(4), "nope")
    assert np.allclose(inverse_by_rule(np.eye(4), lambda T: T), np.eye(4))


def test_propagator_by_rule_matches_manual():
    fam = builtin_model("example1").transfer
    V = propagator_by_rule(fam, 0.4, 0.7, "spectral")
    assert np.linalg.norm(V @ fam(0.4) - fam(0.7)) <= 1e-10
