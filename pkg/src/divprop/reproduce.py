"""Pass/fail batteries that re-derive each worked example numerically."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import certify, kernel_inclusion, monotonicity_check
from .config import DEFAULT_SEED, DEFAULT_TOL, Tolerances
from .discrete import (
    DiscreteFamily,
    Ensemble2,
    append_state_map,
    cumulative_channel_family,
    discrete_propagator,
    helstrom,
    info_decreasing_check,
    non_cp_family,
    partial_trace_map,
    right_inverse,
)
from .ginverse import classify, jordan_block_check, spectral_decompose, spectral_ginverse
from .models import (
    PSI,
    PSI_KRAUS,
    NonDiagonal,
    builtin_model,
    classify_qubit_projector,
    integrate_map,
    phase_covariant_generator,
    projector_transfer,
    special_form_decompose,
)
from .operators import (
    SIGMA,
    action_to_transfer,
    is_trace_preserving,
    kraus_to_transfer,
    min_choi_eigenvalue,
    random_channel,
    random_density,
    svd,
    transfer_to_choi,
)
from .propagator import (
    composition_check,
    cptp_search,
    propagator_by_rule,
    propagator_family,
    tp_inverse_family,
)


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    threshold: float | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": self.value,
                "threshold": self.threshold}


@dataclass
class BatteryReport:
    example: str
    seed: int
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"example": self.example, "seed": self.seed, "passed": self.passed,
                "checks": self.checks}

    def summary(self) -> str:
        lines = [f"{self.example}: {'PASS' if self.passed else 'FAIL'}"]
        lines += [f"  [{'ok' if c.passed else 'FAIL'}] {c.name}" for c in self.checks]
        return "\n".join(lines)


def _le(name, value, threshold):
    return Check(name, bool(value <= threshold), float(value), float(threshold))


def _ge(name, value, threshold):
    return Check(name, bool(value >= threshold), float(value), float(threshold))


def _flag(name, ok):
    return Check(name, bool(ok))


def doubled_choi_eigenvalues(T: np.ndarray) -> np.ndarray:
    """Spectrum of ``2 C`` for a qubit map (the normalization of the closed-form qubit spectra)."""
    C = 2 * transfer_to_choi(T)
    return np.linalg.eigvalsh((C + C.conj().T) / 2)


def _density(model, t):
    w = model.omega_at(t)
    return (w + w.conj().T) / 2


# -- batteries ----------------------------------------------------------------

def battery_ex1(seed: int, samples: int, tol: Tolerances) -> list[Check]:
    model = builtin_model("example1")
    fam = model.transfer
    rng = np.random.default_rng(seed)
    checks = []
    pairs = [(1.0, 1.0), (1.0, 2.5), (1.5, 2.0), (2.0, 4.0)]
    err1 = err2 = 0.0
    cptp1 = cp2 = True
    not_tp2 = True
    for s, t in pairs:
        ws, wt = _density(model, s), _density(model, t)
        V1 = action_to_transfer(lambda Y: wt * np.trace(Y), 2)
        V2 = action_to_transfer(lambda Y: wt * np.trace(Y @ ws) / np.trace(ws @ ws), 2)
        P1 = propagator_by_rule(fam, s, t, "spectral", tol)
        P2 = propagator_by_rule(fam, s, t, "dual-complement", tol)
        err1, err2 = max(err1, np.max(np.abs(P1 - V1))), max(err2, np.max(np.abs(P2 - V2)))
        c1, c2 = certify(P1, tol), certify(P2, tol)
        cptp1 &= c1.completely_positive and c1.trace_preserving
        cp2 &= c2.completely_positive
        not_tp2 &= not c2.trace_preserving
    checks += [
        _le("spectral-rule propagator equals omega_t Tr(.)", err1, 1e-12),
        _flag("spectral-rule propagator is CPTP", cptp1),
        _le("dual-complement propagator equals omega_t (Y, omega_s)/(omega_s, omega_s)", err2, 1e-12),
        _flag("dual-complement propagator is CP", cp2),
        _flag("dual-complement propagator is not TP", not_tp2),
    ]
    comp = {"spectral": 0.0, "dual-complement": 0.0}
    for _ in range(20):
        s, u, t = np.sort(rng.uniform(1.0, 5.0, 3))
        for rule in comp:
            comp[rule] = max(comp[rule], composition_check(fam, rule, s, u, t, tol))
    checks += [_le(f"composition law, {rule} rule", v, 1e-12) for rule, v in comp.items()]
    Ts = fam(2.0)
    cl = classify(Ts, spectral_ginverse(spectral_decompose(Ts)))
    checks += [
        _le("spectral inverse of a saturated map is the map itself",
            np.max(np.abs(spectral_ginverse(spectral_decompose(Ts)) - Ts)), 1e-12),
        _flag("spectral inverse is reflexive", cl.reflexive),
        _flag("spectral inverse is neither left- nor right-symmetric",
              not cl.left_symmetric and not cl.right_symmetric),
    ]
    ok = all(kernel_inclusion(fam(s), fam(t), tol.rank)[0]
             for s, t in itertools.combinations([0.0, 0.4, 0.9, 1.0, 1.7, 3.0], 2))
    checks.append(_flag("kernel inclusion on sampled pairs", ok))
    return checks


def battery_ex2(seed: int, samples: int, tol: Tolerances) -> list[Check]:
    model = builtin_model("ex2")
    fam = model.transfer
    checks = []
    worst = 0.0
    for s in (0.0, 0.3, 0.7):
        lam = np.sort(spectral_decompose(fam(s)).eigenvalues.real)
        f = model.profile(s)
        worst = max(worst, np.max(np.abs(lam - np.sort([1, 1 - f, 1 - f, 1 - f]))))
    checks.append(_le("eigenvalues {1, 1-f, 1-f, 1-f}", worst, 1e-10))
    ok = True
    for s, t in [(0.1, 0.5), (0.2, 0.9), (0.5, 0.6)]:
        ok &= certify(propagator_by_rule(fam, s, t, "mp", tol), tol).completely_positive
    checks.append(_flag("invertible-regime propagators are CPTP", ok))
    V = propagator_by_rule(fam, 0.4, 2.0, "mp", tol)
    checks += [
        _le("V_{t,s} for s < t* <= t is idempotent", np.max(np.abs(V @ V - V)), 1e-12),
        _flag("V_{t,s} for s < t* <= t is CPTP", min_choi_eigenvalue(V) >= -tol.psd
              and is_trace_preserving(V, 1e-9)),
        _le("V_{t,s} for s < t* <= t has rank 1", svd(V, tol.rank).rank, 1),
    ]
    w = _density(model, 0.0)
    V1 = action_to_transfer(lambda Y: w * np.trace(Y), 2)
    err = np.max(np.abs(propagator_by_rule(fam, 1.5, 3.0, "spectral", tol) - V1))
    checks.append(_le("V_{t,s} for t* <= s equals omega Tr(.)", err, 1e-12))
    return checks


def battery_exnon(seed: int, samples: int, tol: Tolerances) -> list[Check]:
    checks = []
    sv = svd(PSI).singular_values
    checks += [
        _flag("Psi has rank 2 with singular values (1, 1, 0, 0)",
              np.allclose(sv, [1, 1, 0, 0], atol=1e-14)),
        _flag("Psi is CPTP", min_choi_eigenvalue(PSI) >= -tol.psd and is_trace_preserving(PSI)),
        _le("Psi from its two Kraus operators", np.max(np.abs(kraus_to_transfer(PSI_KRAUS) - PSI)), 1e-14),
        _le("adjoint Kraus operators give the dual map Psi^T",
            np.max(np.abs(kraus_to_transfer([K.conj().T for K in PSI_KRAUS]) - PSI.T)), 1e-14),
    ]
    sf = special_form_decompose(PSI)
    checks.append(_flag("special form of Psi has lambda = (1, 0, 0) up to sign",
                        np.allclose(np.abs(sf.lambdas), [1, 0, 0], atol=1e-12)))
    model = NonDiagonal(lambda t: min(t, 1.0), 1.0)
    fam = model.transfer
    V = propagator_by_rule(fam, 0.3, 0.6, "mp", tol)
    checks.append(_le("invertible-regime propagator is not CP (min Choi eigenvalue)",
                      min_choi_eigenvalue(V), -1e-3))
    inv = tp_inverse_family(PSI, tol)
    checks.append(_flag("TP inverse family fixes a30 = 0 and a31 = 1",
                        inv.fixed.get("a30") == 0.0 and abs(inv.fixed.get("a31", 0) - 1) < 1e-14))
    pf = propagator_family(PSI, inv, tol)
    checks.append(_flag("propagator family is parameterized by (a32, a33)", pf.names == ("a32", "a33")))
    worst = 0.0
    axis = np.linspace(-2, 2, 41)
    for a, b in itertools.product(axis, axis):
        lam = doubled_choi_eigenvalues(pf.at(a32=a, a33=b))
        r = math.sqrt(a * a + b * b + 1)
        worst = max(worst, np.max(np.abs(lam - np.array([1 - r, 1 - r, 1 + r, 1 + r]))))
    checks.append(_le("Choi spectrum 1 +- sqrt(a32^2 + a33^2 + 1) on a 41x41 grid", worst, 1e-10))
    res = cptp_search(pf, seed=seed, tol=tol)
    checks += [
        _flag("cptp_search verdict is unique-CPTP", res.verdict == "unique-CPTP"),
        _le("unique CPTP point is (0, 0)", float(np.max(np.abs(res.theta))), 1e-6),
    ]
    rep = monotonicity_check(fam, np.linspace(0, 1, 11), ancilla=2, samples=samples, seed=seed,
                             tol=tol)
    found = rep.violations[0].increase if rep.violations else (
        rep.witness.increase if rep.witness else 0.0)
    checks.append(_ge("trace-norm increase witness with a qubit ancilla", found, 1e-6))
    return checks


def _phasecov_closed_vs_ode(tol):
    model = builtin_model("phasecov")
    grid = np.linspace(0.1, 2.0, 20)
    Ts = integrate_map(phase_covariant_generator(1.0, 1.0, 1.0), float(grid[-1]), t_eval=grid)
    return max(float(np.max(np.abs(T - model.transfer(t)))) for t, T in zip(grid, Ts))


def battery_phasecov(seed: int, samples: int, tol: Tolerances) -> list[Check]:
    checks = [_le("closed form vs time-ordered integration (20 points)", _phasecov_closed_vs_ode(tol), 1e-6)]
    model = builtin_model("phasecov-drop")
    ranks = [svd(model.transfer(t), tol.rank).rank for t in (0.5, 0.99, 1.0, 1.5, 1.99, 2.0, 3.0)]
    checks.append(_flag("rank profile 4 -> 2 at t1 -> 1 at t2", ranks == [4, 4, 2, 2, 2, 1, 1]))
    s = 1.3
    Ts = model.transfer(s)
    inv = tp_inverse_family(Ts, tol)
    eg, G = math.exp(model.big_gamma(s)), model.big_g(s)
    checks += [
        _le("fixed entry a30 = -exp(Gamma) + 2G + 1", abs(inv.fixed.get("a30", np.nan) - (-eg + 2 * G + 1)), 1e-10),
        _le("fixed entry a33 = exp(Gamma)", abs(inv.fixed.get("a33", np.nan) - eg), 1e-10),
    ]
    pf = propagator_family(Ts, inv, tol)
    res = cptp_search(pf, seed=seed, tol=tol)
    checks += [
        _flag("V_{s,s} family is parameterized by (a31, a32)", pf.names == ("a31", "a32")),
        _flag("cptp_search verdict is unique-CPTP", res.verdict == "unique-CPTP"),
        _le("unique CPTP point is a31 = a32 = 0", float(np.max(np.abs(res.theta))), 1e-6),
    ]
    dephase = np.diag([1.0, 0.0, 0.0, 1.0])
    checks.append(_le("the CPTP V_{s,s} is complete z-dephasing (not depolarizing)",
                      np.max(np.abs(pf(res.theta) - dephase)), 1e-6))
    vac = np.zeros((4, 4))
    vac[0, 0] = vac[3, 0] = 1.0
    checks.append(_le("map at t >= t2 is the projector onto |0><0|",
                      max(np.max(np.abs(model.transfer(t) - vac)) for t in (2.0, 2.5, 10.0)), 0.0))
    return checks


def battery_projectors(seed: int, samples: int, tol: Tolerances) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    worst = -np.inf
    pts = itertools.product(np.linspace(-1, 1, 21), np.linspace(-5, 5, 21), np.linspace(-5, 5, 21))
    rand = zip(rng.uniform(-1, 1, samples), rng.uniform(-5, 5, samples), rng.uniform(-5, 5, samples))
    for p in itertools.chain(pts, rand):
        worst = max(worst, doubled_choi_eigenvalues(projector_transfer(3, p))[0])
    checks.append(_le("rank 3: min Choi eigenvalue <= -1 everywhere", worst, -1 + 1e-9))
    worst = 0.0
    cp_ok = True
    for _ in range(max(samples // 10, 20)):
        g2, g3, x2, x3 = rng.uniform(-2, 2, 4)
        # the closed-form spectrum holds on the slice gamma2 = x3 = 0
        lam = doubled_choi_eigenvalues(projector_transfer(2, (0.0, g3, x2, 0.0)))
        r = math.sqrt(g3 * g3 + x2 * x2 + 1)
        worst = max(worst, np.max(np.abs(lam - [1 - r, 1 - r, 1 + r, 1 + r])))
        cp_ok &= not classify_qubit_projector(2, (g2, g3, x2, x3), tol).completely_positive
    checks.append(_le("rank 2, gamma2 = x3 = 0: Choi spectrum 1 +- sqrt(g3^2 + x2^2 + 1)", worst, 1e-10))
    zero = classify_qubit_projector(2, (0, 0, 0, 0), tol)
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1e-3
        cp_ok &= not classify_qubit_projector(2, e, tol).completely_positive
    checks.append(_flag("rank 2: CP only at the origin", zero.completely_positive and cp_ok))
    target = action_to_transfer(lambda X: 0.5 * (X + SIGMA[1] @ X @ SIGMA[1]), 2)
    checks.append(_le("rank 2 CP point acts as (X + s1 X s1)/2",
                      np.max(np.abs(kraus_to_transfer(zero.kraus) - target)), 1e-10))
    r1 = [classify_qubit_projector(1, x, tol).completely_positive
          for x in ((0, 0, 1), (0.6, 0, 0.8), (0.3, 0.3, 0.3), (0, 0, 1.01), (1, 1, 0))]
    checks.append(_flag("rank 1: CP iff |x| <= 1", r1 == [True, True, True, False, False]))
    return checks


def battery_jordan(seed: int, samples: int, tol: Tolerances) -> list[Check]:
    return [_flag(f"J_{k}(0) J^T J = J and J^T J J^T = J^T exactly", jordan_block_check(k).passed)
            for k in range(1, 9)]


def battery_discrete(seed: int, samples: int, tol: Tolerances) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    P = partial_trace_map()
    R = append_state_map(random_density(2, rng))
    checks.append(_le("appending a state is a right inverse of the partial trace",
                      np.max(np.abs(P @ R - np.eye(4))), 1e-12))
    Phi = random_channel(2, rng)
    fam = DiscreteFamily.from_maps([P, Phi @ P])
    rinv = right_inverse(P, tol)
    Vs = [discrete_propagator(fam, 1, 2, rinv.random(rng), tol) for _ in range(20)]
    spread = max(np.max(np.abs(a - b)) for a, b in itertools.combinations(Vs, 2))
    checks.append(_le("20 right inverses give the same propagator", spread, 1e-11))
    worst = -np.inf
    E = Ensemble2.random(2, rng)
    h0 = helstrom(E).trace_norm_term
    for _ in range(100):
        worst = max(worst, helstrom(E.mapped(random_channel(2, rng))).trace_norm_term - h0)
    checks.append(_le("guessing probability never increases under channels", worst, 1e-12))
    cum = cumulative_channel_family(2, 5, rng)
    rep = info_decreasing_check(cum, samples=samples, ancilla=2, seed=seed, tol=tol)
    checks.append(_flag("cumulative channels are information decreasing", not rep.violated))
    noncp = non_cp_family()
    plain = info_decreasing_check(noncp, samples=samples, ancilla=1, seed=seed, tol=tol)
    anc = info_decreasing_check(noncp, samples=samples, ancilla=2, seed=seed, tol=tol)
    checks.append(_flag("transpose step: no violation alone, violation with an ancilla",
                        not plain.violated and anc.violated))
    ex2 = builtin_model("ex2").transfer
    times = [0.0, 0.2, 0.5, 0.8]
    disc = DiscreteFamily.sample(ex2, times)
    err = max(np.max(np.abs(discrete_propagator(disc, i, j, tol=tol)
                            - propagator_by_rule(ex2, times[i], times[j], "mp", tol)))
              for i, j in itertools.combinations(range(len(times)), 2))
    checks.append(_le("discrete propagators match continuous ones", err, 1e-12))
    return checks


BATTERIES = {
    "ex1": battery_ex1,
    "ex2": battery_ex2,
    "exnon": battery_exnon,
    "phasecov": battery_phasecov,
    "projectors": battery_projectors,
    "jordan": battery_jordan,
    "discrete": battery_discrete,
}


def reproduce(example: str, seed: int = DEFAULT_SEED, samples: int = 500,
              tol: Tolerances = DEFAULT_TOL) -> BatteryReport:
    try:
        battery = BATTERIES[example]
    except KeyError:
        raise ValueError(f"unknown example {example!r}; choose from {sorted(BATTERIES)}") from None
    return BatteryReport(example, seed, battery(seed, samples, tol))
