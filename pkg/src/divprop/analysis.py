"""Certification of single maps and of map families."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import DEFAULT_SEED, DEFAULT_TOL, Tolerances
from .errors import DivpropError, InvalidDimensionError
from .operators import (
    apply_map,
    apply_map_ancilla,
    choi_spectrum,
    from_coords,
    herm_basis,
    is_trace_preserving,
    map_dims,
    random_hermitian,
    svd,
    trace_norm,
)

POSITIVITY_SAMPLES = 1000


@dataclass(frozen=True)
class MapCertificate:
    trace_preserving: bool
    completely_positive: bool
    min_choi_eigenvalue: float
    choi_spectrum: np.ndarray
    positivity_sampled: bool
    positivity_samples: int
    rank: int
    kernel_basis: list
    image_basis: list

    def to_dict(self) -> dict:
        return {
            "trace_preserving": self.trace_preserving,
            "completely_positive": self.completely_positive,
            "min_choi_eigenvalue": self.min_choi_eigenvalue,
            "choi_spectrum": [float(x) for x in self.choi_spectrum],
            "positivity_sampled": self.positivity_sampled,
            "positivity_samples": self.positivity_samples,
            "rank": self.rank,
            "kernel_basis": [np.asarray(k) for k in self.kernel_basis],
            "image_basis": [np.asarray(k) for k in self.image_basis],
        }


def certify(T: np.ndarray, tol: Tolerances = DEFAULT_TOL, samples: int = POSITIVITY_SAMPLES,
            seed: int = DEFAULT_SEED) -> MapCertificate:
    """Trace preservation, complete positivity, sampled positivity, kernel and image.

    Positivity is checked on ``samples`` Haar-random pure inputs; when the
    Choi test already certifies CP the sampling is skipped (it cannot fail).
    """
    T = np.asarray(T, dtype=float)
    d_in, d_out = map_dims(T)
    spec = choi_spectrum(T)
    cp = bool(spec[0] >= -tol.psd)
    if cp:
        positive = True
    else:
        positive = _sampled_positive(T, d_in, samples, np.random.default_rng(seed), tol.psd)
    f = svd(T, tol.rank)
    return MapCertificate(
        trace_preserving=is_trace_preserving(T, 1e-9),
        completely_positive=cp,
        min_choi_eigenvalue=float(spec[0]),
        choi_spectrum=spec,
        positivity_sampled=positive,
        positivity_samples=0 if cp else samples,
        rank=f.rank,
        kernel_basis=[from_coords(v, d_in) for v in f.kernel_basis().T],
        image_basis=[from_coords(v, d_out) for v in f.image_basis().T],
    )


def _sampled_positive(T, d, samples, rng, tol) -> bool:
    psi = rng.standard_normal((samples, d)) + 1j * rng.standard_normal((samples, d))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    for v in psi:
        out = apply_map(T, np.outer(v, v.conj()))
        if np.linalg.eigvalsh((out + out.conj().T) / 2)[0] < -tol:
            return False
    return True


def kernel_inclusion(Ts: np.ndarray, Tt: np.ndarray, tol_rank: float = DEFAULT_TOL.rank,
                     tol: float = 1e-9) -> tuple[bool, float]:
    """Whether ``Ker(T_s)`` is contained in ``Ker(T_t)``; returns ``(verdict, ||T_t N_s||)``."""
    Ts, Tt = np.asarray(Ts), np.asarray(Tt)
    if Ts.shape[1] != Tt.shape[1]:
        raise InvalidDimensionError("maps act on spaces of different dimension")
    N = svd(Ts, tol_rank).kernel_basis()
    if N.shape[1] == 0:
        return True, 0.0
    resid = float(np.linalg.norm(Tt @ N, 2))
    return resid <= tol * max(1.0, np.linalg.norm(Tt, 2)), resid


@dataclass
class Violation:
    sample: int
    t_start: float
    t_end: float
    increase: float
    X: np.ndarray

    def to_dict(self) -> dict:
        return {"sample": self.sample, "t_start": self.t_start, "t_end": self.t_end,
                "increase": self.increase, "X": self.X}


@dataclass
class MonotonicityReport:
    times: np.ndarray
    ancilla: int
    norms: np.ndarray
    violations: list = field(default_factory=list)
    witness: Violation | None = None
    evaluations: int = 0

    @property
    def violated(self) -> bool:
        return bool(self.violations) or self.witness is not None

    def to_dict(self) -> dict:
        return {
            "times": self.times,
            "ancilla": self.ancilla,
            "norms": self.norms,
            "violations": self.violations,
            "witness": self.witness,
            "evaluations": self.evaluations,
        }


def _sample_input(n: int, traceless: bool, rng: np.random.Generator) -> np.ndarray:
    X = random_hermitian(n, rng)
    if traceless:
        X -= np.trace(X).real / n * np.eye(n)
    return X / trace_norm(X)


def monotonicity_check(
    family: Callable[[float], np.ndarray],
    grid: Sequence[float],
    ancilla: int = 1,
    samples: int = 200,
    seed: int = DEFAULT_SEED,
    tol: Tolerances = DEFAULT_TOL,
    traceless: bool | None = None,
    refine: bool = True,
    max_evaluations: int = 10_000,
) -> MonotonicityReport:
    """Track ``||(id_k (x) Lambda_t)(X)||_1`` along ``grid`` for sampled Hermitian ``X``.

    ``ancilla=1`` checks the map alone; ``ancilla=d`` the completely-positive
    version; ``ancilla=d+1`` uses traceless ``X`` by default.  Any increase
    above ``tol.mono`` between consecutive grid points is a violation.  If
    none is found and ``refine`` is set, the best sample is improved by
    coordinate search until a violation appears or the evaluation budget is
    spent.
    """
    times = np.asarray(grid, dtype=float)
    if times.size < 2:
        raise DivpropError("grid needs at least two time points")
    if samples < 1:
        raise DivpropError("samples must be positive")
    maps = [np.asarray(family(t), dtype=float) for t in times]
    d = map_dims(maps[0])[0]
    if traceless is None:
        traceless = ancilla == d + 1
    n = ancilla * d

    def norms_of(X):
        return np.array([trace_norm(apply_map_ancilla(T, X, ancilla)) for T in maps])

    children = np.random.SeedSequence(seed).spawn(samples)
    norms = np.empty((samples, times.size))
    inputs = []
    violations = []
    for i, child in enumerate(children):
        X = _sample_input(n, traceless, np.random.default_rng(child))
        inputs.append(X)
        norms[i] = norms_of(X)
        inc = np.diff(norms[i])
        for j in np.flatnonzero(inc > tol.mono):
            violations.append(Violation(i, times[j], times[j + 1], float(inc[j]), X))
    evals = samples * times.size
    report = MonotonicityReport(times, ancilla, norms, violations, evaluations=evals)
    if violations or not refine:
        return report

    best = int(np.argmax(np.max(np.diff(norms, axis=1), axis=1)))
    report.witness, report.evaluations = _refine(
        inputs[best], best, maps, times, ancilla, traceless, tol.mono, max_evaluations - evals
    )
    report.evaluations += evals
    return report


def _refine(X0, idx, maps, times, k, traceless, tol_mono, budget):
    """Coordinate ascent on the largest consecutive increase, over Hermitian coordinates."""
    n = X0.shape[0]
    basis = herm_basis(n)
    if traceless:
        basis = basis[1:]

    def score(c):
        X = np.einsum("a,aij->ij", c, basis)
        X = X / trace_norm(X)
        vals = np.array([trace_norm(apply_map_ancilla(T, X, k)) for T in maps])
        inc = np.diff(vals)
        j = int(np.argmax(inc))
        return inc[j], j, X

    c = np.einsum("aij,ji->a", basis, X0).real
    best, j, X = score(c)
    evals = len(maps)
    step = 0.5
    while evals < budget and step > 1e-6:
        improved = False
        for a in range(len(c)):
            for sgn in (1.0, -1.0):
                trial = c.copy()
                trial[a] += sgn * step
                val, jj, XX = score(trial)
                evals += len(maps)
                if val > best:
                    c, best, j, X, improved = trial, val, jj, XX, True
                    break
            if best > tol_mono and best > 1e-6:
                return Violation(idx, times[j], times[j + 1], float(best), X), evals
            if evals >= budget:
                break
        if not improved:
            step /= 2
    if best > tol_mono:
        return Violation(idx, times[j], times[j + 1], float(best), X), evals
    return None, evals


def contraction_holds(T: np.ndarray, rng: np.random.Generator, samples: int = 100,
                      ancilla: int | None = None, tol: float = 1e-10) -> bool:
    """Spot-check ``||(id (x) Phi)(X)||_1 <= ||X||_1`` on random Hermitian ``X``."""
    d = map_dims(T)[0]
    k = d if ancilla is None else ancilla
    for _ in range(samples):
        X = random_hermitian(k * d, rng)
        if trace_norm(apply_map_ancilla(T, X, k)) > trace_norm(X) + tol:
            return False
    return True
