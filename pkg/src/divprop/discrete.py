"""Time-discrete dynamical maps whose steps may change the output dimension.

Step ``n`` is a rectangular transfer matrix of shape ``(d_n^2, d_S^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .analysis import kernel_inclusion
from .config import DEFAULT_SEED, DEFAULT_TOL, Tolerances
from .errors import (
    InvalidDimensionError,
    InvalidEnsembleError,
    NoRightInverseError,
    NotDivisibleError,
    OrderingError,
)
from .ginverse import moore_penrose
from .operators import (
    action_to_transfer,
    apply_map,
    apply_map_ancilla,
    map_dims,
    random_density,
    random_hermitian,
    svd,
    trace_norm,
)


@dataclass(frozen=True)
class DiscreteFamily:
    steps: tuple

    def __post_init__(self):
        steps = tuple(np.asarray(T, dtype=float) for T in self.steps)
        if not steps:
            raise InvalidDimensionError("a discrete family needs at least the initial step")
        n_in = steps[0].shape[1]
        if any(T.shape[1] != n_in for T in steps):
            raise InvalidDimensionError("all steps must act on the same input space")
        if steps[0].shape != (n_in, n_in) or np.max(np.abs(steps[0] - np.eye(n_in))) > 1e-12:
            raise InvalidDimensionError("step 0 must be the identity map")
        for T in steps:
            map_dims(T)
        object.__setattr__(self, "steps", steps)

    @classmethod
    def from_maps(cls, maps: Sequence[np.ndarray]) -> "DiscreteFamily":
        """Prepend the identity to ``maps``."""
        n = np.asarray(maps[0]).shape[1]
        return cls((np.eye(n), *maps))

    @classmethod
    def sample(cls, family, times: Sequence[float]) -> "DiscreteFamily":
        """Sample a continuous family; ``times[0]`` must give the identity."""
        return cls(tuple(family(t) for t in times))

    def __len__(self) -> int:
        return len(self.steps)

    def __getitem__(self, n: int) -> np.ndarray:
        return self.steps[n]

    @property
    def d_system(self) -> int:
        return map_dims(self.steps[0])[0]

    @property
    def dims(self) -> tuple:
        return tuple(map_dims(T)[1] for T in self.steps)

    def divisible(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        n = len(self.steps)
        return all(
            kernel_inclusion(self.steps[i], self.steps[j], tol.rank)[0]
            for i in range(n) for j in range(i + 1, n)
        )


@dataclass(frozen=True)
class RightInverseFamily:
    """All right inverses ``R = base + N C`` of a full-image map; ``N`` spans its kernel."""

    base: np.ndarray
    kernel: np.ndarray

    @property
    def free_shape(self) -> tuple:
        return (self.kernel.shape[1], self.base.shape[1])

    def __call__(self, C: np.ndarray | None = None) -> np.ndarray:
        if C is None or self.kernel.shape[1] == 0:
            return self.base.copy()
        return self.base + self.kernel @ np.asarray(C, dtype=float).reshape(self.free_shape)

    def random(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        return self(scale * rng.standard_normal(self.free_shape))


def right_inverse(T: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> RightInverseFamily:
    """Right inverses of ``T``; raises NoRightInverseError when ``Im(T)`` is proper."""
    T = np.asarray(T, dtype=float)
    f = svd(T, tol.rank)
    if f.rank < T.shape[0]:
        raise NoRightInverseError(
            f"image has dimension {f.rank} < {T.shape[0]}; no right inverse exists"
        )
    return RightInverseFamily(moore_penrose(T, tol.rank).real, f.kernel_basis().real)


def discrete_propagator(family: DiscreteFamily, i: int, j: int, inverse: np.ndarray | None = None,
                        tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``V_{j,i} = Lambda_j Lambda_i^-`` (Moore-Penrose unless ``inverse`` is given)."""
    if j < i:
        raise OrderingError(f"need i <= j, got i={i}, j={j}")
    Ti, Tj = family[i], family[j]
    ok, resid = kernel_inclusion(Ti, Tj, tol.rank)
    if not ok:
        raise NotDivisibleError(f"Ker(Lambda_{i}) is not contained in Ker(Lambda_{j}) ({resid:.3e})")
    G = moore_penrose(Ti, tol.rank).real if inverse is None else np.asarray(inverse, dtype=float)
    return Tj @ G


@dataclass(frozen=True)
class Ensemble2:
    p1: float
    rho1: np.ndarray
    p2: float
    rho2: np.ndarray

    def __post_init__(self):
        if self.p1 < 0 or self.p2 < 0 or abs(self.p1 + self.p2 - 1) > 1e-12:
            raise InvalidEnsembleError("priors must be nonnegative and sum to 1")
        for rho in (self.rho1, self.rho2):
            rho = np.asarray(rho)
            if (rho.shape != np.asarray(self.rho1).shape or abs(np.trace(rho) - 1) > 1e-10
                    or np.max(np.abs(rho - rho.conj().T)) > 1e-10
                    or np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0] < -1e-10):
                raise InvalidEnsembleError("states must be unit-trace PSD matrices of equal size")

    @classmethod
    def from_members(cls, members: Sequence[tuple]) -> "Ensemble2":
        if len(members) != 2:
            raise InvalidEnsembleError(
                f"only binary ensembles are supported, got {len(members)} members"
            )
        (p1, r1), (p2, r2) = members
        return cls(float(p1), np.asarray(r1, dtype=complex), float(p2), np.asarray(r2, dtype=complex))

    @classmethod
    def random(cls, d: int, rng: np.random.Generator) -> "Ensemble2":
        p = float(rng.uniform())
        return cls(p, random_density(d, rng), 1 - p, random_density(d, rng))

    def operator(self) -> np.ndarray:
        return self.p1 * np.asarray(self.rho1) - self.p2 * np.asarray(self.rho2)

    def mapped(self, T: np.ndarray) -> "Ensemble2":
        out = [apply_map(T, r) for r in (self.rho1, self.rho2)]
        return Ensemble2(self.p1, (out[0] + out[0].conj().T) / 2, self.p2, (out[1] + out[1].conj().T) / 2)


@dataclass(frozen=True)
class GuessingProbability:
    trace_norm_term: float
    helstrom_value: float

    def to_dict(self) -> dict:
        return {"trace_norm_term": self.trace_norm_term, "helstrom_value": self.helstrom_value}


def helstrom(E: Ensemble2 | Sequence[tuple]) -> GuessingProbability:
    """``1/2 ||p1 rho1 - p2 rho2||_1`` and the optimal success probability ``1/2 (1 + ||.||_1)``."""
    if not isinstance(E, Ensemble2):
        E = Ensemble2.from_members(E)
    n = trace_norm(E.operator())
    return GuessingProbability(0.5 * n, 0.5 * (1 + n))


@dataclass
class InfoReport:
    ancilla: int
    norms: np.ndarray
    violations: list = field(default_factory=list)

    @property
    def violated(self) -> bool:
        return bool(self.violations)

    def to_dict(self) -> dict:
        return {"ancilla": self.ancilla, "norms": self.norms, "violations": self.violations}


def info_decreasing_check(family: DiscreteFamily, samples: int = 200, ancilla: int = 1,
                          seed: int = DEFAULT_SEED, tol: Tolerances = DEFAULT_TOL,
                          ensembles: bool = False, inputs: Sequence[np.ndarray] = ()) -> InfoReport:
    """Check ``||(id_k (x) Lambda_n)(X)||_1`` is nonincreasing in ``n``.

    ``X`` is sampled Hermitian, or ``p1 rho1 - p2 rho2`` for random binary
    ensembles when ``ensembles`` is set; explicit ``inputs`` are checked first.
    Each violation records ``(sample, n, increase, X)``.
    """
    d, k = family.d_system, ancilla
    rngs = [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(samples)]
    Xs = [np.asarray(X, dtype=complex) for X in inputs]
    for rng in rngs:
        if ensembles:
            Xs.append(Ensemble2.random(k * d, rng).operator())
        else:
            X = random_hermitian(k * d, rng)
            Xs.append(X / trace_norm(X))
    norms = np.array([[trace_norm(apply_map_ancilla(T, X, k)) for T in family.steps] for X in Xs])
    violations = []
    for i, row in enumerate(norms):
        inc = np.diff(row)
        for n in np.flatnonzero(inc > tol.mono):
            violations.append({"sample": i, "step": int(n + 1), "increase": float(inc[n]), "X": Xs[i]})
    return InfoReport(k, norms, violations)


# -- reference maps -------------------------------------------------------------

def depolarizing(p: float, d: int = 2) -> np.ndarray:
    """``X -> p X + (1 - p) Tr(X) 1/d``."""
    T = p * np.eye(d * d)
    T[0, 0] = 1.0
    return T


def transpose_map(d: int = 2) -> np.ndarray:
    return action_to_transfer(lambda X: X.T, d)


def partial_trace_map(d_keep: int = 2, d_drop: int = 2) -> np.ndarray:
    """Transfer matrix of ``Tr_2`` on ``C^d_keep (x) C^d_drop``."""
    def tr2(X):
        return np.einsum("ajbj->ab", X.reshape(d_keep, d_drop, d_keep, d_drop))
    return action_to_transfer(tr2, d_keep * d_drop, d_out=d_keep)


def append_state_map(sigma: np.ndarray, d_keep: int = 2) -> np.ndarray:
    """``Y -> Y (x) sigma``: a right inverse of the partial trace."""
    sigma = np.asarray(sigma, dtype=complex)
    return action_to_transfer(lambda Y: np.kron(Y, sigma), d_keep, d_out=d_keep * sigma.shape[0])


def non_cp_family() -> DiscreteFamily:
    """``[id, D_p, Theta D_p]``: the last propagator is the transpose (positive, not CP)."""
    return DiscreteFamily.from_maps([depolarizing(0.5), transpose_map() @ depolarizing(0.5)])


def cumulative_channel_family(d: int, n: int, rng: np.random.Generator) -> DiscreteFamily:
    """``Lambda_k = Phi_k ... Phi_1`` for random channels ``Phi``."""
    from .operators import random_channel

    maps, cur = [], np.eye(d * d)
    for _ in range(n):
        cur = random_channel(d, rng) @ cur
        maps.append(cur)
    return DiscreteFamily.from_maps(maps)


def family_from_json(obj) -> DiscreteFamily:
    """A JSON list of transfer-matrix objects (identity first, or prepended when absent)."""
    from .io import ParseError, transfer_from_json

    if isinstance(obj, dict):
        obj = obj.get("steps")
    if not isinstance(obj, list) or not obj:
        raise ParseError("discrete family JSON must be a non-empty list of transfer matrices")
    maps = [transfer_from_json(m) for m in obj]
    n = maps[0].shape[1]
    if maps[0].shape == (n, n) and np.allclose(maps[0], np.eye(n), atol=1e-12):
        return DiscreteFamily(tuple(maps))
    return DiscreteFamily.from_maps(maps)

