"""Closed-form qubit dynamical maps, GKLS generators and the qubit canonical form.

All transfer matrices use the Bloch convention ``T[a, b] = Tr(sigma_a Phi(sigma_b)) / 2``.
Rate divergences are declared, never integrated through: for ``t`` at or past
a declared divergence time the saturated closed form is returned exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.spatial.transform import Rotation

from .config import DEFAULT_TOL
from .errors import (
    IntegrationError,
    InvalidDimensionError,
    InvalidHamiltonianError,
    ModelInconsistencyError,
)
from .expr import parse_function
from .operators import (
    SIGMA,
    action_to_transfer,
    choi_spectrum,
    choi_to_kraus,
    coords,
    herm_basis,
    transfer_to_choi,
)

QUAD_EPSREL = 1e-10

PSI = np.array(
    [[1.0, 0, 0, 0],
     [0, 0, 0, 1.0],
     [0, 0, 0, 0],
     [0, 0, 0, 0]]
)
"""Bloch matrix of the non-diagonalizable channel ``sigma_3 -> sigma_1``."""

PSI_KRAUS = (
    np.array([[1, 0], [1, 0]], dtype=complex) / np.sqrt(2),
    np.array([[0, 1], [0, -1]], dtype=complex) / np.sqrt(2),
)
"""``|+><0|`` and ``|-><1|``.  Their adjoints implement the dual map (Bloch matrix ``PSI.T``)."""


@dataclass(frozen=True)
class Rate:
    """A decay rate ``gamma(t)`` with optional closed-form integral and divergence time."""

    rate: Callable[[float], float]
    integral: Callable[[float], float] | None = None
    diverges_at: float | None = None

    @classmethod
    def constant(cls, g: float) -> "Rate":
        return cls(lambda t: g, lambda t: g * t)

    def __call__(self, t: float) -> float:
        return self.rate(t)

    def integrated(self, t: float) -> float:
        """``int_0^t gamma``; ``inf`` at or after the declared divergence time."""
        if self.diverges_at is not None and t >= self.diverges_at:
            return math.inf
        if t <= 0:
            return 0.0
        if self.integral is not None:
            val = float(self.integral(t))
        else:
            val, _ = quad(self.rate, 0.0, t, epsrel=QUAD_EPSREL, limit=200)
        if not math.isfinite(val):
            raise ModelInconsistencyError(
                f"rate integral diverges at t={t} before its declared divergence time"
            )
        return val


def _check_profile(f: Callable[[float], float], t_star: float | None):
    ts = np.linspace(0.0, t_star if t_star else 1.0, 101)
    vals = np.array([f(t) for t in ts])
    if abs(vals[0]) > 1e-12:
        raise ModelInconsistencyError("f(0) must vanish")
    if np.any(vals < -1e-12) or np.any(vals > 1 + 1e-12) or np.any(np.diff(vals) < -1e-12):
        raise ModelInconsistencyError("f must be nondecreasing with values in [0, 1]")


@dataclass(frozen=True)
class GlobalAttractor:
    """``Lambda_t(X) = (1 - f) X + f omega_t Tr X`` with ``f = 1`` from ``t_star`` on.

    ``omega`` is a density matrix, a Bloch vector (qubits) or a callable of ``t``
    returning either.
    """

    f: Callable[[float], float]
    omega: object
    t_star: float | None = None
    d: int = 2

    def __post_init__(self):
        _check_profile(self.f, self.t_star)

    def profile(self, t: float) -> float:
        if self.t_star is not None and t >= self.t_star:
            return 1.0
        return float(self.f(t))

    def omega_at(self, t: float) -> np.ndarray:
        w = self.omega(t) if callable(self.omega) else self.omega
        w = np.asarray(w)
        if w.ndim == 1:
            if self.d != 2 or w.size != 3:
                raise InvalidDimensionError("Bloch-vector omega is only defined for qubits")
            return 0.5 * (SIGMA[0] + sum(c * s for c, s in zip(w, SIGMA[1:])))
        return w.astype(complex)

    def transfer(self, t: float) -> np.ndarray:
        f = self.profile(t)
        n = self.d * self.d
        col = np.sqrt(self.d) * coords(self.omega_at(t)).real
        T = (1 - f) * np.eye(n)
        T[:, 0] += f * col
        return T


@dataclass(frozen=True)
class PauliChannel:
    """``lambda_i = exp(-Gamma_j - Gamma_k)`` for rates ``gamma_1, gamma_2, gamma_3``."""

    rates: tuple

    def transfer(self, t: float) -> np.ndarray:
        G = [r.integrated(t) for r in self.rates]
        lam = [math.exp(-(G[1] + G[2])), math.exp(-(G[0] + G[2])), math.exp(-(G[0] + G[1]))]
        return np.diag([1.0] + lam)

    def eigenvalues(self, t: float) -> np.ndarray:
        return np.diag(self.transfer(t))[1:]


@dataclass(frozen=True)
class NonDiagonal:
    """``Lambda_t = (1 - f) id + f Psi`` with ``f = 1`` from ``t_star`` on."""

    f: Callable[[float], float]
    t_star: float | None = None

    def __post_init__(self):
        _check_profile(self.f, self.t_star)

    def profile(self, t: float) -> float:
        if self.t_star is not None and t >= self.t_star:
            return 1.0
        return float(self.f(t))

    def transfer(self, t: float) -> np.ndarray:
        f = self.profile(t)
        return (1 - f) * np.eye(4) + f * PSI


@dataclass(frozen=True)
class PhaseCovariant:
    """Phase-covariant qubit evolution with rates ``gamma_+``, ``gamma_-``, ``gamma_3``.

    With ``Gamma = 1/2 int (gamma_+ + gamma_-)``, ``Gamma_3 = int gamma_3`` and
    ``G = 1/2 int exp(Gamma) gamma_-`` the Bloch matrix is::

        [[1, 0, 0, 0],
         [0, c, 0, 0],
         [0, 0, c, 0],
         [1 - exp(-Gamma) (2G + 1), 0, 0, exp(-Gamma)]],   c = exp(-(Gamma/2 + Gamma_3))

    ``t1`` (``Gamma_3`` diverges) and ``t2`` (``Gamma`` diverges) default to the
    rates' declared divergence times.
    """

    gamma_plus: Rate
    gamma_minus: Rate
    gamma_3: Rate
    t1: float | None = None
    t2: float | None = None

    def __post_init__(self):
        if self.t1 is None:
            object.__setattr__(self, "t1", self.gamma_3.diverges_at)
        if self.t2 is None:
            ends = [r.diverges_at for r in (self.gamma_plus, self.gamma_minus) if r.diverges_at is not None]
            object.__setattr__(self, "t2", min(ends) if ends else None)
        if self.t1 is not None and self.t2 is not None and self.t1 > self.t2:
            raise ModelInconsistencyError("need t1 <= t2")

    def big_gamma(self, t: float) -> float:
        if self.t2 is not None and t >= self.t2:
            return math.inf
        return 0.5 * (self.gamma_plus.integrated(t) + self.gamma_minus.integrated(t))

    def gamma3_integral(self, t: float) -> float:
        if self.t1 is not None and t >= self.t1:
            return math.inf
        return self.gamma_3.integrated(t)

    def big_g(self, t: float) -> float:
        """``G(t) = 1/2 int_0^t exp(Gamma(tau)) gamma_-(tau) dtau`` (finite before ``t2``)."""
        if t <= 0:
            return 0.0
        if self.t2 is not None and t >= self.t2:
            return math.inf
        if self.gamma_plus.integral is not None and self.gamma_minus.integral is not None:
            val, _ = quad(lambda s: math.exp(self.big_gamma(s)) * self.gamma_minus(s), 0.0, t,
                          epsrel=QUAD_EPSREL, limit=200)
            return 0.5 * val
        # integrate Gamma alongside G so exp(Gamma) comes from the running value
        def rhs(s, y):
            return [0.5 * (self.gamma_plus(s) + self.gamma_minus(s)),
                    0.5 * math.exp(y[0]) * self.gamma_minus(s)]
        sol = solve_ivp(rhs, (0.0, t), [0.0, 0.0], method="DOP853", rtol=1e-12, atol=1e-14)
        if not sol.success:
            raise ModelInconsistencyError(f"G(t) integration failed: {sol.message}")
        return float(sol.y[1, -1])

    def transfer(self, t: float) -> np.ndarray:
        T = np.zeros((4, 4))
        T[0, 0] = 1.0
        if self.t2 is not None and t >= self.t2:
            T[3, 0] = 1.0
            return T
        gam = self.big_gamma(t)
        c = math.exp(-(gam / 2 + self.gamma3_integral(t)))
        T[1, 1] = T[2, 2] = c
        T[3, 0] = 1 - math.exp(-gam) * (2 * self.big_g(t) + 1)
        T[3, 3] = math.exp(-gam)
        return T


@dataclass(frozen=True)
class SampledFamily:
    """Transfer matrices tabulated on a time grid, linearly interpolated."""

    times: np.ndarray
    maps: np.ndarray

    def transfer(self, t: float) -> np.ndarray:
        ts = np.asarray(self.times)
        if t <= ts[0]:
            return self.maps[0].copy()
        if t >= ts[-1]:
            return self.maps[-1].copy()
        k = int(np.searchsorted(ts, t, side="right")) - 1
        w = (t - ts[k]) / (ts[k + 1] - ts[k])
        return (1 - w) * self.maps[k] + w * self.maps[k + 1]


@dataclass(frozen=True)
class ConstantFamily:
    """A fixed map at every time (used as a baseline in sweeps)."""

    T: np.ndarray

    def transfer(self, t: float) -> np.ndarray:
        return np.array(self.T, dtype=float)


def transfer_at(model, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("time must be nonnegative")
    return model.transfer(t)


def as_family(model) -> Callable[[float], np.ndarray]:
    return lambda t: transfer_at(model, t)


# -- GKLS generators ----------------------------------------------------------

@dataclass(frozen=True)
class GeneratorSpec:
    """``L_t(rho) = -i[H, rho] + sum_a gamma_a(t) (L_a rho L_a^+ - {L_a^+ L_a, rho}/2)``."""

    H: np.ndarray
    dissipators: tuple = field(default_factory=tuple)

    def __post_init__(self):
        H = np.asarray(self.H)
        if H.ndim != 2 or H.shape[0] != H.shape[1] or np.max(np.abs(H - H.conj().T), initial=0) > 1e-12:
            raise InvalidHamiltonianError("H must be a square Hermitian matrix")

    @property
    def d(self) -> int:
        return np.asarray(self.H).shape[0]

    def apply(self, rho: np.ndarray, t: float) -> np.ndarray:
        H = np.asarray(self.H)
        out = -1j * (H @ rho - rho @ H)
        for L, g in self.dissipators:
            rate = g(t) if callable(g) else g
            LdL = L.conj().T @ L
            out = out + rate * (L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL))
        return out


def gkls_transfer(gen: GeneratorSpec, t: float) -> np.ndarray:
    """Transfer matrix of the generator ``L_t``."""
    return action_to_transfer(lambda X: gen.apply(X, t), gen.d)


def _rate_fn(r):
    if isinstance(r, Rate):
        return r.rate
    return r if callable(r) else (lambda t, c=float(r): c)


def pauli_generator(g1, g2, g3) -> GeneratorSpec:
    """``sum_k gamma_k (sigma_k rho sigma_k - rho) / 2``."""
    ops = [SIGMA[k] / np.sqrt(2) for k in (1, 2, 3)]
    return GeneratorSpec(np.zeros((2, 2)), tuple(zip(ops, map(_rate_fn, (g1, g2, g3)))))


SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()


def phase_covariant_generator(g_plus, g_minus, g_3) -> GeneratorSpec:
    ops = (SIGMA_PLUS / np.sqrt(2), SIGMA_MINUS / np.sqrt(2), SIGMA[3] / np.sqrt(2))
    return GeneratorSpec(np.zeros((2, 2)), tuple(zip(ops, map(_rate_fn, (g_plus, g_minus, g_3)))))


def integrate_map(gen: GeneratorSpec, t: float, rtol: float = 1e-9, atol: float = 1e-12,
                  method: str = "DOP853", t_eval: Sequence[float] | None = None):
    """Time-ordered solution of ``dT/dt = L(t) T``, ``T(0) = 1``.

    Returns the transfer matrix at ``t``, or an array of them when ``t_eval``
    is given.

    Raises:
        IntegrationError: when the stepper fails (e.g. near a rate divergence).
    """
    n = gen.d * gen.d
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t == 0:
        return np.eye(n) if t_eval is None else np.array([np.eye(n) for _ in t_eval])

    reached = [0.0]

    def rhs(s, y):
        L = gkls_transfer(gen, s)
        if not np.all(np.isfinite(L)):
            raise FloatingPointError(f"non-finite rate at t={s:.17g}")
        reached[0] = max(reached[0], s)
        return (L @ y.reshape(n, n)).reshape(-1)

    with np.errstate(over="raise", divide="raise", invalid="raise", under="ignore"):
        try:
            sol = solve_ivp(rhs, (0.0, t), np.eye(n).reshape(-1), method=method, rtol=rtol,
                            atol=atol, t_eval=t_eval)
        except (FloatingPointError, ZeroDivisionError, OverflowError) as exc:
            raise IntegrationError(f"rate evaluation failed: {exc}", reached[0]) from exc
    if not sol.success or not np.all(np.isfinite(sol.y)):
        last = float(sol.t[-1]) if sol.t.size else 0.0
        raise IntegrationError(f"integration failed: {sol.message}", last)
    if t_eval is None:
        return sol.y[:, -1].reshape(n, n)
    return sol.y.T.reshape(-1, n, n)


# -- canonical form and projector classification -----------------------------

@dataclass(frozen=True)
class SpecialForm:
    """``T = diag(1, R1) @ [[1, 0], [x, diag(lam)]] @ diag(1, R2).T`` with ``R1, R2`` in SO(3)."""

    R1: np.ndarray
    lambdas: np.ndarray
    x: np.ndarray
    R2: np.ndarray

    def canonical(self) -> np.ndarray:
        T = np.zeros((4, 4))
        T[0, 0] = 1.0
        T[1:, 0] = self.x
        T[1:, 1:] = np.diag(self.lambdas)
        return T

    def recompose(self) -> np.ndarray:
        O1, O2 = np.eye(4), np.eye(4)
        O1[1:, 1:], O2[1:, 1:] = self.R1, self.R2
        return O1 @ self.canonical() @ O2.T

    def unitaries(self) -> tuple[np.ndarray, np.ndarray]:
        return rotation_to_unitary(self.R1), rotation_to_unitary(self.R2)


def special_form_decompose(T: np.ndarray) -> SpecialForm:
    """Split a TP qubit map into rotations and the diagonal form (signs absorbed into ``lam``)."""
    T = np.asarray(T, dtype=float)
    if T.shape != (4, 4):
        raise InvalidDimensionError("special form is defined for qubit maps only")
    U, s, Wt = np.linalg.svd(T[1:, 1:])
    W = Wt.T
    for i in range(3):
        if W[np.argmax(np.abs(W[:, i])), i] < 0:
            U[:, i] *= -1
            W[:, i] *= -1
    lam = s.copy()
    if np.linalg.det(U) < 0:
        U[:, 2] *= -1
        lam[2] *= -1
    if np.linalg.det(W) < 0:
        W[:, 2] *= -1
        lam[2] *= -1
    return SpecialForm(U, lam, U.T @ T[1:, 0], W)


def rotation_to_unitary(R: np.ndarray) -> np.ndarray:
    """``U`` in SU(2) with ``U sigma_j U^+ = sum_i R_ij sigma_i``."""
    v = Rotation.from_matrix(R).as_rotvec()
    theta = np.linalg.norm(v)
    if theta < 1e-15:
        return np.eye(2, dtype=complex)
    n = v / theta
    return math.cos(theta / 2) * SIGMA[0] - 1j * math.sin(theta / 2) * sum(
        c * s for c, s in zip(n, SIGMA[1:])
    )


def projector_transfer(rank: int, params) -> np.ndarray:
    """Bloch matrix of the trace-preserving qubit projector ``T T^-`` of the given rank.

    ``params``: rank 3 ``(x3, beta1, beta2)``; rank 2 ``(gamma2, gamma3, x2, x3)``;
    rank 1 ``(x1, x2, x3)``.  Dicts with those keys are accepted too.
    """
    keys = {3: ("x3", "beta1", "beta2"), 2: ("gamma2", "gamma3", "x2", "x3"), 1: ("x1", "x2", "x3")}
    if rank not in keys:
        raise InvalidDimensionError(f"rank must be 1, 2 or 3, got {rank}")
    vals = [float(params[k]) for k in keys[rank]] if isinstance(params, dict) else [float(v) for v in params]
    if len(vals) != len(keys[rank]):
        raise InvalidDimensionError(f"rank {rank} takes parameters {keys[rank]}")
    P = np.zeros((4, 4))
    P[0, 0] = 1.0
    if rank == 3:
        x3, b1, b2 = vals
        P[1, 1] = P[2, 2] = 1.0
        P[1, 3], P[2, 3] = b1, b2
        P[1, 0], P[2, 0], P[3, 0] = -b1 * x3, -b2 * x3, x3
    elif rank == 2:
        g2, g3, x2, x3 = vals
        P[1, 1] = 1.0
        P[1, 2], P[1, 3] = g2, g3
        P[1, 0], P[2, 0], P[3, 0] = -(g2 * x2 + g3 * x3), x2, x3
    else:
        P[1:, 0] = vals
    return P


@dataclass(frozen=True)
class ProjectorClassification:
    rank: int
    T: np.ndarray
    choi_spectrum: np.ndarray
    completely_positive: bool
    idempotency_residual: float
    kraus: tuple = ()

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "T": self.T,
            "choi_spectrum": [float(v) for v in self.choi_spectrum],
            "completely_positive": self.completely_positive,
            "idempotency_residual": self.idempotency_residual,
            "kraus": list(self.kraus),
        }


def classify_qubit_projector(rank: int, params, tol=DEFAULT_TOL) -> ProjectorClassification:
    P = projector_transfer(rank, params)
    spec = choi_spectrum(P)
    cp = bool(spec[0] >= -tol.psd)
    kraus = tuple(choi_to_kraus(transfer_to_choi(P), tol=tol)) if cp else ()
    return ProjectorClassification(rank, P, spec, cp, float(np.linalg.norm(P @ P - P)), kraus)


def qubit_basis_check() -> float:
    """Max deviation between ``sigma/sqrt(2)`` and the internal qubit basis."""
    return float(max(np.max(np.abs(b - s / np.sqrt(2))) for b, s in zip(herm_basis(2), SIGMA)))


# -- JSON model specs ---------------------------------------------------------

def rate_from_json(spec) -> Rate:
    if isinstance(spec, dict) and "rate" in spec:
        integral = spec.get("integral")
        return Rate(
            parse_function(spec["rate"]),
            None if integral is None else parse_function(integral),
            None if spec.get("diverges_at") is None else float(spec["diverges_at"]),
        )
    return Rate(parse_function(spec))


def model_from_json(obj: dict):
    """Build a model from ``{"model": name, ...}``; see README for the schema."""
    kind = obj.get("model")
    if kind == "global_attractor":
        omega = obj.get("omega", [0.0, 0.0, 1.0])
        if isinstance(omega, list) and omega and isinstance(omega[0], str):
            fns = [parse_function(w) for w in omega]
            omega = lambda t, fns=fns: np.array([fn(t) for fn in fns])
        elif isinstance(omega, dict):
            from .io import matrix_from_json

            omega = matrix_from_json(omega)
        return GlobalAttractor(parse_function(obj.get("f", "t")), omega, obj.get("t_star"),
                               int(obj.get("d", 2)))
    if kind == "pauli":
        return PauliChannel(tuple(rate_from_json(r) for r in obj["rates"]))
    if kind == "nondiagonal":
        return NonDiagonal(parse_function(obj.get("f", "t")), obj.get("t_star"))
    if kind == "phase_covariant":
        return PhaseCovariant(rate_from_json(obj["gamma_plus"]), rate_from_json(obj["gamma_minus"]),
                              rate_from_json(obj["gamma_3"]), obj.get("t1"), obj.get("t2"))
    if kind == "sampled":
        from .io import transfer_from_json

        return SampledFamily(np.asarray(obj["times"], float),
                             np.array([transfer_from_json(m) for m in obj["maps"]]))
    if kind == "constant":
        from .io import transfer_from_json

        return ConstantFamily(transfer_from_json(obj["map"]))
    raise ValueError(f"unknown model {kind!r}")


BUILTIN_MODELS = {
    "example1": {"model": "global_attractor", "f": "min(t, 1)", "t_star": 1.0,
                 "omega": ["0.3", "0.2*exp(-t)", "0.5"]},
    "ex2": {"model": "global_attractor", "f": "min(t, 1)", "t_star": 1.0, "omega": [0.3, 0.2, 0.5]},
    "exnon": {"model": "nondiagonal", "f": "min(t, 1)", "t_star": 1.0},
    "pauli": {"model": "pauli", "rates": [
        {"rate": "1/(1-t)", "integral": "-log(1-t)", "diverges_at": 1.0},
        {"rate": "1", "integral": "t"},
        {"rate": "1", "integral": "t"}]},
    "phasecov": {"model": "phase_covariant",
                 "gamma_plus": {"rate": "1", "integral": "t"},
                 "gamma_minus": {"rate": "1", "integral": "t"},
                 "gamma_3": {"rate": "1", "integral": "t"}},
    "phasecov-drop": {"model": "phase_covariant",
                      "gamma_plus": {"rate": "2/(2-t)", "integral": "-2*log(1-t/2)", "diverges_at": 2.0},
                      "gamma_minus": {"rate": "1", "integral": "t"},
                      "gamma_3": {"rate": "1/(1-t)", "integral": "-log(1-t)", "diverges_at": 1.0}},
    "constant": {"model": "constant", "map": {"dim": 2, "t": np.diag([1.0, 0.5, 0.5, 0.5]).tolist()}},
}


def builtin_model(name: str):
    try:
        return model_from_json(BUILTIN_MODELS[name])
    except KeyError:
        raise ValueError(f"unknown built-in model {name!r}; choose from {sorted(BUILTIN_MODELS)}") from None
