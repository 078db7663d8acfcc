"""Propagators ``V_{t,s} = Lambda_t Lambda_s^-`` and their certification.

Trace-preserving inverses of a TP transfer matrix ``[[1, 0], [x, Delta]]``
are exactly the matrices ``[[1, 0], [y, Gamma]]`` with ``Delta Gamma Delta =
Delta`` and ``Delta (y + Gamma x) = 0``.  That set is affine, so the induced
propagators ``V(theta) = T_t G(theta)`` and their Choi matrices are affine in
the free parameters.  The smallest Choi eigenvalue is then concave in
``theta``, which is what :func:`cptp_search` relies on.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .analysis import MapCertificate, certify, kernel_inclusion
from .config import DEFAULT_SEED, DEFAULT_TOL, Tolerances
from .errors import (
    FamilyTooLargeError,
    NotDivisibleError,
    NotTracePreservingError,
    OrderingError,
)
from .ginverse import (
    GInverseParams,
    build_ginverse,
    moore_penrose,
    spectral_decompose,
    spectral_ginverse,
    transversal_ginverse,
)
from .operators import is_trace_preserving, svd, transfer_to_choi

MAX_SEARCH_DIM = 8
UNIQUE_RADIUS = 1e-6


@dataclass
class PropagatorReport:
    V: np.ndarray
    s: float | None
    t: float | None
    inverse_choice: dict
    certificate: MapCertificate
    propagator_residual: float
    image_match: bool
    composition_residual: float | None = None
    uniqueness: str = "not-searched"
    search: "CPTPSearchResult | None" = None

    def to_dict(self) -> dict:
        return {
            "V": self.V,
            "s": self.s,
            "t": self.t,
            "inverse_choice": self.inverse_choice,
            "certificate": self.certificate,
            "propagator_residual": self.propagator_residual,
            "image_match": self.image_match,
            "composition_residual": self.composition_residual,
            "uniqueness": self.uniqueness,
            "search": self.search,
        }


def _require_divisible(Ts, Tt, tol: Tolerances):
    ok, resid = kernel_inclusion(Ts, Tt, tol.rank)
    if not ok:
        raise NotDivisibleError(f"Ker(T_s) is not contained in Ker(T_t) (residual {resid:.3e})")


def image_condition_check(V: np.ndarray, Tt: np.ndarray, tol_rank: float = DEFAULT_TOL.rank) -> bool:
    """``Im(V) == Im(T_t)`` as column spaces."""
    rv, rt = svd(V, tol_rank).rank, svd(Tt, tol_rank).rank
    return rv == rt == svd(np.hstack([V, Tt]), tol_rank).rank


def propagate(Ts: np.ndarray, Tt: np.ndarray, Gs: np.ndarray, s: float | None = None,
              t: float | None = None, inverse_choice: dict | None = None,
              tol: Tolerances = DEFAULT_TOL) -> PropagatorReport:
    """``V = T_t G_s`` with certificate; raises NotDivisibleError if kernels are not nested."""
    Ts, Tt = np.asarray(Ts, dtype=float), np.asarray(Tt, dtype=float)
    _require_divisible(Ts, Tt, tol)
    V = Tt @ np.asarray(Gs)
    if np.iscomplexobj(V):
        V = V.real
    return PropagatorReport(
        V=V,
        s=s,
        t=t,
        inverse_choice=dict(inverse_choice or {}),
        certificate=certify(V, tol),
        propagator_residual=float(np.linalg.norm(V @ Ts - Tt)),
        image_match=image_condition_check(V, Tt, tol.rank),
    )


@dataclass(frozen=True)
class AffineFamily:
    """``M(theta) = base + sum_i theta_i directions[i]``."""

    base: np.ndarray
    directions: np.ndarray
    names: tuple

    @property
    def dim(self) -> int:
        return len(self.names)

    def __call__(self, theta: Sequence[float] = ()) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size == 0:
            return self.base.copy()
        return self.base + np.tensordot(theta, self.directions, axes=1)

    def at(self, **named: float) -> np.ndarray:
        theta = np.zeros(self.dim)
        for k, v in named.items():
            theta[self.names.index(k)] = v
        return self(theta)


def _param_name(i: int, j: int, m: int) -> str:
    return f"a{i}{j}" if m < 10 else f"a{i}_{j}"


def _greedy_independent(cols: np.ndarray, order: Sequence[int], tol: float) -> list[int]:
    """Indices (in ``order``) of columns that enlarge the span, by Gram-Schmidt."""
    scale = max(1.0, float(np.max(np.linalg.norm(cols, axis=0), initial=0.0)))
    Q = np.zeros((cols.shape[0], 0))
    picked = []
    for k in order:
        v = cols[:, k]
        v = v - Q @ (Q.T @ v)
        v = v - Q @ (Q.T @ v)
        nv = np.linalg.norm(v)
        if nv > tol * scale:
            Q = np.hstack([Q, (v / nv)[:, None]])
            picked.append(k)
    return picked


@dataclass(frozen=True)
class TPInverseFamily:
    """All trace-preserving generalized inverses of a TP transfer matrix.

    ``family(theta)`` instantiates the affine parameterization whose free
    parameters are matrix entries: ``a{i}0`` is ``y_i`` and ``a{i}{j}`` is
    ``Gamma_ij`` (Bloch indices from 1).  :meth:`from_blocks` instantiates the
    equivalent SVD-block parameterization of ``Gamma``.
    """

    Ts: np.ndarray
    delta_pinv: np.ndarray
    kernel_basis: np.ndarray
    affine: AffineFamily
    fixed: dict = field(default_factory=dict)

    @property
    def names(self) -> tuple:
        return self.affine.names

    @property
    def dim(self) -> int:
        return self.affine.dim

    def __call__(self, theta: Sequence[float] = ()) -> np.ndarray:
        return self.affine(theta)

    def at(self, **named: float) -> np.ndarray:
        return self.affine.at(**named)

    def from_blocks(self, params: GInverseParams | None = None, c: np.ndarray | None = None) -> np.ndarray:
        """``Gamma = Delta^-(X, Y, Z)`` and ``y = -Gamma x + N c``."""
        x, delta = self.Ts[1:, 0], self.Ts[1:, 1:]
        f = svd(delta)
        gamma = build_ginverse(f, params).real
        N = self.kernel_basis
        c = np.zeros(N.shape[1]) if c is None else np.asarray(c)
        y = -gamma @ x + N @ c
        G = np.zeros_like(self.Ts)
        G[0, 0] = 1.0
        G[1:, 0] = y
        G[1:, 1:] = gamma
        return G


def tp_inverse_family(Ts: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> TPInverseFamily:
    """Affine family of TP generalized inverses of a square TP transfer matrix."""
    Ts = np.asarray(Ts, dtype=float)
    if not is_trace_preserving(Ts, 1e-9):
        raise NotTracePreservingError("first row of T_s is not (1, 0, ..., 0)")
    x, delta = Ts[1:, 0], Ts[1:, 1:]
    m = delta.shape[0]
    # unknowns z = [y (m), vec(Gamma) row-major (m*m)]
    K = np.zeros((m * m + m, m + m * m))
    K[: m * m, m:] = np.kron(delta, delta.T)
    K[m * m:, :m] = delta
    K[m * m:, m:] = np.kron(delta, x[None, :])
    rhs = np.concatenate([delta.reshape(-1), np.zeros(m)])

    names = [_param_name(i + 1, 0, m) for i in range(m)]
    names += [_param_name(i + 1, j + 1, m) for i in range(m) for j in range(m)]
    # y entries are preferred as dependent variables, matching the usual display
    pivots = _greedy_independent(K, range(K.shape[1]), 1e-10)
    free = [k for k in range(K.shape[1]) if k not in pivots]
    KP = K[:, pivots]

    def solve(b):
        sol, *_ = np.linalg.lstsq(KP, b, rcond=None)
        return sol

    z0 = np.zeros(K.shape[1])
    z0[pivots] = solve(rhs)
    if np.linalg.norm(K @ z0 - rhs) > 1e-8 * max(1.0, np.linalg.norm(rhs)):
        raise NotTracePreservingError("no trace-preserving generalized inverse found")

    def to_matrix(z, offset):
        G = np.zeros_like(Ts)
        G[0, 0] = offset
        G[1:, 0] = z[:m]
        G[1:, 1:] = z[m:].reshape(m, m)
        return G

    dirs = []
    for k in free:
        z = np.zeros(K.shape[1])
        z[k] = 1.0
        z[pivots] = -solve(K[:, k])
        dirs.append(to_matrix(z, 0.0))
    base = to_matrix(z0, 1.0)
    directions = np.array(dirs) if dirs else np.zeros((0,) + Ts.shape)
    fixed = {names[k]: float(z0[k]) for k in pivots
             if all(abs(d[1:, :].reshape(-1)[_flat_index(k, m)]) < 1e-14 for d in dirs)}
    f = svd(delta, tol.rank)
    return TPInverseFamily(
        Ts=Ts,
        delta_pinv=moore_penrose(delta, tol.rank),
        kernel_basis=f.kernel_basis().real,
        affine=AffineFamily(base, directions, tuple(names[k] for k in free)),
        fixed=fixed,
    )


def _flat_index(k: int, m: int) -> int:
    # position of unknown k inside G[1:, :].reshape(-1)
    if k < m:
        return k * (m + 1)
    i, j = divmod(k - m, m)
    return i * (m + 1) + j + 1


def propagator_family(Tt: np.ndarray, fam: TPInverseFamily, tol: Tolerances = DEFAULT_TOL) -> AffineFamily:
    """``V(theta) = T_t G(theta)`` reduced to the parameters that still act on ``V``."""
    Tt = np.asarray(Tt, dtype=float)
    _require_divisible(fam.Ts, Tt, tol)
    base = Tt @ fam.affine.base
    if fam.dim == 0:
        return AffineFamily(base, np.zeros((0,) + base.shape), ())
    D = np.einsum("ij,pjk->pik", Tt, fam.affine.directions)
    keep = _greedy_independent(D.reshape(fam.dim, -1).T, range(fam.dim), 1e-10)
    return AffineFamily(base, D[keep], tuple(fam.names[k] for k in keep))


@dataclass
class CPTPSearchResult:
    verdict: str
    theta: np.ndarray | None
    best_min_eigenvalue: float
    names: tuple
    witnesses: list = field(default_factory=list)
    diameters: dict = field(default_factory=dict)
    evaluations: int = 0

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "theta": None if self.theta is None else [float(v) for v in self.theta],
            "names": list(self.names),
            "best_min_eigenvalue": self.best_min_eigenvalue,
            "witnesses": self.witnesses,
            "diameters": {f"{k:.0e}": v for k, v in self.diameters.items()},
            "evaluations": self.evaluations,
        }


def _affine_choi(fam: AffineFamily):
    C0 = transfer_to_choi(fam.base)
    Cs = np.array([transfer_to_choi(D) for D in fam.directions])
    return C0, Cs


def cptp_search(fam: AffineFamily, grid_points: int = 11, bound: float = 5.0,
                seed: int = DEFAULT_SEED, tol: Tolerances = DEFAULT_TOL) -> CPTPSearchResult:
    """Locate the CPTP members of an affine propagator family.

    Maximizes the smallest Choi eigenvalue (concave in ``theta``) from a grid
    (random seeds above three parameters), then measures the extent of the
    near-feasible set ``{lambda_min >= -eps}`` around the optimum for
    shrinking ``eps``.  A set that shrinks to within ``1e-6`` (or shrinks at a
    rate consistent with a single point) is reported ``unique-CPTP``.
    """
    p = fam.dim
    if p > MAX_SEARCH_DIM:
        raise FamilyTooLargeError(f"{p} free parameters exceed the limit of {MAX_SEARCH_DIM}")
    C0, Cs = _affine_choi(fam)
    count = [0]

    def lam(theta):
        count[0] += 1
        C = C0 + np.tensordot(theta, Cs, axes=1) if p else C0
        return float(np.linalg.eigvalsh((C + C.conj().T) / 2)[0])

    rng = np.random.default_rng(seed)
    if p == 0:
        theta = np.zeros(0)
    else:
        if p <= 3:
            axis = np.linspace(-bound, bound, grid_points)
            seeds = np.array(list(itertools.product(axis, repeat=p)))
        else:
            seeds = rng.uniform(-bound, bound, size=(4096, p))
        vals = np.array([lam(s) for s in seeds])
        theta = seeds[int(np.argmax(vals))]
        for _ in range(3):
            res = minimize(lambda th: -lam(th), theta, method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-17, "maxiter": 4000 * p,
                                    "maxfev": 8000 * p})
            if np.allclose(res.x, theta, atol=1e-13, rtol=0):
                theta = res.x
                break
            theta = res.x
    best = lam(theta)
    result = CPTPSearchResult("none-CPTP", theta, best, fam.names)
    if best < -tol.psd:
        result.evaluations = count[0]
        return result

    dirs = _probe_directions(p, rng)
    diam = {}
    for eps in (1e-10, 1e-12, 1e-14):
        diam[eps], ends = _diameter(lam, theta, dirs, eps)
        if eps == 1e-14:
            witness_ends = ends
    result.diameters = diam
    d_min = diam[1e-14]
    collapsing = d_min <= UNIQUE_RADIUS or (d_min < 1e-4 and diam[1e-10] >= 10 * d_min)
    if p == 0 or collapsing:
        result.verdict = "unique-CPTP"
        result.witnesses = [{"theta": theta, "V": fam(theta)}]
    else:
        result.verdict = "multi-CPTP"
        result.witnesses = [{"theta": e, "V": fam(e), "min_choi_eigenvalue": lam(e)} for e in witness_ends]
    result.evaluations = count[0]
    return result


def _probe_directions(p: int, rng: np.random.Generator) -> np.ndarray:
    if p == 0:
        return np.zeros((0, 0))
    extra = rng.standard_normal((2 * p + 4, p))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    return np.vstack([np.eye(p), extra])


def _reach(lam, theta, u, eps, cap=1e3) -> float:
    """Largest ``s`` with ``lam(theta + s u) >= -eps`` (the feasible set is convex)."""
    if lam(theta) < -eps:
        return 0.0
    lo, hi = 0.0, 1e-12
    while hi < cap and lam(theta + hi * u) >= -eps:
        lo, hi = hi, hi * 4
    if hi >= cap:
        return cap
    for _ in range(60):
        mid = 0.5 * (lo + hi) if lo > 0 else hi / 4
        if lam(theta + mid * u) >= -eps:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-3 * hi:
            break
    return lo


def _diameter(lam, theta, dirs, eps):
    best, ends = 0.0, [theta, theta]
    for u in dirs:
        a, b = _reach(lam, theta, u, eps), _reach(lam, theta, -u, eps)
        if a + b > best:
            best, ends = a + b, [theta + a * u, theta - b * u]
    return best, ends


# -- consistent inverse rules -------------------------------------------------

def _rule_spectral(T, tol):
    return spectral_ginverse(spectral_decompose(T))


def _rule_mp(T, tol):
    return moore_penrose(T, tol.rank)


def _rule_kernel_complement(T, tol):
    f = svd(T, tol.rank)
    return transversal_ginverse(T, f.kernel_basis(), preimage=f.image_basis(), tol_rank=tol.rank)


def _rule_dual_complement(T, tol):
    f = svd(T, tol.rank)
    return transversal_ginverse(T, f.cokernel_basis(), preimage=f.image_basis(), tol_rank=tol.rank)


def _rule_tp(T, tol):
    return tp_inverse_family(T, tol)()


RULES: dict[str, Callable] = {
    "spectral": _rule_spectral,
    "mp": _rule_mp,
    "kernel-complement": _rule_kernel_complement,
    "dual-complement": _rule_dual_complement,
    "tp": _rule_tp,
}


def inverse_by_rule(T: np.ndarray, rule: str | Callable, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Generalized inverse chosen by a named rule.

    ``kernel-complement`` takes ``C = Ker(T)`` and preimages in ``Im(T)``;
    ``dual-complement`` takes ``C = Ker(T^dagger)`` and preimages in ``Im(T)``;
    ``tp`` is the base point of :func:`tp_inverse_family`.
    """
    if callable(rule):
        return rule(T)
    try:
        return RULES[rule](np.asarray(T, dtype=float), tol)
    except KeyError:
        raise ValueError(f"unknown inverse rule {rule!r}; choose from {sorted(RULES)}") from None


def propagator_by_rule(family: Callable[[float], np.ndarray], s: float, t: float,
                       rule: str | Callable, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    Ts, Tt = family(s), family(t)
    _require_divisible(Ts, Tt, tol)
    V = Tt @ inverse_by_rule(Ts, rule, tol)
    return V.real if np.iscomplexobj(V) else V


def composition_check(family: Callable[[float], np.ndarray], rule: str | Callable,
                      s: float, u: float, t: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """``||V_{t,u} V_{u,s} - V_{t,s}||_F`` for one consistent inverse rule."""
    if not s <= u <= t:
        raise OrderingError(f"need s <= u <= t, got {s}, {u}, {t}")
    Vtu = propagator_by_rule(family, u, t, rule, tol)
    Vus = propagator_by_rule(family, s, u, rule, tol)
    Vts = propagator_by_rule(family, s, t, rule, tol)
    return float(np.linalg.norm(Vtu @ Vus - Vts))
