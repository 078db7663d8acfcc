"""Generalized inverses of linear maps.

Every generalized inverse ``G`` of ``A = U diag(D, 0) V^dagger`` (``A G A = A``)
has the block form ``G = V [[D^-1, X], [Y, Z]] U^dagger`` with arbitrary
``X, Y, Z``.  The blocks decide the extra Penrose conditions:

==================  ===================  ===========
condition           identity             holds iff
==================  ===================  ===========
reflexive           ``G A G = G``        ``Z = Y D X``
left symmetric      ``(G A)^† = G A``    ``Y = 0``
right symmetric     ``(A G)^† = A G``    ``X = 0``
Moore-Penrose       all of the above     ``X = Y = Z = 0``
==================  ===================  ===========
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOL
from .errors import (
    ImageMismatchError,
    InvalidDimensionError,
    InvalidKernelMapError,
    NotAComplementError,
    NotAProjectorError,
    NotDiagonalizableError,
    NotGeneralizedInverseError,
)
from .operators import SvdFactors, coords, svd

COMPLEMENT_MIN_SV = 1e-8


@dataclass(frozen=True)
class GInverseParams:
    """Free blocks of ``Sigma^-``: ``X`` is r x (m-r), ``Y`` (n-r) x r, ``Z`` (n-r) x (m-r)
    for ``A`` of shape m x n and rank r."""

    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray

    @classmethod
    def zeros(cls, f: SvdFactors, dtype=float) -> "GInverseParams":
        m, n = f.shape
        r = f.rank
        return cls(np.zeros((r, m - r), dtype), np.zeros((n - r, r), dtype), np.zeros((n - r, m - r), dtype))

    @classmethod
    def random(cls, f: SvdFactors, rng: np.random.Generator, complex_: bool = True,
               scale: float = 1.0) -> "GInverseParams":
        m, n = f.shape
        r = f.rank

        def draw(shape):
            a = rng.standard_normal(shape)
            if complex_:
                a = a + 1j * rng.standard_normal(shape)
            return scale * a

        return cls(draw((r, m - r)), draw((n - r, r)), draw((n - r, m - r)))

    def reflexive(self, f: SvdFactors) -> "GInverseParams":
        """Same ``X``, ``Y`` with ``Z = Y D X``."""
        return GInverseParams(self.X, self.Y, (self.Y * f.D) @ self.X)


def sigma_minus(f: SvdFactors, p: GInverseParams | None = None) -> np.ndarray:
    m, n = f.shape
    r = f.rank
    p = GInverseParams.zeros(f) if p is None else p
    if p.X.shape != (r, m - r) or p.Y.shape != (n - r, r) or p.Z.shape != (n - r, m - r):
        raise InvalidDimensionError(
            f"block shapes {p.X.shape}, {p.Y.shape}, {p.Z.shape} inconsistent with rank {r} "
            f"of a {m}x{n} matrix"
        )
    dtype = np.result_type(p.X, p.Y, p.Z, f.U, f.V, float)
    S = np.zeros((n, m), dtype=dtype)
    S[:r, :r] = np.diag(1.0 / f.D)
    S[:r, r:] = p.X
    S[r:, :r] = p.Y
    S[r:, r:] = p.Z
    return S


def build_ginverse(f: SvdFactors, params: GInverseParams | None = None) -> np.ndarray:
    """``A^- = V Sigma^- U^dagger`` for the given free blocks (zeros give Moore-Penrose)."""
    return f.V @ sigma_minus(f, params) @ f.U.conj().T


def moore_penrose(A: np.ndarray, tol_rank: float = DEFAULT_TOL.rank) -> np.ndarray:
    A = np.asarray(A)
    G = build_ginverse(svd(A, tol_rank))
    return G.real.copy() if np.isrealobj(A) else G


def _rel(resid: np.ndarray, ref: np.ndarray) -> float:
    return float(np.linalg.norm(resid) / max(1.0, np.linalg.norm(ref)))


@dataclass(frozen=True)
class GInverseClassification:
    is_ginverse: bool
    reflexive: bool
    left_symmetric: bool
    right_symmetric: bool
    residuals: dict = field(default_factory=dict)

    @property
    def moore_penrose(self) -> bool:
        return self.is_ginverse and self.reflexive and self.left_symmetric and self.right_symmetric

    def to_dict(self) -> dict:
        return {
            "is_ginverse": self.is_ginverse,
            "reflexive": self.reflexive,
            "left_symmetric": self.left_symmetric,
            "right_symmetric": self.right_symmetric,
            "moore_penrose": self.moore_penrose,
            "residuals": dict(self.residuals),
        }


def classify(A: np.ndarray, G: np.ndarray, tol: float = 1e-9) -> GInverseClassification:
    """Decide each Penrose condition by a relative Frobenius residual ``<= tol``."""
    A, G = np.asarray(A), np.asarray(G)
    if G.shape != A.shape[::-1]:
        raise InvalidDimensionError(f"shapes {A.shape} and {G.shape} are not compatible")
    GA, AG = G @ A, A @ G
    res = {
        "AGA=A": _rel(A @ G @ A - A, A),
        "GAG=G": _rel(G @ A @ G - G, G),
        "(GA)^H=GA": _rel(GA.conj().T - GA, GA),
        "(AG)^H=AG": _rel(AG.conj().T - AG, AG),
    }
    return GInverseClassification(
        is_ginverse=res["AGA=A"] <= tol,
        reflexive=res["GAG=G"] <= tol,
        left_symmetric=res["(GA)^H=GA"] <= tol,
        right_symmetric=res["(AG)^H=AG"] <= tol,
        residuals=res,
    )


def projectors_of(A: np.ndarray, G: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """``(A G, G A)``: projectors onto ``Im(A)`` and onto a complement of ``Ker(A)``."""
    if not classify(A, G, tol).is_ginverse:
        raise NotGeneralizedInverseError("A G A != A")
    return A @ G, G @ A


def _same_column_space(A: np.ndarray, B: np.ndarray, tol_rank: float) -> bool:
    ra, rb = svd(A, tol_rank).rank, svd(B, tol_rank).rank
    return ra == rb == svd(np.hstack([A, B]), tol_rank).rank


def ginverse_with_projector(A: np.ndarray, P: np.ndarray, tol_rank: float = DEFAULT_TOL.rank,
                            tol: float = 1e-9) -> np.ndarray:
    """A generalized inverse with ``A A^- = P`` for a projector ``P`` onto ``Im(A)``.

    Uses ``P0 = U^dagger P U = [[1, X0], [0, 0]]`` and
    ``Sigma^- = [[D^-1, D^-1 X0], [0, 0]]``.
    """
    A, P = np.asarray(A), np.asarray(P)
    if _rel(P @ P - P, P) > tol:
        raise NotAProjectorError("P @ P != P")
    if not _same_column_space(A, P, tol_rank):
        raise ImageMismatchError("Im(P) differs from Im(A)")
    f = svd(A, tol_rank)
    r = f.rank
    P0 = f.U.conj().T @ P @ f.U
    X0 = P0[:r, r:]
    m, n = A.shape
    params = GInverseParams(X0 / f.D[:, None], np.zeros((n - r, r)), np.zeros((n - r, m - r)))
    G = build_ginverse(f, params)
    return G.real.copy() if np.isrealobj(A) and np.isrealobj(P) else G


def _as_columns(vectors, n: int) -> np.ndarray:
    """Stack a list of vectors or operators (as basis coordinates) into columns."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2 and vectors.shape[0] == n:
        return vectors
    cols = []
    for v in vectors:
        v = np.asarray(v)
        cols.append(coords(v) if v.ndim == 2 else v)
    if not cols:
        return np.zeros((n, 0))
    out = np.array(cols).T
    if out.shape[0] != n:
        raise InvalidDimensionError(f"basis vectors have length {out.shape[0]}, expected {n}")
    return out


def transversal_ginverse(
    A: np.ndarray,
    complement: Sequence | np.ndarray,
    B: np.ndarray | None = None,
    preimage: Sequence | np.ndarray | None = None,
    tol_rank: float = DEFAULT_TOL.rank,
) -> np.ndarray:
    """Generalized inverse fixed by a complement ``C`` of ``Im(A)``.

    Each ``y = y1 + y0`` with ``y1`` in ``Im(A)`` and ``y0`` in ``C`` is sent to
    ``x1 + B(y0)``, where ``x1`` is the preimage of ``y1`` inside ``preimage``
    (default ``Im(A^dagger)``) and ``B`` maps complement coordinates into
    ``Ker(A)``.  Operators in ``complement``/``preimage`` are converted to
    Hermitian-basis coordinates.
    """
    A = np.asarray(A)
    m, n = A.shape
    f = svd(A, tol_rank)
    r = f.rank
    C = _as_columns(complement, m)
    if C.shape[1] != m - r:
        raise NotAComplementError(f"complement has dimension {C.shape[1]}, need {m - r}")
    M = np.hstack([f.image_basis(), C / np.maximum(np.linalg.norm(C, axis=0), 1e-300)])
    s = np.linalg.svd(M, compute_uv=False)
    if m and s[-1] < COMPLEMENT_MIN_SV:
        raise NotAComplementError(f"complement is not transversal to Im(A) (sigma_min={s[-1]:.2e})")
    Minv = np.linalg.inv(np.hstack([f.image_basis(), C]))

    Vb = f.V[:, :r] if preimage is None else _as_columns(preimage, n)
    AV = A @ Vb
    if Vb.shape[1] != r or svd(AV, tol_rank).rank != r:
        raise NotAComplementError("preimage subspace is not transversal to Ker(A)")
    G = Vb @ np.linalg.pinv(AV) @ f.image_basis() @ Minv[:r]
    if B is not None:
        B = np.asarray(B)
        if B.shape != (n, m - r):
            raise InvalidDimensionError(f"B must have shape {(n, m - r)}, got {B.shape}")
        if np.linalg.norm(A @ B) > 1e-9 * max(1.0, np.linalg.norm(B)):
            raise InvalidKernelMapError("B maps outside Ker(A)")
        G = G + B @ Minv[r:]
    real = np.isrealobj(A) and np.isrealobj(C) and (B is None or np.isrealobj(B))
    return G.real.copy() if real and np.max(np.abs(G.imag), initial=0) < 1e-12 else G


@dataclass(frozen=True)
class SpectralDecomposition:
    """Biorthogonal eigen-system ``A f_a = l_a f_a``, ``A^dagger g_a = conj(l_a) g_a``,
    ``g_a^dagger f_b = delta_ab``.  Columns of ``right``/``left`` hold ``f_a``/``g_a``,
    sorted by decreasing ``|l_a|``."""

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    condition: float

    def projector(self, a: int) -> np.ndarray:
        return np.outer(self.right[:, a], self.left[:, a].conj())

    def reconstruct(self) -> np.ndarray:
        return (self.right * self.eigenvalues) @ self.left.conj().T

    def right_operator(self, a: int) -> np.ndarray:
        from .operators import from_coords

        return from_coords(self.right[:, a])

    def left_operator(self, a: int) -> np.ndarray:
        from .operators import from_coords

        return from_coords(self.left[:, a])


def spectral_decompose(A: np.ndarray, cond_max: float = 1e8) -> SpectralDecomposition:
    """Eigen-decomposition with left vectors taken from the inverse eigenvector matrix.

    Raises:
        NotDiagonalizableError: eigenvector matrix condition number above ``cond_max``.
    """
    A = np.asarray(A)
    w, R = np.linalg.eig(A)
    order = np.lexsort((np.angle(w), -np.abs(w)))
    w, R = w[order], R[:, order]
    cond = float(np.linalg.cond(R))
    if not np.isfinite(cond) or cond > cond_max:
        raise NotDiagonalizableError(
            f"eigenvector matrix condition number {cond:.3e} exceeds {cond_max:.1e}; "
            "use build_ginverse or transversal_ginverse instead"
        )
    L = np.linalg.inv(R)
    return SpectralDecomposition(w, R, L.conj().T, cond)


def spectral_ginverse(S: SpectralDecomposition, zero_tol: float = 1e-9) -> np.ndarray:
    """``sum over |l_a| > zero_tol * max|l| of l_a^-1 P_a`` (reflexive)."""
    lam = S.eigenvalues
    keep = np.abs(lam) > zero_tol * np.max(np.abs(lam), initial=0.0)
    G = (S.right[:, keep] / lam[keep]) @ S.left[:, keep].conj().T
    if np.max(np.abs(G.imag), initial=0.0) <= 1e-10 * max(1.0, np.max(np.abs(G))):
        return G.real.copy()
    return G


@dataclass(frozen=True)
class JordanCheck:
    k: int
    residual_jjtj: int
    residual_jtjjt: int

    @property
    def passed(self) -> bool:
        return self.residual_jjtj == 0 and self.residual_jtjjt == 0

    def to_dict(self) -> dict:
        return {"k": self.k, "residual_JJtJ": self.residual_jjtj,
                "residual_JtJJt": self.residual_jtjjt, "passed": self.passed}


def jordan_block(k: int, lam: int = 0) -> np.ndarray:
    return lam * np.eye(k, dtype=np.int64) + np.eye(k, k=1, dtype=np.int64)


def jordan_block_check(k: int) -> JordanCheck:
    """Exact integer check that ``J_k(0)^T`` is a reflexive generalized inverse of ``J_k(0)``."""
    if not 1 <= k <= 16:
        raise InvalidDimensionError("k must lie in 1..16")
    J = jordan_block(k)
    Jt = J.T
    r1 = int(np.abs(J @ Jt @ J - J).max())
    r2 = int(np.abs(Jt @ J @ Jt - Jt).max())
    return JordanCheck(k, r1, r2)
