"""Dense linear algebra and map representations.

A linear map ``Phi: L(C^d_in) -> L(C^d_out)`` is stored as its real transfer
matrix ``T[a, b] = Tr(tau_a Phi(tau_b))`` in orthonormal Hermitian bases with
``tau_0 = 1/sqrt(d)``.  For qubits ``tau = sigma / sqrt(2)``, so ``T`` coincides
with the Bloch convention ``T[a, b] = Tr(sigma_a Phi(sigma_b)) / 2`` and no
conversion layer is needed anywhere in the package.

The Choi matrix is ``C = sum_ij E_ij (x) Phi(E_ij)``; ``Tr C = d_in`` for
trace-preserving maps.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .config import DEFAULT_TOL
from .errors import (
    HermiticityViolationError,
    InvalidDimensionError,
    NotCompletelyPositiveError,
    NotHermiticityPreservingError,
)

SIGMA = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=16)
def herm_basis(d: int) -> np.ndarray:
    """Orthonormal Hermitian basis of L(C^d), shape ``(d*d, d, d)``.

    Order: normalized identity, then symmetric, antisymmetric and diagonal
    generalized Gell-Mann matrices.  For ``d = 2`` this is ``sigma / sqrt(2)``.
    """
    if int(d) != d or d < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {d}")
    d = int(d)
    elems = [np.eye(d, dtype=complex) / np.sqrt(d)]
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    for j, k in pairs:
        m = np.zeros((d, d), dtype=complex)
        m[j, k] = m[k, j] = 1 / np.sqrt(2)
        elems.append(m)
    for j, k in pairs:
        m = np.zeros((d, d), dtype=complex)
        m[j, k] = -1j / np.sqrt(2)
        m[k, j] = 1j / np.sqrt(2)
        elems.append(m)
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[np.arange(l), np.arange(l)] = 1.0
        m[l, l] = -l
        elems.append(m / np.sqrt(l * (l + 1)))
    return _frozen(np.array(elems))


@lru_cache(maxsize=16)
def _vec_basis(d: int) -> np.ndarray:
    # columns are row-major vec(tau_a); B^dagger vec(X) gives the coordinates of X
    return _frozen(herm_basis(d).reshape(d * d, d * d).T.copy())


def _isqrt(n: int) -> int:
    r = int(round(np.sqrt(n)))
    if r * r != n:
        raise InvalidDimensionError(f"{n} is not a perfect square")
    return r


def map_dims(T: np.ndarray) -> tuple[int, int]:
    """``(d_in, d_out)`` of a transfer matrix."""
    T = np.asarray(T)
    if T.ndim != 2:
        raise InvalidDimensionError("transfer matrix must be two-dimensional")
    return _isqrt(T.shape[1]), _isqrt(T.shape[0])


def coords(X: np.ndarray) -> np.ndarray:
    """Coordinates ``Tr(tau_a X)`` of an operator (complex in general)."""
    X = np.asarray(X)
    d = X.shape[0]
    return _vec_basis(d).conj().T @ X.reshape(-1)


def from_coords(c: np.ndarray, d: int | None = None) -> np.ndarray:
    c = np.asarray(c)
    d = _isqrt(c.shape[0]) if d is None else d
    return (_vec_basis(d) @ c).reshape(d, d)


def superop(T: np.ndarray) -> np.ndarray:
    """Row-major natural representation ``S`` with ``vec(Phi(X)) = S vec(X)``."""
    d_in, d_out = map_dims(T)
    return _vec_basis(d_out) @ T @ _vec_basis(d_in).conj().T


def superop_to_transfer(S: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    d_in, d_out = _isqrt(S.shape[1]), _isqrt(S.shape[0])
    T = _vec_basis(d_out).conj().T @ S @ _vec_basis(d_in)
    return _realify(T, tol)


def _realify(T: np.ndarray, tol: float) -> np.ndarray:
    resid = np.max(np.abs(T.imag), initial=0.0)
    if resid > tol * max(1.0, np.max(np.abs(T), initial=0.0)):
        raise NotHermiticityPreservingError(
            f"imaginary residue {resid:.3e} exceeds tolerance {tol:.1e}"
        )
    return np.ascontiguousarray(T.real)


def action_to_transfer(
    apply: Callable[[np.ndarray], np.ndarray],
    d: int,
    d_out: int | None = None,
    tol: float = 1e-10,
) -> np.ndarray:
    """Transfer matrix ``T[a, b] = Tr(tau_a apply(tau_b))`` of a linear map."""
    d_out = d if d_out is None else d_out
    out_basis = herm_basis(d_out)
    T = np.empty((d_out * d_out, d * d), dtype=complex)
    for b, tau in enumerate(herm_basis(d)):
        Y = np.asarray(apply(tau.copy()), dtype=complex)
        if Y.shape != (d_out, d_out):
            raise InvalidDimensionError(f"map returned shape {Y.shape}, expected {(d_out, d_out)}")
        T[:, b] = np.einsum("aij,ji->a", out_basis, Y)
    return _realify(T, tol)


def apply_map(T: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Evaluate the map with transfer matrix ``T`` on an operator ``X``."""
    d_in, d_out = map_dims(T)
    return (superop(T) @ np.asarray(X, dtype=complex).reshape(-1)).reshape(d_out, d_out)


def apply_map_ancilla(T: np.ndarray, X: np.ndarray, k: int) -> np.ndarray:
    """Evaluate ``(id_k (x) Phi)(X)`` for ``X`` on ``C^k (x) C^d_in``."""
    d_in, d_out = map_dims(T)
    Xr = np.asarray(X, dtype=complex).reshape(k, d_in, k, d_in)
    S = superop(T).reshape(d_out, d_out, d_in, d_in)
    out = np.einsum("klij,aibj->akbl", S, Xr)
    return out.reshape(k * d_out, k * d_out)


def transfer_to_choi(T: np.ndarray) -> np.ndarray:
    """Choi matrix ``sum_ij E_ij (x) Phi(E_ij)`` (no normalization prefactor)."""
    d_in, d_out = map_dims(T)
    S = superop(T).reshape(d_out, d_out, d_in, d_in)
    return S.transpose(2, 0, 3, 1).reshape(d_in * d_out, d_in * d_out)


def choi_to_transfer(C: np.ndarray, d_in: int | None = None, tol: float = 1e-10) -> np.ndarray:
    C = np.asarray(C, dtype=complex)
    n = C.shape[0]
    d_in = _isqrt(n) if d_in is None else d_in
    d_out = n // d_in
    S = C.reshape(d_in, d_out, d_in, d_out).transpose(1, 3, 0, 2).reshape(d_out**2, d_in**2)
    return superop_to_transfer(S, tol)


def choi_to_kraus(C: np.ndarray, d_in: int | None = None, tol=DEFAULT_TOL) -> list[np.ndarray]:
    """Kraus operators from the eigendecomposition of a PSD Choi matrix.

    Raises:
        NotCompletelyPositiveError: if an eigenvalue is below ``-tol.psd``.
    """
    C = np.asarray(C, dtype=complex)
    n = C.shape[0]
    d_in = _isqrt(n) if d_in is None else d_in
    d_out = n // d_in
    w, v = eig_herm(C, tol)
    if w[0] < -tol.psd:
        raise NotCompletelyPositiveError(f"Choi matrix has eigenvalue {w[0]:.3e}")
    cut = tol.rank * max(w[-1], 0.0)
    return [
        np.sqrt(lam) * v[:, m].reshape(d_in, d_out).T
        for m, lam in sorted(enumerate(w), key=lambda p: -p[1])
        if lam > cut
    ]


def kraus_to_transfer(kraus: Sequence[np.ndarray]) -> np.ndarray:
    K0 = np.asarray(kraus[0])
    d_out, d_in = K0.shape
    return action_to_transfer(
        lambda X: sum(K @ X @ K.conj().T for K in kraus), d_in, d_out
    )


def trace_norm(M: np.ndarray) -> float:
    """Sum of singular values."""
    return float(np.linalg.svd(np.asarray(M), compute_uv=False).sum())


def is_trace_preserving(T: np.ndarray, tol: float = 1e-10) -> bool:
    """First row equals ``(1, 0, ..., 0)`` up to the ``sqrt(d_out/d_in)`` factor."""
    d_in, d_out = map_dims(T)
    target = np.zeros(T.shape[1])
    target[0] = np.sqrt(d_in / d_out)
    return bool(np.max(np.abs(T[0] - target)) <= tol)


@dataclass(frozen=True)
class SvdFactors:
    """``A = U[:, :r] @ diag(D) @ V[:, :r]^dagger`` with full unitary ``U``, ``V``."""

    U: np.ndarray
    D: np.ndarray
    V: np.ndarray
    singular_values: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.D)

    @property
    def shape(self) -> tuple[int, int]:
        return self.U.shape[0], self.V.shape[0]

    def kernel_basis(self) -> np.ndarray:
        """Orthonormal kernel basis as columns."""
        return self.V[:, self.rank:]

    def image_basis(self) -> np.ndarray:
        return self.U[:, : self.rank]

    def cokernel_basis(self) -> np.ndarray:
        """Orthonormal basis of ``Im(A)^perp = Ker(A^dagger)``."""
        return self.U[:, self.rank:]

    def reconstruct(self) -> np.ndarray:
        r = self.rank
        return (self.U[:, :r] * self.D) @ self.V[:, :r].conj().T


def svd(A: np.ndarray, tol_rank: float = DEFAULT_TOL.rank) -> SvdFactors:
    """Full SVD with numerical rank ``#{s > tol_rank * s_max}``."""
    A = np.asarray(A)
    U, s, Vh = np.linalg.svd(A, full_matrices=True)
    r = int(np.sum(s > tol_rank * s[0])) if s.size and s[0] > 0 else 0
    V = Vh.conj().T
    return SvdFactors(U, s[:r].copy(), V, s)


def rank(A: np.ndarray, tol_rank: float = DEFAULT_TOL.rank) -> int:
    return svd(A, tol_rank).rank


def kernel_basis(A: np.ndarray, tol_rank: float = DEFAULT_TOL.rank) -> np.ndarray:
    return svd(A, tol_rank).kernel_basis()


def image_basis(A: np.ndarray, tol_rank: float = DEFAULT_TOL.rank) -> np.ndarray:
    return svd(A, tol_rank).image_basis()


def eig_herm(M: np.ndarray, tol=DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Ascending real spectrum and orthonormal eigenvectors of a Hermitian matrix."""
    M = np.asarray(M)
    dev = np.max(np.abs(M - M.conj().T), initial=0.0)
    if dev > tol.herm * max(1.0, np.max(np.abs(M), initial=0.0)):
        raise HermiticityViolationError(f"max |M - M^dagger| = {dev:.3e}")
    return np.linalg.eigh((M + M.conj().T) / 2)


def choi_spectrum(T: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(_herm_part(transfer_to_choi(T)))


def min_choi_eigenvalue(T: np.ndarray) -> float:
    return float(choi_spectrum(T)[0])


def _herm_part(M: np.ndarray) -> np.ndarray:
    return (M + M.conj().T) / 2


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a Ginibre ensemble (Hilbert-Schmidt measure by default)."""
    k = d if rank is None else rank
    G = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (G + G.conj().T) / 2


def random_channel(d: int, rng: np.random.Generator, kraus_rank: int | None = None,
                   d_out: int | None = None) -> np.ndarray:
    """Transfer matrix of a random CPTP map (Stinespring isometry from Ginibre QR)."""
    d_out = d if d_out is None else d_out
    k = d * d_out if kraus_rank is None else kraus_rank
    G = rng.standard_normal((k * d_out, d)) + 1j * rng.standard_normal((k * d_out, d))
    Q, _ = np.linalg.qr(G)
    kraus = [Q[i * d_out:(i + 1) * d_out, :] for i in range(k)]
    return kraus_to_transfer(kraus)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))
