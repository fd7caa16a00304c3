"""Elementary symmetric functions, the Gårding cones Γ_k and Newton tensors.

All functions broadcast over leading axes: a spectrum has shape ``(..., n)``
and a matrix has shape ``(..., n, n)``, so whole grids of nodes are handled
in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError

SYMMETRY_RTOL = 1e-12
DEFAULT_CONE_TOL = 1e-10


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a Schouten-type tensor at one point."""

    values: tuple

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 1:
            raise DomainError("a spectrum is a flat list of eigenvalues")
        if not np.all(np.isfinite(vals)):
            raise DomainError("spectrum has non-finite entries")
        object.__setattr__(self, "values", tuple(float(v) for v in vals))

    @property
    def n(self) -> int:
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def elementary_symmetric(lam) -> np.ndarray:
    """Return ``e[..., j] = σ_j(λ)`` for ``j = 0..n`` (``σ_0 = 1``).

    The values are the coefficients of ``prod_i (1 + λ_i x)``, built one
    eigenvalue at a time.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    e = np.zeros(lam.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        e[..., 1:i + 2] = e[..., 1:i + 2] + lam[..., i, None] * e[..., 0:i + 1]
    return e


def _check_k(k, n, lo=1):
    if not (isinstance(k, (int, np.integer)) and lo <= k <= n):
        raise DomainError(f"k must be an integer in [{lo}, {n}], got {k!r}", k=k, n=n)


def sigma(lam, k: int):
    """σ_k(λ), the sum over k-subsets of products of eigenvalues."""
    lam = np.asarray(lam, dtype=float)
    _check_k(k, lam.shape[-1])
    return elementary_symmetric(lam)[..., k]


def in_gamma_k(lam, k: int, tol: float = DEFAULT_CONE_TOL):
    """True iff σ_j(λ) > tol for j = 1..k (the open cone Γ_k)."""
    if tol < 0:
        raise PreconditionError("tol must be non-negative")
    lam = np.asarray(lam, dtype=float)
    _check_k(k, lam.shape[-1])
    e = elementary_symmetric(lam)
    return np.all(e[..., 1:k + 1] > tol, axis=-1)


def cone_margin(lam, k: int) -> np.ndarray:
    """min_j sign(σ_j)|σ_j|^{1/j} over j = 1..k; positive iff λ ∈ Γ_k."""
    lam = np.asarray(lam, dtype=float)
    _check_k(k, lam.shape[-1])
    e = elementary_symmetric(lam)[..., 1:k + 1]
    j = np.arange(1, k + 1)
    return np.min(np.sign(e) * np.abs(e) ** (1.0 / j), axis=-1)


def check_symmetric(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise DomainError("expected square matrices", shape=A.shape)
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix has non-finite entries")
    scale = np.maximum(1.0, np.max(np.abs(A), axis=(-2, -1), keepdims=True))
    if np.any(np.abs(A - np.swapaxes(A, -1, -2)) > SYMMETRY_RTOL * scale):
        raise DomainError("matrix is not symmetric")
    return A


def eigenvalues(A) -> np.ndarray:
    """Ascending eigenvalues of symmetric matrices (LAPACK ``syevd``)."""
    A = check_symmetric(A)
    return np.linalg.eigvalsh(0.5 * (A + np.swapaxes(A, -1, -2)))


def sigma_of_matrix(A, k: int):
    return sigma(eigenvalues(A), k)


def newton_tensors(F, upto: int) -> list:
    """[T_0, ..., T_upto] from T_{ℓ+1} = -T_ℓ F + σ_{ℓ+1}(F) I."""
    F = check_symmetric(F)
    n = F.shape[-1]
    _check_k(upto, n, lo=0)
    e = elementary_symmetric(eigenvalues(F))
    eye = np.broadcast_to(np.eye(n), F.shape)
    out = [eye.copy()]
    for ell in range(upto):
        T = -out[-1] @ F + e[..., ell + 1, None, None] * eye
        out.append(0.5 * (T + np.swapaxes(T, -1, -2)))
    return out


def newton_tensor(F, ell: int) -> np.ndarray:
    """The ℓ-th Newton tensor T_ℓ(F); trace(T_ℓ) = (n-ℓ)σ_ℓ(F)."""
    return newton_tensors(F, ell)[ell]


def dsigma_dA(A, k: int) -> np.ndarray:
    """Gradient of A ↦ σ_k(λ(A)), which equals T_{k-1}(A)."""
    A = np.asarray(A, dtype=float)
    _check_k(k, A.shape[-1])
    return newton_tensor(A, k - 1)
