"""Dense kernels the solver's closed-form updates are built on.

Everything is float64. Matrices are plain 2-D numpy arrays in row-major
order; vectors are 1-D arrays. The one nontrivial piece is ``ridge_solve``,
which applies (M^T M + rho I)^{-1} using a cached SVD so that per-iteration
work touches only a diagonal system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalFailureError

# Singular values below RANK_TOL * s_max count as zero in diagnostics.
RANK_TOL = 1e-12


def as_matrix(a) -> np.ndarray:
    """Validate and convert ``a`` to a finite float64 2-D array."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise InvalidInputError(f"expected a 2-D array, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix has non-finite entries")
    return m


def as_vector(a) -> np.ndarray:
    """Validate and convert ``a`` to a finite float64 1-D array."""
    v = np.asarray(a, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidInputError(f"expected a 1-D array, got ndim={v.ndim}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("vector has non-finite entries")
    return v


@dataclass(frozen=True)
class SvdFactorization:
    """Thin SVD ``M = U diag(s) V^T`` of an m-by-n matrix.

    U is m-by-r and V is n-by-r with orthonormal columns, r = min(m, n),
    and s is nonincreasing and nonnegative.
    """

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray

    @property
    def shape(self):
        return (self.U.shape[0], self.V.shape[0])

    @property
    def rank(self) -> int:
        if self.s.size == 0 or self.s[0] == 0.0:
            return 0
        return int(np.count_nonzero(self.s > RANK_TOL * self.s[0]))

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.s) @ self.V.T

    def spectral_norm(self) -> float:
        return float(self.s[0]) if self.s.size else 0.0


def svd(M) -> SvdFactorization:
    """Thin SVD of a dense matrix.

    Raises InvalidInputError on non-finite input and NumericalFailureError
    if the underlying iteration does not converge.
    """
    M = as_matrix(M)
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"SVD did not converge: {exc}") from exc
    return SvdFactorization(U=U, s=s, V=Vt.T)


def ridge_solve(f: SvdFactorization, rho: float, b) -> np.ndarray:
    """Solve (M^T M + rho I) x = b given the SVD of M.

    Uses x = V diag(1/(s^2+rho)) V^T b + (b - V V^T b)/rho, so the only
    inversion is of a diagonal system. The complement term handles the
    wide case (m < n) where V does not span R^n.
    """
    if rho <= 0:
        raise InvalidInputError(f"rho must be positive, got {rho}")
    b = as_vector(b)
    n = f.V.shape[0]
    if b.shape[0] != n:
        raise InvalidInputError(
            f"right-hand side has length {b.shape[0]}, expected {n}"
        )
    coeffs = f.V.T @ b
    perp = b - f.V @ coeffs
    # One reorthogonalization pass: cancellation leaves an in-range residue
    # of order eps*||b|| in perp, which 1/rho would amplify for small rho.
    perp -= f.V @ (f.V.T @ perp)
    return f.V @ (coeffs / (f.s**2 + rho)) + perp / rho


def soft_threshold(v, t: float) -> np.ndarray:
    """Componentwise sign(v) * max(|v| - t, 0); the prox of t*||.||_1."""
    if t < 0:
        raise InvalidInputError(f"threshold must be nonnegative, got {t}")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def project_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the ball of the given radius.

    An infinite radius is a no-op (the default, unconstrained domains).
    """
    if not np.isfinite(radius):
        return v
    if radius <= 0:
        raise InvalidInputError(f"ball radius must be positive, got {radius}")
    nrm = float(np.linalg.norm(v))
    if nrm <= radius:
        return v
    return v * (radius / nrm)
