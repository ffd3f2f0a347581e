"""Sensing operators and noise injection for the two imaging problems.

The forward model throughout is y = A c + nu with A = Psi @ Phi, where Psi
is the measurement operator (Gaussian or Radon) and Phi an orthonormal
change-of-basis synthesis operator (2-D DCT or identity). Operators are
explicit dense matrices so the solver's cached-SVD closed forms apply
unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .linalg import SvdFactorization, as_matrix, as_vector, svd


@dataclass(frozen=True)
class MeasurementSetup:
    """Composed sensing operator with its SVD cached at construction."""

    psi: np.ndarray
    phi: np.ndarray
    A: np.ndarray
    svd: SvdFactorization
    m: int
    n: int

    def apply(self, c) -> np.ndarray:
        """A @ c."""
        c = as_vector(c)
        if c.shape[0] != self.n:
            raise InvalidInputError(f"vector length {c.shape[0]} != n={self.n}")
        return self.A @ c

    def apply_adjoint(self, y) -> np.ndarray:
        """A^T @ y."""
        y = as_vector(y)
        if y.shape[0] != self.m:
            raise InvalidInputError(f"vector length {y.shape[0]} != m={self.m}")
        return self.A.T @ y


def measurement_setup(psi, phi=None) -> MeasurementSetup:
    """Compose Psi and Phi into a MeasurementSetup, factoring A = Psi Phi.

    ``phi=None`` means the identity basis (A = Psi).
    """
    psi = as_matrix(psi)
    m, n = psi.shape
    if phi is None:
        A = psi
        phi = np.eye(n)
    else:
        phi = as_matrix(phi)
        if phi.shape != (n, n):
            raise InvalidInputError(
                f"basis must be {n}x{n} to compose with {m}x{n} measurement"
            )
        A = psi @ phi
    return MeasurementSetup(psi=psi, phi=phi, A=A, svd=svd(A), m=m, n=n)


def gaussian_measurement(m: int, n: int, seed: int) -> np.ndarray:
    """m-by-n matrix with i.i.d. N(0, 1/m) entries, deterministic per seed."""
    if m < 1 or n < 1:
        raise InvalidInputError(f"dimensions must be >= 1, got {m}x{n}")
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, n)) / np.sqrt(m)


def dct_basis(side: int) -> np.ndarray:
    """Orthonormal 2-D DCT-II synthesis operator for side x side images.

    Returns Phi with Phi^T Phi = I; s = Phi c maps coefficients c to the
    row-major flattened image s, and Phi^T s recovers the coefficients.
    """
    if side < 1:
        raise InvalidInputError(f"side must be >= 1, got {side}")
    j = np.arange(side)
    k = j[:, None]
    D = np.cos(np.pi * (2 * j[None, :] + 1) * k / (2 * side)) * np.sqrt(2.0 / side)
    D[0, :] /= np.sqrt(2.0)
    # Analysis of a row-major flattened image X is kron(D, D) @ vec(X);
    # the synthesis operator is its transpose.
    return np.kron(D, D).T


@dataclass(frozen=True)
class Sinogram:
    """Stacked parallel-beam projections, one row of detectors per angle."""

    angles: np.ndarray
    detectors: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.size != self.angles.size * self.detectors:
            raise InvalidInputError(
                "sinogram size mismatch: "
                f"{self.values.size} != {self.angles.size}*{self.detectors}"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("sinogram has non-finite values")

    def as_image(self) -> np.ndarray:
        return self.values.reshape(self.angles.size, self.detectors)


def radon_angles(num_angles: int) -> np.ndarray:
    """Uniformly spaced projection angles on [0, pi)."""
    if num_angles < 1:
        raise InvalidInputError(f"need at least one angle, got {num_angles}")
    return np.arange(num_angles) * np.pi / num_angles


def radon_operator(side: int, num_angles: int, step: float = 0.5) -> np.ndarray:
    """Explicit parallel-beam Radon matrix for a side x side image.

    One detector row per angle with ``side`` detectors at unit spacing,
    bilinear interpolation at sample points spaced ``step`` pixels along
    each ray, rays clipped to the disk inscribed in the pixel grid. Rows
    map a flattened image to line integrals; row sums approximate chord
    lengths, so the per-angle sinogram mass is angle-independent.
    """
    if side < 2:
        raise InvalidInputError(f"side must be >= 2, got {side}")
    angles = radon_angles(num_angles)
    c = (side - 1) / 2.0
    r = c
    offsets = np.arange(side) - c
    R = np.zeros((num_angles * side, side * side))

    for a, theta in enumerate(angles):
        ct, st = np.cos(theta), np.sin(theta)
        for i, t in enumerate(offsets):
            half = np.sqrt(max(r * r - t * t, 0.0))
            nsamp = int(np.floor(2.0 * half / step)) + 1
            s = (np.arange(nsamp) - (nsamp - 1) / 2.0) * step
            # Ray point in image coordinates (x right, y up, origin at center).
            x = t * ct - s * st
            y = t * st + s * ct
            # Pixel coordinates: column = x + c, row = c - y.
            col = x + c
            row = c - y
            c0 = np.clip(np.floor(col).astype(int), 0, side - 2)
            r0 = np.clip(np.floor(row).astype(int), 0, side - 2)
            fc = col - c0
            fr = row - r0
            rowbuf = np.zeros(side * side)
            np.add.at(rowbuf, r0 * side + c0, (1 - fr) * (1 - fc) * step)
            np.add.at(rowbuf, r0 * side + c0 + 1, (1 - fr) * fc * step)
            np.add.at(rowbuf, (r0 + 1) * side + c0, fr * (1 - fc) * step)
            np.add.at(rowbuf, (r0 + 1) * side + c0 + 1, fr * fc * step)
            R[a * side + i] = rowbuf
    return R


def add_noise_snr(y_clean, snr_db: float, seed: int) -> np.ndarray:
    """Add white Gaussian noise rescaled to hit the target SNR exactly.

    The noise draw is scaled so 10*log10(||y||^2/||nu||^2) equals snr_db,
    not just in expectation. An infinite snr_db returns the input.
    """
    y_clean = as_vector(y_clean)
    if np.isinf(snr_db):
        return y_clean.copy()
    power = float(np.dot(y_clean, y_clean))
    if power == 0.0:
        raise InvalidInputError("cannot set a finite SNR on all-zero measurements")
    rng = np.random.default_rng(seed)
    nu = rng.standard_normal(y_clean.shape[0])
    target = np.sqrt(power) * 10.0 ** (-snr_db / 20.0)
    nu *= target / np.linalg.norm(nu)
    return y_clean + nu
