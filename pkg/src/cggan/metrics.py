"""Image quality metrics and the confidence interval used in sweeps."""

from __future__ import annotations

import numpy as np
from scipy import ndimage, stats

from .errors import InvalidInputError

_C1 = 0.01**2
_C2 = 0.03**2
_WINDOW_SIZE = 11
_WINDOW_SIGMA = 1.5


def _gaussian_window():
    half = (_WINDOW_SIZE - 1) / 2.0
    x = np.arange(_WINDOW_SIZE) - half
    g = np.exp(-(x**2) / (2.0 * _WINDOW_SIGMA**2))
    w = np.outer(g, g)
    return w / w.sum()


_WINDOW = _gaussian_window()


def _check_image_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise InvalidInputError(f"need equal 2-D shapes, got {a.shape} vs {b.shape}")
    for name, img in (("first", a), ("second", b)):
        if img.min() < 0.0 or img.max() > 1.0:
            raise InvalidInputError(f"{name} image has values outside [0, 1]")
    return a, b


def ssim(a, b) -> float:
    """Mean local structural similarity for images in [0, 1].

    11x11 Gaussian window (sigma 1.5), stabilizers (0.01)^2 and (0.03)^2
    for unit dynamic range, symmetric boundary handling.
    """
    a, b = _check_image_pair(a, b)

    def smooth(img):
        return ndimage.correlate(img, _WINDOW, mode="reflect")

    mu_a = smooth(a)
    mu_b = smooth(b)
    var_a = smooth(a * a) - mu_a**2
    var_b = smooth(b * b) - mu_b**2
    cov = smooth(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + _C1) * (2 * cov + _C2)
    den = (mu_a**2 + mu_b**2 + _C1) * (var_a + var_b + _C2)
    return float(np.mean(num / den))


def mse(a, b) -> float:
    a, b = _check_image_pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB for unit dynamic range."""
    err = mse(a, b)
    if err == 0.0:
        return np.inf
    return float(10.0 * np.log10(1.0 / err))


def confidence_interval_99(values) -> tuple:
    """Student-t mean estimate: (mean, t_{0.005,n-1} * s / sqrt(n))."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 2:
        raise InvalidInputError("confidence interval needs at least two values")
    n = v.size
    t_crit = stats.t.ppf(0.995, n - 1)
    half = float(t_crit * np.std(v, ddof=1) / np.sqrt(n))
    return float(np.mean(v)), half
