"""Full-reference image quality metrics.

psnr caps at 99 dB (zero or vanishing MSE would otherwise be unbounded);
ssim uses the conventional 11x11 Gaussian window with sigma 1.5 and
K1/K2 = 0.01/0.03, averaged over valid (unpadded) positions.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import convolve2d

from .errors import DimensionError

PSNR_CAP = 99.0


def _as_image(x) -> np.ndarray:
    values = getattr(x, "values", x)
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D image, got shape {arr.shape}")
    return arr


def psnr(a, b, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE) in dB, capped at 99."""
    x, y = _as_image(a), _as_image(b)
    if x.shape != y.shape:
        raise DimensionError(f"psnr shape mismatch: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(10.0 * np.log10(peak * peak / mse), PSNR_CAP)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma * sigma))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def ssim(
    a,
    b,
    size: int = 11,
    sigma: float = 1.5,
    k1: float = 0.01,
    k2: float = 0.03,
    peak: float = 1.0,
) -> float:
    """Mean local structural similarity over valid window positions."""
    x, y = _as_image(a), _as_image(b)
    if x.shape != y.shape:
        raise DimensionError(f"ssim shape mismatch: {x.shape} vs {y.shape}")
    if min(x.shape) < size:
        raise DimensionError(f"ssim needs frames of at least {size}x{size}, got {x.shape}")
    window = _gaussian_window(size, sigma)
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2

    mu_x = convolve2d(x, window, mode="valid")
    mu_y = convolve2d(y, window, mode="valid")
    xx = convolve2d(x * x, window, mode="valid")
    yy = convolve2d(y * y, window, mode="valid")
    xy = convolve2d(x * y, window, mode="valid")

    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y
    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    )
    return float(ssim_map.mean())
