"""Multiscale retinex preprocessing.

Each channel is mapped to an average of log-ratio responses
log(I + 1) - log(G_sigma * I + 1) over the configured surround scales, then
the three channels are jointly stretched back to the output range. The
log-ratio cancels a global illumination gain, so two exposures of the same
scene land on nearly identical outputs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d


@dataclass(frozen=True)
class RetinexConfig:
    sigmas: tuple[float, ...] = (5.0, 20.0)
    output_low: float = 0.0
    output_high: float = 255.0

    def __post_init__(self) -> None:
        if len(self.sigmas) == 0:
            raise ValueError("at least one surround scale is required")
        if any(s <= 0 for s in self.sigmas):
            raise ValueError("surround scales must be positive")
        if not self.output_low < self.output_high:
            raise ValueError("output_low must be below output_high")


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian with radius ceil(3*sigma); sums to 1."""
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _surround(channel: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # Separable Gaussian blur with replicated borders.
    out = correlate1d(channel, kernel, axis=0, mode="nearest")
    return correlate1d(out, kernel, axis=1, mode="nearest")


def multiscale_retinex(img: np.ndarray, cfg: RetinexConfig | None = None) -> np.ndarray:
    """Apply multiscale retinex to an RGB image.

    Returns an RGB image in [output_low, output_high]. The linear stretch is
    computed jointly over all three channels so relative channel balance
    survives. A constant response (max == min) cannot be stretched; that case
    returns the mid-range constant image and emits a RuntimeWarning.
    """
    if cfg is None:
        cfg = RetinexConfig()
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("expected an (h, w, 3) RGB image")
    data = img.astype(np.float64, copy=False)
    kernels = [gaussian_kernel(s) for s in cfg.sigmas]

    response = np.zeros_like(data)
    for c in range(3):
        channel = data[:, :, c]
        log_channel = np.log(channel + 1.0)
        acc = np.zeros_like(channel)
        for kernel in kernels:
            acc += log_channel - np.log(_surround(channel, kernel) + 1.0)
        response[:, :, c] = acc / len(kernels)

    lo = response.min()
    hi = response.max()
    if hi == lo:
        warnings.warn("retinex response is constant; returning mid-range image", RuntimeWarning)
        mid = cfg.output_low + 0.5 * (cfg.output_high - cfg.output_low)
        return np.full_like(data, mid)
    gain = (cfg.output_high - cfg.output_low) / (hi - lo)
    out = (response - lo) * gain + cfg.output_low
    return np.clip(out, cfg.output_low, cfg.output_high)
