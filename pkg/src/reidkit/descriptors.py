"""Per-pixel code images and window histograms.

A code image assigns every pixel a small-integer code; local appearance is
then summarized by histograms of codes inside sliding windows. Two coders
are provided: a scale-invariant local ternary pattern over four neighbors
(SILTP) and a joint HSV color binning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CodeImage:
    """Integer codes per pixel plus the size of the code alphabet."""

    codes: np.ndarray  # (h, w) integer array, values in [0, n_codes)
    n_codes: int


def siltp_codes(gray: np.ndarray, radius: int, tau: float) -> CodeImage:
    """Scale-invariant local ternary pattern codes over four neighbors.

    Each of the neighbors at (+radius, 0), (0, +radius), (-radius, 0),
    (0, -radius) - taken in the fixed order right, down, left, up -
    contributes a ternary digit: 1 if the neighbor exceeds (1 + tau) times
    the center, 2 if it falls below (1 - tau) times the center, 0 otherwise.
    The code is the base-3 number with "right" as the least significant
    digit, so n_codes = 81. Borders replicate edge pixels.

    Comparisons are ratio tests against the center, so scaling the whole
    image by a positive gain leaves the codes unchanged.
    """
    if gray.ndim != 2:
        raise ValueError("expected a 2-D gray image")
    if radius < 1:
        raise ValueError("radius must be at least 1")
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    h, w = gray.shape
    padded = np.pad(gray, radius, mode="edge")
    right = padded[radius : radius + h, 2 * radius :]
    down = padded[2 * radius :, radius : radius + w]
    left = padded[radius : radius + h, : w]
    up = padded[: h, radius : radius + w]

    upper = (1.0 + tau) * gray
    lower = (1.0 - tau) * gray
    codes = np.zeros((h, w), dtype=np.int32)
    for weight, neighbor in zip((1, 3, 9, 27), (right, down, left, up)):
        digit = (neighbor > upper).astype(np.int32) + 2 * (neighbor < lower).astype(np.int32)
        codes += weight * digit
    return CodeImage(codes, 81)


def hsv_bin_codes(hsv: np.ndarray, bins: tuple[int, int, int] = (8, 8, 8)) -> CodeImage:
    """Joint HSV bin index per pixel.

    With the default 8x8x8 binning: h_bin = floor(h / 45) clamped to [0, 7],
    s_bin = min(floor(s * 8), 7), v_bin = min(floor(v * 8), 7), and the code
    is h_bin * 64 + s_bin * 8 + v_bin, so n_codes = 512.
    """
    if hsv.ndim != 3 or hsv.shape[2] != 3:
        raise ValueError("expected an (h, w, 3) HSV image")
    hb, sb, vb = bins
    if min(hb, sb, vb) < 1:
        raise ValueError("bin counts must be positive")
    h_bin = np.clip(np.floor(hsv[..., 0] * (hb / 360.0)), 0, hb - 1).astype(np.int32)
    s_bin = np.minimum(np.floor(hsv[..., 1] * sb), sb - 1).astype(np.int32)
    v_bin = np.minimum(np.floor(hsv[..., 2] * vb), vb - 1).astype(np.int32)
    codes = h_bin * (sb * vb) + s_bin * vb + v_bin
    return CodeImage(codes, hb * sb * vb)


def window_histogram(
    code_img: CodeImage,
    x0: int,
    y0: int,
    width: int,
    height: int,
    normalize: bool = False,
) -> np.ndarray:
    """Histogram of codes inside the window at (x0, y0), x across columns.

    Returns a length-n_codes float64 vector of counts, or of frequencies
    summing to 1 when normalize is set. The window must lie fully inside
    the image.
    """
    codes = code_img.codes
    img_h, img_w = codes.shape
    if width < 1 or height < 1:
        raise ValueError("window dimensions must be positive")
    if x0 < 0 or y0 < 0 or x0 + width > img_w or y0 + height > img_h:
        raise ValueError("window extends outside the image")
    patch = codes[y0 : y0 + height, x0 : x0 + width]
    hist = np.bincount(patch.ravel(), minlength=code_img.n_codes).astype(np.float64)
    if normalize:
        hist /= width * height
    return hist
