"""Local maximal-occurrence feature extraction.

An image is retinex-normalized, coded per pixel (HSV bins plus SILTP at two
radii), and scanned with square windows sliding horizontally inside each
horizontal band. Per band and code alphabet, the bin-wise MAX over the
band's window histograms is kept, which tolerates viewpoint shifts along
the horizontal direction. The same scan repeats on 2x2-average-pooled
copies of the image, and all band blocks are concatenated, log-compressed,
and unit-normalized (HSV blocks and SILTP blocks separately).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .descriptors import CodeImage, hsv_bin_codes, siltp_codes, window_histogram
from .imgcore import average_pool_2x2, rgb_to_hsv
from .retinex import RetinexConfig, multiscale_retinex


@dataclass(frozen=True)
class LomoConfig:
    window: int = 10
    stride: int = 5
    pyramid_levels: int = 3
    siltp_scales: tuple[tuple[int, float], ...] = ((3, 0.3), (5, 0.3))
    hsv_bins: tuple[int, int, int] = (8, 8, 8)
    retinex: RetinexConfig = field(default_factory=RetinexConfig)

    def __post_init__(self) -> None:
        if not 1 <= self.stride <= self.window:
            raise ValueError("need window >= stride >= 1")
        if self.pyramid_levels < 1:
            raise ValueError("pyramid_levels must be at least 1")
        if min(self.hsv_bins) < 1:
            raise ValueError("hsv bin counts must be positive")
        radii = [r for r, _ in self.siltp_scales]
        if len(set(radii)) != len(radii):
            raise ValueError("siltp radii must be distinct")
        for radius, tau in self.siltp_scales:
            if radius < 1:
                raise ValueError("siltp radius must be at least 1")
            if not 0 < tau < 1:
                raise ValueError("siltp tau must lie in (0, 1)")


@dataclass(frozen=True)
class FeatureBlock:
    """One band histogram's slice of the feature vector."""

    level: int
    band: int
    kind: str  # "hsv" or "siltp_r<radius>"
    offset: int
    length: int


@dataclass(frozen=True)
class LomoFeature:
    values: np.ndarray
    blocks: tuple[FeatureBlock, ...]


def level_shapes(cfg: LomoConfig, height: int, width: int) -> list[tuple[int, int]]:
    """Pyramid geometry: each level halves both dimensions (floor)."""
    shapes = [(height, width)]
    for _ in range(cfg.pyramid_levels - 1):
        h, w = shapes[-1]
        shapes.append((h // 2, w // 2))
    return shapes


def _band_count(cfg: LomoConfig, extent: int) -> int:
    return (extent - cfg.window) // cfg.stride + 1


def lomo_layout(cfg: LomoConfig, height: int, width: int) -> tuple[FeatureBlock, ...]:
    """Block layout of the feature vector for a given image geometry.

    Bands run top to bottom within a level, levels fine to coarse, and each
    band contributes its blocks in the order HSV first, then the SILTP
    scales as configured.
    """
    kinds = [("hsv", int(np.prod(cfg.hsv_bins)))]
    kinds += [(f"siltp_r{radius}", 81) for radius, _ in cfg.siltp_scales]
    blocks: list[FeatureBlock] = []
    offset = 0
    for level, (h, w) in enumerate(level_shapes(cfg, height, width)):
        if h < cfg.window or w < cfg.window:
            raise ValueError(
                f"geometry {height}x{width} too small: level {level} is {h}x{w}, "
                f"below the {cfg.window}x{cfg.window} window"
            )
        for band in range(_band_count(cfg, h)):
            for kind, length in kinds:
                blocks.append(FeatureBlock(level, band, kind, offset, length))
                offset += length
    return tuple(blocks)


def lomo_dim(cfg: LomoConfig, height: int, width: int) -> int:
    """Feature length for a given geometry.

    Each band contributes (hsv codes + 81 per SILTP scale) entries, and a
    level of height h holds (h - window) // stride + 1 bands.
    """
    per_band = int(np.prod(cfg.hsv_bins)) + 81 * len(cfg.siltp_scales)
    total_bands = 0
    for level, (h, w) in enumerate(level_shapes(cfg, height, width)):
        if h < cfg.window or w < cfg.window:
            raise ValueError(
                f"geometry {height}x{width} too small: level {level} is {h}x{w}, "
                f"below the {cfg.window}x{cfg.window} window"
            )
        total_bands += _band_count(cfg, h)
    return total_bands * per_band


def band_max_pool(histograms: list[np.ndarray]) -> np.ndarray:
    """Bin-wise maximum over a band's window histograms."""
    if len(histograms) == 0:
        raise ValueError("band has no window histograms")
    first = histograms[0]
    for h in histograms[1:]:
        if h.shape != first.shape:
            raise ValueError("window histograms disagree in length")
    return np.maximum.reduce(histograms)


def _code_images(cfg: LomoConfig, img: np.ndarray) -> dict[str, CodeImage]:
    codes = {"hsv": hsv_bin_codes(rgb_to_hsv(img), cfg.hsv_bins)}
    gray = img.mean(axis=2)
    for radius, tau in cfg.siltp_scales:
        codes[f"siltp_r{radius}"] = siltp_codes(gray, radius, tau)
    return codes


def extract_lomo(img: np.ndarray, cfg: LomoConfig | None = None, finalize: bool = True) -> LomoFeature:
    """Extract the feature vector of an RGB image.

    With finalize=False the raw max-pooled window frequencies are returned
    (no log compression, no normalization), which is the representation the
    pooling tests check against window enumeration.
    """
    if cfg is None:
        cfg = LomoConfig()
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("expected an (h, w, 3) RGB image")
    height, width = img.shape[:2]
    layout = lomo_layout(cfg, height, width)
    total = layout[-1].offset + layout[-1].length
    values = np.empty(total, dtype=np.float64)

    level_img = multiscale_retinex(img, cfg.retinex)
    codes = _code_images(cfg, level_img)
    current_level = 0
    x_starts: list[int] = list(range(0, level_img.shape[1] - cfg.window + 1, cfg.stride))
    for block in layout:
        while block.level > current_level:
            level_img = average_pool_2x2(level_img)
            codes = _code_images(cfg, level_img)
            current_level += 1
            x_starts = list(range(0, level_img.shape[1] - cfg.window + 1, cfg.stride))
        code_img = codes[block.kind]
        y0 = block.band * cfg.stride
        hists = [
            window_histogram(code_img, x0, y0, cfg.window, cfg.window, normalize=True)
            for x0 in x_starts
        ]
        values[block.offset : block.offset + block.length] = band_max_pool(hists)

    if finalize:
        values = np.log1p(values)
        hsv_mask = np.zeros(total, dtype=bool)
        for block in layout:
            if block.kind == "hsv":
                hsv_mask[block.offset : block.offset + block.length] = True
        for mask in (hsv_mask, ~hsv_mask):
            if mask.any():
                norm = np.linalg.norm(values[mask])
                if norm > 0:
                    values[mask] /= norm
    return LomoFeature(values, layout)
