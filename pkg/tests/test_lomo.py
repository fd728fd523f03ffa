import numpy as np
import numpy.testing as npt
import pytest

from reidkit.descriptors import window_histogram
from reidkit.imgcore import average_pool_2x2
from reidkit.lomo import (
    LomoConfig,
    band_max_pool,
    extract_lomo,
    level_shapes,
    lomo_dim,
    lomo_layout,
)
from reidkit.lomo import _code_images
from reidkit.retinex import multiscale_retinex


def bands_per_level(cfg, height, width):
    counts = {}
    for block in lomo_layout(cfg, height, width):
        counts.setdefault(block.level, set()).add(block.band)
    return [len(counts[level]) for level in sorted(counts)]


def test_dim_at_default_person_geometry():
    cfg = LomoConfig()
    assert lomo_dim(cfg, 128, 48) == 26960
    assert bands_per_level(cfg, 128, 48) == [24, 11, 5]
    # 40 bands, each one 8*8*8 color bins plus 81 codes per texture scale
    assert 40 * (512 + 81 + 81) == 26960


def test_dim_matches_window_origin_enumeration():
    # Independent oracle: walk the window origins per pyramid level instead
    # of using the closed-form band count.
    cfg = LomoConfig()
    height, width = 160, 60
    expected_bands = []
    h, w = height, width
    for _ in range(cfg.pyramid_levels):
        y0, n = 0, 0
        while y0 + cfg.window <= h:
            n += 1
            y0 += cfg.stride
        expected_bands.append(n)
        h, w = h // 2, w // 2
    assert expected_bands == [31, 15, 7]
    assert bands_per_level(cfg, height, width) == expected_bands
    assert lomo_dim(cfg, height, width) == sum(expected_bands) * 674 == 35722


def test_layout_contiguous_and_ordered():
    cfg = LomoConfig()
    layout = lomo_layout(cfg, 64, 48)
    offset = 0
    for block in layout:
        assert block.offset == offset
        offset += block.length
    # levels fine to coarse, bands top to bottom, hsv before the textures
    keys = [(b.level, b.band) for b in layout]
    assert keys == sorted(keys)
    kinds = [b.kind for b in layout[:3]]
    assert kinds == ["hsv", "siltp_r3", "siltp_r5"]
    assert [b.length for b in layout[:3]] == [512, 81, 81]


def test_dim_law_agrees_with_extraction():
    cfg = LomoConfig()
    rng = np.random.default_rng(21)
    for _ in range(5):
        height = int(rng.integers(40, 121))
        width = int(rng.integers(40, 81))
        img = rng.uniform(0.0, 255.0, size=(height, width, 3))
        feat = extract_lomo(img, cfg)
        assert len(feat.values) == lomo_dim(cfg, height, width)


def test_too_small_geometry_raises():
    cfg = LomoConfig()
    with pytest.raises(ValueError, match="level 2"):
        lomo_dim(cfg, 39, 48)
    with pytest.raises(ValueError):
        extract_lomo(np.zeros((39, 48, 3)), cfg)
    # single level needs no margin for pooling
    assert lomo_dim(LomoConfig(pyramid_levels=1), 10, 10) == 674


def test_max_pool_dominance_matches_enumeration():
    cfg = LomoConfig()
    rng = np.random.default_rng(22)
    for _ in range(2):
        img = rng.uniform(0.0, 255.0, size=(64, 40, 3))
        feat = extract_lomo(img, cfg, finalize=False)
        level_img = multiscale_retinex(img, cfg.retinex)
        codes = _code_images(cfg, level_img)
        level = 0
        for block in feat.blocks:
            while block.level > level:
                level_img = average_pool_2x2(level_img)
                codes = _code_images(cfg, level_img)
                level += 1
            h, w = level_img.shape[:2]
            hists = [
                window_histogram(
                    codes[block.kind],
                    x0,
                    block.band * cfg.stride,
                    cfg.window,
                    cfg.window,
                    normalize=True,
                )
                for x0 in range(0, w - cfg.window + 1, cfg.stride)
            ]
            expected = np.maximum.reduce(hists)
            got = feat.values[block.offset : block.offset + block.length]
            npt.assert_array_equal(got, expected)


def test_constant_image_gives_indicator_bands():
    # A constant image degenerates to mid-gray after normalization: value
    # 127.5 lands in color bin 4 and every texture code is 0, so each raw
    # band histogram is an indicator vector.
    cfg = LomoConfig()
    img = np.full((48, 48, 3), 200.0)
    with pytest.warns(RuntimeWarning):
        feat = extract_lomo(img, cfg, finalize=False)
    for block in feat.blocks:
        part = feat.values[block.offset : block.offset + block.length]
        hot = 4 if block.kind == "hsv" else 0
        assert part[hot] == 1.0
        assert part.sum() == 1.0


def test_finalized_feature_normalization():
    cfg = LomoConfig()
    rng = np.random.default_rng(23)
    img = rng.uniform(0.0, 255.0, size=(64, 40, 3))
    feat = extract_lomo(img, cfg)
    hsv_mask = np.zeros(len(feat.values), dtype=bool)
    for block in feat.blocks:
        if block.kind == "hsv":
            hsv_mask[block.offset : block.offset + block.length] = True
    npt.assert_allclose(np.linalg.norm(feat.values[hsv_mask]), 1.0, atol=1e-9)
    npt.assert_allclose(np.linalg.norm(feat.values[~hsv_mask]), 1.0, atol=1e-9)
    assert feat.values.min() >= 0.0


def test_extraction_deterministic():
    rng = np.random.default_rng(24)
    img = rng.uniform(0.0, 255.0, size=(48, 40, 3))
    a = extract_lomo(img)
    b = extract_lomo(img)
    npt.assert_array_equal(a.values, b.values)


def test_band_max_pool_validation():
    with pytest.raises(ValueError):
        band_max_pool([])
    with pytest.raises(ValueError):
        band_max_pool([np.zeros(3), np.zeros(4)])
    npt.assert_array_equal(
        band_max_pool([np.array([1.0, 5.0]), np.array([2.0, 3.0])]), [2.0, 5.0]
    )


def test_level_shapes_floor_halving():
    cfg = LomoConfig()
    assert level_shapes(cfg, 128, 48) == [(128, 48), (64, 24), (32, 12)]
    assert level_shapes(cfg, 45, 45) == [(45, 45), (22, 22), (11, 11)]


def test_config_validation():
    with pytest.raises(ValueError):
        LomoConfig(window=4, stride=5)
    with pytest.raises(ValueError):
        LomoConfig(pyramid_levels=0)
    with pytest.raises(ValueError):
        LomoConfig(siltp_scales=((3, 0.3), (3, 0.5)))
    with pytest.raises(ValueError):
        LomoConfig(siltp_scales=((3, 1.2),))
