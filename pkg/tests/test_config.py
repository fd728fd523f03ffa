import pytest

from reidkit.config import (
    AppConfig,
    canonical_feature_text,
    feature_digest,
    load_config,
    parse_config,
)
from reidkit.errors import DataError
from reidkit.lomo import LomoConfig


def test_defaults():
    cfg = load_config(None)
    assert cfg.geometry == (128, 48)
    assert cfg.regularizer == 0.001
    assert cfg.eigen_threshold == 1.0
    assert cfg.pca_dims == 100
    assert cfg.trials == 10
    assert cfg.shot == "single"
    assert cfg.lomo == LomoConfig()


def test_parse_overrides_everything_it_names():
    cfg = parse_config(
        """
        # protocol
        geometry = 160x60
        trials = 5
        seed = 42
        shot = multi
        train_count = 80

        # descriptor
        window = 12
        stride = 6
        hsv_bins = 4,4,4
        siltp_scales = 2:0.2, 4:0.3
        retinex_sigmas = 3, 10
        retinex_range = 0, 100

        # metric
        regularizer = 0.01
        eigen_threshold = 0.5
        max_dims = 64
        pca_dims = 50
        """
    )
    assert cfg.geometry == (160, 60)
    assert cfg.trials == 5 and cfg.seed == 42 and cfg.shot == "multi"
    assert cfg.train_count == 80
    assert cfg.lomo.window == 12 and cfg.lomo.stride == 6
    assert cfg.lomo.hsv_bins == (4, 4, 4)
    assert cfg.lomo.siltp_scales == ((2, 0.2), (4, 0.3))
    assert cfg.lomo.retinex.sigmas == (3.0, 10.0)
    assert cfg.lomo.retinex.output_high == 100.0
    assert cfg.regularizer == 0.01 and cfg.eigen_threshold == 0.5
    assert cfg.max_dims == 64 and cfg.pca_dims == 50


def test_parse_accepts_any_key_order_for_coupled_fields():
    cfg = parse_config("stride = 15\nwindow = 20\n")
    assert cfg.lomo.window == 20 and cfg.lomo.stride == 15


def test_parse_none_literals():
    cfg = parse_config("max_dims = none\ntrain_count = None\n")
    assert cfg.max_dims is None and cfg.train_count is None


def test_parse_rejects_unknown_and_malformed():
    with pytest.raises(DataError, match="unknown config key"):
        parse_config("widnow = 10\n")
    with pytest.raises(DataError, match="expected an integer"):
        parse_config("trials = five\n")
    with pytest.raises(DataError, match="key = value"):
        parse_config("just some words\n")
    with pytest.raises(DataError, match="HxW"):
        parse_config("geometry = 128\n")
    with pytest.raises(DataError, match="single or multi"):
        parse_config("shot = all\n")


def test_parse_surfaces_dataclass_validation():
    with pytest.raises(DataError, match="invalid config value"):
        parse_config("window = 3\nstride = 5\n")
    with pytest.raises(DataError, match="invalid config value"):
        parse_config("retinex_sigmas = -2\n")


def test_load_config_missing_file():
    with pytest.raises(DataError, match="cannot read config"):
        load_config("/nonexistent/reid.cfg")


def test_digest_tracks_feature_keys_only():
    base = AppConfig()
    assert len(feature_digest(base.lomo, base.geometry)) == 32
    same = parse_config("trials = 99\nseed = 7\nregularizer = 0.5\n")
    assert feature_digest(same.lomo, same.geometry) == feature_digest(base.lomo, base.geometry)
    for text in ("window = 12\n", "geometry = 160x60\n", "retinex_sigmas = 5,21\n"):
        changed = parse_config(text)
        assert feature_digest(changed.lomo, changed.geometry) != feature_digest(
            base.lomo, base.geometry
        )


def test_canonical_text_is_stable():
    cfg = AppConfig()
    a = canonical_feature_text(cfg.lomo, cfg.geometry)
    b = canonical_feature_text(cfg.lomo, cfg.geometry)
    assert a == b
    assert a.startswith("geometry=128x48\n")
    assert "window=10" in a
