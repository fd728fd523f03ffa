"""Flat key=value config files and the feature-config digest.

A config file is plain text: one "key = value" per line, '#' comments and
blank lines ignored. Unknown keys are rejected so typos fail loudly. The
digest covers exactly the keys that change extracted features (geometry
plus the descriptor and retinex settings), so a feature cache can be
checked against the config that claims to describe it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

from .errors import DataError
from .lomo import LomoConfig
from .retinex import RetinexConfig


@dataclass(frozen=True)
class AppConfig:
    geometry: tuple[int, int] = (128, 48)  # (height, width)
    lomo: LomoConfig = field(default_factory=LomoConfig)
    regularizer: float = 0.001
    eigen_threshold: float = 1.0
    max_dims: int | None = None
    pca_dims: int = 100
    trials: int = 10
    train_fraction: float = 0.5
    train_count: int | None = None
    shot: str = "single"
    seed: int = 0


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise DataError(f"config key {key!r}: expected an integer, got {value!r}") from None


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise DataError(f"config key {key!r}: expected a number, got {value!r}") from None


def _parse_optional_int(key: str, value: str) -> int | None:
    if value.lower() == "none":
        return None
    return _parse_int(key, value)


def parse_config(text: str) -> AppConfig:
    """Parse config text into an AppConfig, applying defaults for absent keys."""
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        pairs[key.strip().lower()] = value.strip()

    # Updates are collected and applied in one replace per dataclass, so
    # mutually constrained keys (window and stride, say) may appear in any
    # order in the file.
    cfg_kw: dict = {}
    lomo_kw: dict = {}
    retinex_kw: dict = {}
    for key, value in pairs.items():
        if key == "geometry":
            h, _, w = value.lower().partition("x")
            if not w:
                raise DataError(f"config key 'geometry': expected HxW, got {value!r}")
            cfg_kw["geometry"] = (_parse_int(key, h), _parse_int(key, w))
        elif key == "window":
            lomo_kw["window"] = _parse_int(key, value)
        elif key == "stride":
            lomo_kw["stride"] = _parse_int(key, value)
        elif key == "pyramid_levels":
            lomo_kw["pyramid_levels"] = _parse_int(key, value)
        elif key == "hsv_bins":
            parts = value.split(",")
            if len(parts) != 3:
                raise DataError(f"config key 'hsv_bins': expected three values, got {value!r}")
            lomo_kw["hsv_bins"] = tuple(_parse_int(key, p) for p in parts)
        elif key == "siltp_scales":
            scales = []
            for item in value.split(","):
                radius, _, tau = item.partition(":")
                if not tau:
                    raise DataError(
                        f"config key 'siltp_scales': expected radius:tau pairs, got {value!r}"
                    )
                scales.append((_parse_int(key, radius.strip()), _parse_float(key, tau.strip())))
            lomo_kw["siltp_scales"] = tuple(scales)
        elif key == "retinex_sigmas":
            retinex_kw["sigmas"] = tuple(_parse_float(key, p) for p in value.split(","))
        elif key == "retinex_range":
            parts = value.split(",")
            if len(parts) != 2:
                raise DataError(f"config key 'retinex_range': expected low,high, got {value!r}")
            retinex_kw["output_low"] = _parse_float(key, parts[0])
            retinex_kw["output_high"] = _parse_float(key, parts[1])
        elif key == "regularizer":
            cfg_kw["regularizer"] = _parse_float(key, value)
        elif key == "eigen_threshold":
            cfg_kw["eigen_threshold"] = _parse_float(key, value)
        elif key == "max_dims":
            cfg_kw["max_dims"] = _parse_optional_int(key, value)
        elif key == "pca_dims":
            cfg_kw["pca_dims"] = _parse_int(key, value)
        elif key == "trials":
            cfg_kw["trials"] = _parse_int(key, value)
        elif key == "train_fraction":
            cfg_kw["train_fraction"] = _parse_float(key, value)
        elif key == "train_count":
            cfg_kw["train_count"] = _parse_optional_int(key, value)
        elif key == "shot":
            if value not in ("single", "multi"):
                raise DataError(f"config key 'shot': expected single or multi, got {value!r}")
            cfg_kw["shot"] = value
        elif key == "seed":
            cfg_kw["seed"] = _parse_int(key, value)
        else:
            raise DataError(f"unknown config key {key!r}")

    defaults = AppConfig()
    try:
        retinex = replace(defaults.lomo.retinex, **retinex_kw)
        lomo = replace(defaults.lomo, retinex=retinex, **lomo_kw)
        return replace(defaults, lomo=lomo, **cfg_kw)
    except ValueError as exc:
        raise DataError(f"invalid config value: {exc}") from exc


def load_config(path: str | None) -> AppConfig:
    """Load a config file, or the defaults when no path is given."""
    if path is None:
        return AppConfig()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise DataError(f"cannot read config file {path!r}: {exc}") from exc


def canonical_feature_text(lomo: LomoConfig, geometry: tuple[int, int]) -> str:
    """Canonical rendering of every feature-affecting setting."""
    retinex = lomo.retinex
    lines = [
        f"geometry={geometry[0]}x{geometry[1]}",
        "hsv_bins=" + ",".join(str(b) for b in lomo.hsv_bins),
        f"pyramid_levels={lomo.pyramid_levels}",
        f"retinex_range={retinex.output_low!r},{retinex.output_high!r}",
        "retinex_sigmas=" + ",".join(repr(float(s)) for s in retinex.sigmas),
        "siltp_scales=" + ",".join(f"{r}:{t!r}" for r, t in lomo.siltp_scales),
        f"stride={lomo.stride}",
        f"window={lomo.window}",
    ]
    return "\n".join(lines) + "\n"


def feature_digest(lomo: LomoConfig, geometry: tuple[int, int]) -> bytes:
    """32-byte digest identifying a feature configuration."""
    return hashlib.sha256(canonical_feature_text(lomo, geometry).encode()).digest()
