"""Person re-identification toolkit.

Appearance features for pedestrian crops (illumination-normalized color
histograms plus local texture patterns, max-pooled over horizontal bands)
and a cross-view quadratic metric learned from intra- and extra-person
difference covariances, with classic baselines and a CMC evaluation
harness on top.
"""

from .baselines import (
    MetricModel,
    PcaModel,
    cosine_scores,
    euclidean_scores,
    metric_scores,
    pca_fit,
    pca_transform,
    train_kissme,
    train_mahalanobis_genuine,
)
from .cache import (
    FeatureCache,
    ManifestEntry,
    read_feature_cache,
    read_manifest,
    require_cross_view,
    write_feature_cache,
)
from .config import AppConfig, feature_digest, load_config, parse_config
from .descriptors import CodeImage, hsv_bin_codes, siltp_codes, window_histogram
from .errors import DataError, NumericError, ReidError
from .evaluation import (
    MethodCurves,
    MethodSpec,
    ProtocolConfig,
    ProtocolReport,
    SweepCurve,
    cmc,
    draw_single_shot,
    make_cross_view_benchmark,
    run_protocol,
    split_identities,
)
from .imgcore import load_image, resize_bilinear, rgb_to_hsv, write_png, write_ppm
from .lomo import (
    FeatureBlock,
    LomoConfig,
    LomoFeature,
    band_max_pool,
    extract_lomo,
    lomo_dim,
    lomo_layout,
)
from .modelio import load_model, save_metric_model, save_xqda_model
from .retinex import RetinexConfig, multiscale_retinex
from .xqda import (
    CovariancePair,
    CrossViewDataset,
    XqdaConfig,
    XqdaModel,
    compute_covariances_fast,
    compute_covariances_naive,
    distance,
    pairwise_distances,
    project,
    train_xqda,
    xqda_from_covariances,
)

__version__ = "0.1.0"

__all__ = [
    "AppConfig",
    "CodeImage",
    "CovariancePair",
    "CrossViewDataset",
    "DataError",
    "FeatureBlock",
    "FeatureCache",
    "LomoConfig",
    "LomoFeature",
    "ManifestEntry",
    "MethodCurves",
    "MethodSpec",
    "MetricModel",
    "NumericError",
    "PcaModel",
    "ProtocolConfig",
    "ProtocolReport",
    "ReidError",
    "RetinexConfig",
    "SweepCurve",
    "XqdaConfig",
    "XqdaModel",
    "band_max_pool",
    "cmc",
    "compute_covariances_fast",
    "compute_covariances_naive",
    "cosine_scores",
    "distance",
    "draw_single_shot",
    "euclidean_scores",
    "extract_lomo",
    "feature_digest",
    "hsv_bin_codes",
    "load_config",
    "load_image",
    "load_model",
    "lomo_dim",
    "lomo_layout",
    "make_cross_view_benchmark",
    "metric_scores",
    "multiscale_retinex",
    "pairwise_distances",
    "parse_config",
    "pca_fit",
    "pca_transform",
    "project",
    "read_feature_cache",
    "read_manifest",
    "require_cross_view",
    "resize_bilinear",
    "rgb_to_hsv",
    "run_protocol",
    "save_metric_model",
    "save_xqda_model",
    "siltp_codes",
    "split_identities",
    "train_kissme",
    "train_mahalanobis_genuine",
    "train_xqda",
    "window_histogram",
    "write_feature_cache",
    "write_png",
    "write_ppm",
]
