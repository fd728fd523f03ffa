"""Command line interface.

Subcommands: extract (manifest -> feature cache), train (cache -> model
file), eval (cache -> CMC report as CSV, SVG, and PNG), retinex (single
image preview), bench (throughput measurements). Exit codes: 0 success,
1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .baselines import MetricModel, metric_scores
from .cache import (
    FeatureCache,
    ManifestEntry,
    read_feature_cache,
    read_manifest,
    require_cross_view,
    write_feature_cache,
)
from .config import AppConfig, feature_digest, load_config
from .errors import DataError, NumericError
from .evaluation import (
    MethodCurves,
    MethodSpec,
    ProtocolConfig,
    ProtocolReport,
    cmc,
    draw_single_shot,
    gallery_order_digest,
    run_protocol,
)
from .imgcore import load_image, resize_bilinear, write_png, write_ppm
from .lomo import extract_lomo, lomo_dim
from .modelio import load_model, save_metric_model, save_xqda_model
from .report import (
    write_report_csv,
    write_report_png,
    write_report_svg,
    write_sweep_csv,
    write_sweep_png,
)
from .retinex import multiscale_retinex
from .xqda import CrossViewDataset, XqdaConfig, XqdaModel, pairwise_distances, train_xqda
from .baselines import train_kissme, train_mahalanobis_genuine

_METHODS = ("xqda", "kissme", "mahalanobis", "euclidean", "cosine")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _dims_list(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not dims or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError(f"dimensions must be positive integers, got {text!r}")
    return dims


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reidkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="extract features for every manifest image")
    p_extract.add_argument("manifest", help="CSV manifest: image_path,person_id,camera_id")
    p_extract.add_argument("cache", help="output feature cache file")
    p_extract.add_argument("--config", default=None, help="config file (key = value lines)")
    p_extract.add_argument("--workers", type=int, default=None, help="worker threads (default: CPUs)")
    p_extract.add_argument("--seed", type=int, default=None)
    p_extract.set_defaults(func=cmd_extract)

    p_train = sub.add_parser("train", help="train a metric on a feature cache")
    p_train.add_argument("cache")
    p_train.add_argument("model", help="output model file")
    p_train.add_argument("--method", choices=("xqda", "kissme", "mahalanobis"), default="xqda")
    p_train.add_argument("--config", default=None)
    p_train.add_argument("--reg", type=float, default=None, help="covariance regularizer")
    p_train.add_argument("--dims", type=int, default=None, help="cap on retained dimensions")
    p_train.add_argument("--pca-dims", type=int, default=None, help="PCA dimensions for baselines")
    p_train.add_argument("--threshold", type=float, default=None, help="eigenvalue retention threshold")
    p_train.add_argument("--probe-cam", default=None)
    p_train.add_argument("--gallery-cam", default=None)
    p_train.add_argument("--seed", type=int, default=None)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="run the trial protocol and write reports")
    p_eval.add_argument("cache")
    p_eval.add_argument("out", help="report base path; writes .csv, .svg, and .png")
    p_eval.add_argument("--method", default=None, help="comma-separated method list (default xqda)")
    p_eval.add_argument("--model", default=None, help="evaluate a saved model instead of training")
    p_eval.add_argument("--config", default=None)
    p_eval.add_argument("--seed", type=int, default=None)
    p_eval.add_argument("--trials", type=int, default=None)
    p_eval.add_argument("--shot", choices=("single", "multi"), default=None)
    p_eval.add_argument("--train-fraction", type=float, default=None)
    p_eval.add_argument("--train-count", type=int, default=None)
    p_eval.add_argument("--reg", type=float, default=None)
    p_eval.add_argument("--dims", type=int, default=None)
    p_eval.add_argument("--pca-dims", type=int, default=None)
    p_eval.add_argument("--threshold", type=float, default=None)
    p_eval.add_argument("--sweep-dims", type=_dims_list, default=None, help="e.g. 10,25,50")
    p_eval.add_argument("--probe-cam", default=None)
    p_eval.add_argument("--gallery-cam", default=None)
    p_eval.set_defaults(func=cmd_eval)

    p_retinex = sub.add_parser("retinex", help="preprocess one image for visual inspection")
    p_retinex.add_argument("input")
    p_retinex.add_argument("output", help=".ppm or .png")
    p_retinex.add_argument("--config", default=None)
    p_retinex.add_argument("--seed", type=int, default=None)
    p_retinex.set_defaults(func=cmd_retinex)

    p_bench = sub.add_parser("bench", help="measure extraction and training throughput")
    p_bench.add_argument("--images", type=int, default=100)
    p_bench.add_argument("--dim", type=int, default=600)
    p_bench.add_argument("--classes", type=int, default=632)
    p_bench.add_argument("--config", default=None)
    p_bench.add_argument("--seed", type=int, default=None)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def _check_digest(cache: FeatureCache, cfg: AppConfig, config_given: bool) -> None:
    if config_given and cache.config_digest != feature_digest(cfg.lomo, cfg.geometry):
        raise DataError(
            "config digest mismatch: the cache was extracted with different feature settings"
        )


def cmd_extract(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    entries = read_manifest(args.manifest)
    height, width = cfg.geometry
    dim = lomo_dim(cfg.lomo, height, width)
    workers = args.workers if args.workers else (os.cpu_count() or 1)
    if workers < 1:
        raise DataError("--workers must be at least 1")

    timings: list[float] = []
    failures: list[tuple[ManifestEntry, Exception]] = []
    rows: list[tuple[ManifestEntry, np.ndarray]] = []

    def work(entry: ManifestEntry) -> tuple[np.ndarray, float]:
        img = resize_bilinear(load_image(entry.image_path), height, width)
        start = time.perf_counter()
        feature = extract_lomo(img, cfg.lomo)
        return feature.values.astype(np.float32), time.perf_counter() - start

    wall = time.perf_counter()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(work, entry) for entry in entries]
        for entry, future in zip(entries, futures):
            try:
                values, seconds = future.result()
            except (DataError, ValueError) as exc:
                failures.append((entry, exc))
                continue
            rows.append((entry, values))
            timings.append(seconds)
    wall = time.perf_counter() - wall

    if rows:
        cache = FeatureCache(
            dim=dim,
            geometry=cfg.geometry,
            config_digest=feature_digest(cfg.lomo, cfg.geometry),
            person_ids=np.array([e.person_id for e, _ in rows]),
            camera_ids=np.array([e.camera_id for e, _ in rows]),
            features=np.vstack([v for _, v in rows]),
        )
        write_feature_cache(args.cache, cache)
    for entry, exc in failures:
        print(f"failed: {entry.image_path}: {exc}", file=sys.stderr)
    if timings:
        mean_ms = 1000.0 * float(np.mean(timings))
        p95_ms = 1000.0 * float(np.percentile(timings, 95))
        print(
            f"extracted {len(rows)}/{len(entries)} features ({dim} dims) in {wall:.2f}s "
            f"with {workers} workers; per image mean {mean_ms:.1f} ms, p95 {p95_ms:.1f} ms"
        )
    return 2 if failures else 0


def _dataset_from_cache(
    cache: FeatureCache, probe_cam: str | None, gallery_cam: str | None
) -> CrossViewDataset:
    features = cache.features.T.astype(np.float64)
    labels = cache.person_ids
    cams = cache.camera_ids
    if (probe_cam is None) != (gallery_cam is None):
        raise DataError("give both --probe-cam and --gallery-cam, or neither")
    if probe_cam is None:
        # Pooled single-view scenario: both sides see every sample.
        return CrossViewDataset(features, features, labels, labels)
    mask_x = cams == probe_cam
    mask_z = cams == gallery_cam
    if not mask_x.any():
        raise DataError(f"no cache entries under camera {probe_cam!r}")
    if not mask_z.any():
        raise DataError(f"no cache entries under camera {gallery_cam!r}")
    return CrossViewDataset(
        features[:, mask_x], features[:, mask_z], labels[mask_x], labels[mask_z]
    )


def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    cache = read_feature_cache(args.cache)
    _check_digest(cache, cfg, args.config is not None)
    if args.probe_cam is not None:
        require_cross_view(cache)
    reg = args.reg if args.reg is not None else cfg.regularizer
    threshold = args.threshold if args.threshold is not None else cfg.eigen_threshold
    max_dims = args.dims if args.dims is not None else cfg.max_dims
    pca_dims = args.pca_dims if args.pca_dims is not None else cfg.pca_dims

    ds = _dataset_from_cache(cache, args.probe_cam, args.gallery_cam)
    start = time.perf_counter()
    if args.method == "xqda":
        model = train_xqda(
            ds, XqdaConfig(regularizer=reg, max_dims=max_dims, eigen_threshold=threshold)
        )
        save_xqda_model(args.model, model)
        elapsed = time.perf_counter() - start
        head = ", ".join(f"{v:.3f}" for v in model.eigenvalues[:5])
        print(
            f"xqda: retained {model.w.shape[1]} of {ds.x.shape[0]} dims "
            f"(reg {reg}, threshold {threshold}); leading eigenvalues [{head}]; "
            f"trained in {elapsed:.2f}s"
        )
    else:
        trainer = train_kissme if args.method == "kissme" else train_mahalanobis_genuine
        model = trainer(ds, pca_dims=pca_dims, reg=reg)
        save_metric_model(args.model, model)
        elapsed = time.perf_counter() - start
        print(
            f"{args.method}: {pca_dims}-dim PCA metric (reg {reg}); trained in {elapsed:.2f}s"
        )
    print(f"wrote {args.model}")
    return 0


def _infer_views(cache: FeatureCache, probe: str | None, gallery: str | None) -> tuple[str, str]:
    if (probe is None) != (gallery is None):
        raise DataError("give both --probe-cam and --gallery-cam, or neither")
    if probe is not None:
        return probe, gallery
    cams = sorted(set(cache.camera_ids.tolist()))
    if len(cams) != 2:
        raise DataError(
            f"cache holds cameras {cams}; pick two with --probe-cam/--gallery-cam"
        )
    return cams[0], cams[1]


def _evaluate_fixed_model(
    model: XqdaModel | MetricModel,
    cache: FeatureCache,
    probe_view: str,
    gallery_view: str,
    shot: str,
    seed: int,
) -> ProtocolReport:
    features = cache.features.T.astype(np.float64)
    labels = cache.person_ids
    mask_x = cache.camera_ids == probe_view
    mask_z = cache.camera_ids == gallery_view
    if not mask_x.any() or not mask_z.any():
        raise DataError(f"no cache entries under {probe_view!r} or {gallery_view!r}")
    probes, probe_ids = features[:, mask_x], labels[mask_x]
    gallery, gallery_ids = features[:, mask_z], labels[mask_z]
    if shot == "single":
        gallery, gallery_ids = draw_single_shot(gallery, gallery_ids, seed, 0)
    if isinstance(model, XqdaModel):
        scores = pairwise_distances(model, probes, gallery)
        name = "xqda"
    else:
        scores = metric_scores(model, probes, gallery)
        name = model.name
    curve = cmc(scores, probe_ids, gallery_ids)
    return ProtocolReport(
        methods=(
            MethodCurves(
                name=name,
                trial_rates=curve[None, :],
                mean_rates=curve,
                std_rates=np.zeros_like(curve),
            ),
        ),
        sweep=None,
        trials=1,
        seed=seed,
        shot_mode=shot,
        probe_view=probe_view,
        gallery_view=gallery_view,
        gallery_digest=gallery_order_digest([gallery_ids]),
    )


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    cache = read_feature_cache(args.cache)
    _check_digest(cache, cfg, args.config is not None)
    seed = args.seed if args.seed is not None else cfg.seed
    trials = args.trials if args.trials is not None else cfg.trials
    shot = args.shot if args.shot is not None else cfg.shot
    fraction = args.train_fraction if args.train_fraction is not None else cfg.train_fraction
    count = args.train_count if args.train_count is not None else cfg.train_count
    reg = args.reg if args.reg is not None else cfg.regularizer
    threshold = args.threshold if args.threshold is not None else cfg.eigen_threshold
    max_dims = args.dims if args.dims is not None else cfg.max_dims
    pca_dims = args.pca_dims if args.pca_dims is not None else cfg.pca_dims
    probe_view, gallery_view = _infer_views(cache, args.probe_cam, args.gallery_cam)

    if args.model is not None:
        report = _evaluate_fixed_model(
            load_model(args.model), cache, probe_view, gallery_view, shot, seed
        )
    else:
        names = (args.method or "xqda").split(",")
        for name in names:
            if name not in _METHODS:
                raise DataError(f"unknown method {name!r}; choose from {', '.join(_METHODS)}")
        methods = [
            MethodSpec(
                name=name,
                regularizer=reg,
                pca_dims=pca_dims,
                max_dims=max_dims,
                eigen_threshold=threshold,
            )
            for name in names
        ]
        protocol = ProtocolConfig(
            trials=trials,
            train_fraction=fraction,
            train_count=count,
            shot_mode=shot,
            seed=seed,
        )
        report = run_protocol(
            cache.features.T.astype(np.float64),
            cache.person_ids,
            cache.camera_ids,
            probe_view,
            gallery_view,
            methods,
            protocol,
            sweep_dims=args.sweep_dims,
        )

    base = args.out
    for suffix in (".csv", ".svg", ".png"):
        if base.endswith(suffix):
            base = base[: -len(suffix)]
    paths = [base + ".csv", base + ".svg", base + ".png"]
    write_report_csv(report, paths[0])
    write_report_svg(report, paths[1])
    write_report_png(report, paths[2])
    if report.sweep is not None:
        paths += [base + "_sweep.csv", base + "_sweep.png"]
        write_sweep_csv(report, paths[3])
        write_sweep_png(report, paths[4])

    print(f"gallery order digest: {report.gallery_digest}")
    marks = [1, 5, 10, 20]
    header = "method" + "".join(f"  rank-{m:<4}" for m in marks)
    print(header)
    for curves in report.methods:
        cells = []
        for m in marks:
            idx = min(m, len(curves.mean_rates)) - 1
            cells.append(f"  {100.0 * curves.mean_rates[idx]:6.2f}%  ")
        print(f"{curves.name:<12}" + "".join(cells))
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_retinex(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    out = multiscale_retinex(load_image(args.input), cfg.lomo.retinex)
    lower = args.output.lower()
    if lower.endswith(".ppm"):
        write_ppm(args.output, out)
    elif lower.endswith(".png"):
        write_png(args.output, out)
    else:
        raise DataError(f"unsupported output extension for {args.output!r} (use .ppm or .png)")
    print(f"wrote {args.output}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed])))
    height, width = cfg.geometry

    images = rng.uniform(0.0, 255.0, size=(args.images, height, width, 3))
    extract_lomo(images[0], cfg.lomo)  # warm up caches before timing
    times = []
    for img in images:
        start = time.perf_counter()
        extract_lomo(img, cfg.lomo)
        times.append(time.perf_counter() - start)
    mean_ms = 1000.0 * float(np.mean(times))
    p95_ms = 1000.0 * float(np.percentile(times, 95))
    print(
        f"feature extraction on {args.images} images at {height}x{width}: "
        f"mean {mean_ms:.1f} ms, p95 {p95_ms:.1f} ms"
    )

    labels = np.arange(args.classes)
    ds = CrossViewDataset(
        rng.standard_normal((args.dim, args.classes)),
        rng.standard_normal((args.dim, args.classes)),
        labels,
        labels,
    )
    start = time.perf_counter()
    model = train_xqda(ds, XqdaConfig())
    elapsed = time.perf_counter() - start
    print(
        f"metric training at dim {args.dim} with {args.classes} identities per view: "
        f"{elapsed:.2f}s, retained {model.w.shape[1]} dims"
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 1
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
