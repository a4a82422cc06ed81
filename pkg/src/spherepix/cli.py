"""Command-line interface: segment, evaluate, bench."""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .bench import BenchConfig, run_bench, write_bench_csvs
from .core import Params, segment
from .features import FormatError, load_contour_map, srgb_to_lab
from .image_io import read_labels, read_rgb, write_label_csv, write_labels, write_overlay
from .metrics import boundary_map, evaluate

EXIT_OK = 0
EXIT_IO = 1
EXIT_FORMAT = 2

METRIC_COLUMNS = ["image", "k", "asa", "br", "cd", "com", "ggr", "max_f"]


def _add_param_flags(p: argparse.ArgumentParser, with_k: bool = True) -> None:
    if with_k:
        p.add_argument("--k", type=int, default=600, help="superpixel count")
    p.add_argument("--m", type=float, default=0.12, help="regularity trade-off")
    p.add_argument(
        "--lambda",
        dest="lam",
        type=float,
        default=0.5,
        help="pixel vs path color weight in [0, 1]",
    )
    p.add_argument("--gamma", type=float, default=10.0, help="contour penalty")
    p.add_argument("--path-samples", type=int, default=15, help="points per path")
    p.add_argument("--iters", type=int, default=5, help="clustering iterations")
    p.add_argument(
        "--cache", choices=("on", "off"), default="on", help="path/feature cache"
    )
    p.add_argument(
        "--features",
        dest="feature_dims",
        type=int,
        choices=(3, 6),
        default=6,
        help="feature dimensions (3: Lab, 6: Lab + neighborhood mean)",
    )


def _params_from_args(args, k=None) -> Params:
    return Params(
        k=k if k is not None else args.k,
        m=args.m,
        lam=args.lam,
        gamma=args.gamma,
        path_samples=args.path_samples,
        iters=args.iters,
        cache_enabled=args.cache == "on",
        feature_dims=args.feature_dims,
    )


def cmd_segment(args) -> int:
    try:
        rgb = read_rgb(args.image)
    except OSError as exc:
        print(f"error: cannot read {args.image}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        lab = srgb_to_lab(rgb)
        h, w = lab.shape[:2]
        contour = (
            load_contour_map(args.contour, w, h) if args.contour else None
        )
        params = _params_from_args(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"error: cannot read {args.contour}: {exc}", file=sys.stderr)
        return EXIT_IO
    start = time.perf_counter()
    labels, _ = segment(lab, params, contour)
    elapsed = time.perf_counter() - start
    write_labels(args.out, labels)
    if args.csv_out:
        write_label_csv(args.csv_out, labels)
    if args.overlay:
        write_overlay(args.overlay, rgb, boundary_map(labels))
    n_labels = len(np.unique(labels))
    print(f"{args.image}: {n_labels} superpixels in {elapsed:.2f}s -> {args.out}")
    return EXIT_OK


def _write_metrics_row(out, row: dict) -> None:
    header = ",".join(METRIC_COLUMNS)
    line = ",".join(str(row[c]) for c in METRIC_COLUMNS)
    if out:
        path = Path(out)
        new = not path.exists()
        with open(path, "a") as f:
            if new:
                f.write(header + "\n")
            f.write(line + "\n")
    print(header)
    print(line)


def cmd_evaluate(args) -> int:
    try:
        labels = read_labels(args.labels)
        gt = read_labels(args.gt)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if labels.shape != gt.shape:
        print(
            f"error: label map {labels.shape} does not match ground truth {gt.shape}",
            file=sys.stderr,
        )
        return EXIT_FORMAT
    report = evaluate(labels, gt, eps=args.eps)
    _write_metrics_row(
        args.metrics_out,
        {
            "image": Path(args.labels).stem,
            "k": len(np.unique(labels)),
            "asa": report.asa,
            "br": report.br,
            "cd": report.cd,
            "com": report.com,
            "ggr": report.ggr,
            "max_f": report.max_f,
        },
    )
    return EXIT_OK


def cmd_bench(args) -> int:
    ks = tuple(int(v) for v in args.k_list.split(","))
    config = BenchConfig(
        dataset_dir=Path(args.dataset),
        gt_dir=Path(args.gt),
        contour_dir=Path(args.contour_dir) if args.contour_dir else None,
        ks=ks,
        m=args.m,
        lam=args.lam,
        gamma=args.gamma,
        path_samples=args.path_samples,
        iters=args.iters,
        cache_enabled=args.cache == "on",
        feature_dims=args.feature_dims,
        eps=args.eps,
        threads=args.threads,
    )
    try:
        result = run_bench(config)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    write_bench_csvs(result, args.out)
    print(f"{len(result.rows)} rows -> {args.out} (max F = {result.max_f:.4f})")
    if args.cache_ab:
        ratio = _cache_ab_ratio(config)
        print(f"cache speedup: {ratio:.2f}x (off/on wall clock)")
    return EXIT_OK


def _cache_ab_ratio(config: BenchConfig) -> float:
    """Re-run the sweep with the cache on and off and time both."""
    import dataclasses

    times = {}
    for enabled in (True, False):
        cfg = dataclasses.replace(config, cache_enabled=enabled, threads=1)
        start = time.perf_counter()
        run_bench(cfg, log=lambda *_: None)
        times[enabled] = time.perf_counter() - start
    return times[False] / times[True]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spherepix",
        description="Spherical superpixels for equirectangular images",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_seg = sub.add_parser("segment", help="segment one image")
    p_seg.add_argument("image", help="input PNG/PPM image (width = 2 x height)")
    _add_param_flags(p_seg)
    p_seg.add_argument("--contour", default=None, help="grayscale contour prior")
    p_seg.add_argument("--out", default="labels.png", help="16-bit label PNG")
    p_seg.add_argument("--csv-out", default=None, help="optional label CSV")
    p_seg.add_argument("--overlay", default=None, help="boundary overlay PNG")
    p_seg.set_defaults(func=cmd_segment)

    p_eval = sub.add_parser("evaluate", help="score a label map against ground truth")
    p_eval.add_argument("labels", help="16-bit label PNG")
    p_eval.add_argument("gt", help="16-bit ground-truth PNG")
    p_eval.add_argument("--eps", type=float, default=2.0, help="boundary tolerance")
    p_eval.add_argument("--metrics-out", default=None, help="append CSV row here")
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser("bench", help="sweep a dataset directory")
    p_bench.add_argument("--dataset", required=True, help="image directory")
    p_bench.add_argument("--gt", required=True, help="ground-truth directory")
    p_bench.add_argument("--contour-dir", default=None, help="contour prior directory")
    p_bench.add_argument(
        "--k",
        dest="k_list",
        default="50,100,200,400,600,1000,1500,2000,3000",
        help="comma-separated superpixel counts",
    )
    _add_param_flags(p_bench, with_k=False)
    p_bench.add_argument("--eps", type=float, default=2.0, help="boundary tolerance")
    p_bench.add_argument("--threads", type=int, default=1, help="parallel images")
    p_bench.add_argument("--out", default="bench_out", help="output directory")
    p_bench.add_argument(
        "--cache-ab",
        action="store_true",
        help="also time the sweep with the cache on vs off",
    )
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
