"""Dataset benchmark harness: sweep superpixel counts, collect metric CSVs."""

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Params, segment
from .features import load_contour_map, srgb_to_lab
from .image_io import read_labels, read_rgb
from .metrics import boundary_map, evaluate, max_f, pr_curve

__all__ = ["BenchConfig", "BenchResult", "run_bench", "write_bench_csvs"]

IMAGE_SUFFIXES = (".png", ".ppm")

RESULT_FIELDS = ["image", "k", "asa", "br", "cd", "com", "ggr", "max_f", "time_s"]


@dataclass
class BenchConfig:
    """Inputs and settings for one benchmark sweep."""

    dataset_dir: Path
    gt_dir: Path
    contour_dir: Path = None
    ks: tuple = (50, 100, 200, 400, 600, 1000, 1500, 2000, 3000)
    m: float = 0.12
    lam: float = 0.5
    gamma: float = 10.0
    path_samples: int = 15
    iters: int = 5
    cache_enabled: bool = True
    feature_dims: int = 6
    eps: float = 2.0
    threads: int = 1

    def params(self, k: int) -> Params:
        return Params(
            k=k,
            m=self.m,
            lam=self.lam,
            gamma=self.gamma,
            path_samples=self.path_samples,
            iters=self.iters,
            cache_enabled=self.cache_enabled,
            feature_dims=self.feature_dims,
        )


@dataclass
class BenchResult:
    """Per-(image, k) metric rows plus dataset-level PR curve aggregates."""

    rows: list = field(default_factory=list)
    pr_samples: list = field(default_factory=list)
    max_f: float = float("nan")
    skipped: list = field(default_factory=list)

    def aggregate_by_k(self) -> list:
        byk = {}
        for row in self.rows:
            byk.setdefault(row["k"], []).append(row)
        out = []
        for k in sorted(byk):
            group = byk[k]
            agg = {"k": k, "images": len(group)}
            for name in ("asa", "br", "cd", "com", "ggr", "time_s"):
                agg[name] = float(np.mean([r[name] for r in group]))
            out.append(agg)
        return out


def find_images(dataset_dir) -> list:
    return sorted(
        p for p in Path(dataset_dir).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
    )


def _companion(directory, stem: str):
    if directory is None:
        return None
    for suffix in (".png", ".pgm", ".ppm"):
        candidate = Path(directory) / (stem + suffix)
        if candidate.exists():
            return candidate
    return None


def bench_one_image(image_path, gt_path, contour_path, config: BenchConfig):
    """Segment one image at every scale and score it; returns rows plus the
    per-threshold PR/BR samples of its multi-scale boundary probability map."""
    rgb = read_rgb(image_path)
    lab = srgb_to_lab(rgb)
    h, w = lab.shape[:2]
    gt = read_labels(gt_path)
    if gt.shape != (h, w):
        raise ValueError(f"ground truth dims {gt.shape} do not match image {(h, w)}")
    contour = (
        load_contour_map(contour_path, w, h) if contour_path is not None else None
    )
    rows = []
    maps = []
    for k in config.ks:
        start = time.perf_counter()
        labels, _ = segment(lab, config.params(k), contour)
        elapsed = time.perf_counter() - start
        maps.append(labels)
        report = evaluate(labels, gt, eps=config.eps)
        rows.append(
            {
                "image": Path(image_path).stem,
                "k": k,
                "asa": report.asa,
                "br": report.br,
                "cd": report.cd,
                "com": report.com,
                "ggr": report.ggr,
                "max_f": float("nan"),
                "time_s": elapsed,
            }
        )
    samples = pr_curve(maps, gt, eps=config.eps)
    return rows, samples


def _bench_worker(args):
    return bench_one_image(*args)


def run_bench(config: BenchConfig, log=print) -> BenchResult:
    """Run the sweep over every dataset image with a matching ground truth."""
    images = find_images(config.dataset_dir)
    if not images:
        raise FileNotFoundError(f"no images found in {config.dataset_dir}")
    jobs = []
    result = BenchResult()
    for path in images:
        gt_path = _companion(config.gt_dir, path.stem)
        if gt_path is None:
            log(f"warning: no ground truth for {path.name}, skipping")
            result.skipped.append(path.name)
            continue
        jobs.append((path, gt_path, _companion(config.contour_dir, path.stem), config))
    if not jobs:
        raise FileNotFoundError("no image has a matching ground-truth file")

    outputs = []
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            futures = [pool.submit(_bench_worker, job) for job in jobs]
            for job, fut in zip(jobs, futures):
                outputs.append((job[0], fut.result()))
    else:
        for job in jobs:
            outputs.append((job[0], bench_one_image(*job)))

    per_image_samples = []
    for path, (rows, samples) in outputs:
        result.rows.extend(rows)
        per_image_samples.append(samples)
        log(f"{path.name}: {len(rows)} scales done")

    # average the per-image PR curves threshold by threshold
    thresholds = [t for t, _, _ in per_image_samples[0]]
    prs = np.mean([[pr for _, pr, _ in s] for s in per_image_samples], axis=0)
    brs = np.mean([[br for _, _, br in s] for s in per_image_samples], axis=0)
    result.pr_samples = list(zip(thresholds, prs.tolist(), brs.tolist()))
    result.max_f = max_f(result.pr_samples)
    return result


def write_bench_csvs(result: BenchResult, out_dir) -> None:
    """Write results.csv, aggregate.csv and pr_curve.csv under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "results.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=RESULT_FIELDS)
        writer.writeheader()
        writer.writerows(result.rows)
    with open(out_dir / "aggregate.csv", "w", newline="") as f:
        fields = ["k", "images", "asa", "br", "cd", "com", "ggr", "time_s"]
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        writer.writerows(result.aggregate_by_k())
    with open(out_dir / "pr_curve.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["threshold", "precision", "recall"])
        writer.writerows(result.pr_samples)
