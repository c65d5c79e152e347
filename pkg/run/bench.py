import time
from dataclasses import replace

import pandas as pd

from dev.core import embed
from dev.density import build_cumulative_kernel
from dev.pipeline import RunConfig
from dev.scanner import Method, scan_scores
from dev.synthesis import DATASET_LENGTHSCALE, sample_gp


def _timed(func, *args):
    start = time.perf_counter()
    func(*args)
    return time.perf_counter() - start


def run_bench(options):
    """
    Time the Gaussian and KDE scans over the series lengths in bench_sizes, with the
    interval length bounds from options. Returns one row per length.
    """
    config = RunConfig.from_options(options)
    gaussian = config.scan_config()
    kde = replace(gaussian, method=Method.MDI_KDE)

    rows = []
    for n in options.get("bench_sizes", [250, 500, 1000, 2000]):
        series = sample_gp(int(n), 1, options.get("lengthscale", DATASET_LENGTHSCALE), config.seed)
        gaussian_seconds = _timed(scan_scores, series, gaussian)
        kde_seconds = _timed(scan_scores, series, kde)
        kernel_seconds = _timed(build_cumulative_kernel, embed(series, config.embed), config.bandwidth)
        rows.append(
            {
                "n": int(n),
                "max_len": config.max_len,
                "gaussian_s": gaussian_seconds,
                "kde_s": kde_seconds,
                "kde_kernel_s": kernel_seconds,
                "kernel_share": min(kernel_seconds / kde_seconds, 1.0),
            }
        )
        if options.get("verbose"):
            print(f"n={n}: gaussian {gaussian_seconds:.3f}s, kde {kde_seconds:.3f}s")
    return pd.DataFrame(rows)
