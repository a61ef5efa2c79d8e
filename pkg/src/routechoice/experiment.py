"""Batches of generate -> search -> evaluate runs and their figure data."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .files import atomic_write_json, atomic_write_text
from .identification import FlowColumnCache
from .search import SearchConfig, SearchResult, search
from .synthgen import GeneratorParams, generate_instance, match_weights

logger = logging.getLogger(__name__)


@dataclass
class RunReport:
    index: int
    seed: int
    g_initial: float
    g_after_refine: float
    g_after_cluster: float
    g_final: float
    recovery_distances: list[float]
    iterations: int
    weights: list[list[float]] = field(default_factory=list)
    alpha: list[float] = field(default_factory=list)
    unmatched_true: int = 0
    unmatched_estimated: int = 0
    time_sp_total: float = 0.0
    time_qp_total: float = 0.0

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            del d["time_sp_total"], d["time_qp_total"]
        return d


def report_from_search(index: int, seed: int, result: SearchResult, truth_weights,
                       cache: FlowColumnCache | None = None) -> RunReport:
    match = match_weights(truth_weights, result.weights)
    return RunReport(
        index=index,
        seed=seed,
        g_initial=result.g_initial,
        g_after_refine=result.g_after_refine,
        g_after_cluster=result.g_after_cluster,
        g_final=result.g,
        recovery_distances=match.distances.tolist(),
        iterations=len(result.iterations),
        weights=result.weights.tolist(),
        alpha=result.alpha.tolist(),
        unmatched_true=int(match.unmatched_true.size),
        unmatched_estimated=int(match.unmatched_estimated.size),
        time_sp_total=cache.counters.time_sp if cache else 0.0,
        time_qp_total=cache.counters.time_qp if cache else 0.0,
    )


def run_instance(index: int, seed: int, params: GeneratorParams,
                 config: SearchConfig) -> RunReport:
    instance, truth = generate_instance(params, seed=seed)
    cache = FlowColumnCache(instance)
    result = search(cache, config)
    return report_from_search(index, seed, result, truth.weights, cache)


def run_batch(num_instances: int, params: GeneratorParams, config: SearchConfig,
              seed_base: int) -> tuple[list[RunReport], list[dict]]:
    """Run ``num_instances`` instances with seeds ``seed_base + i``.

    Failing instances are logged and listed in the second return value.
    """
    if num_instances < 1:
        raise ValueError("num_instances must be at least 1")
    reports, failures = [], []
    for i in range(num_instances):
        seed = seed_base + i
        try:
            reports.append(run_instance(i, seed, params, config))
        except Exception as exc:  # noqa: BLE001 - one bad instance must not sink the batch
            logger.exception("instance %d (seed %d) failed", i, seed)
            failures.append({"index": i, "seed": seed, "error": f"{type(exc).__name__}: {exc}"})
        else:
            r = reports[-1]
            logger.info("instance %d: g %.6g -> %.6g", i, r.g_initial, r.g_final)
    return reports, failures


def histogram_csv(values, bins: int = 10, log: bool = False) -> str:
    """``bin_left,bin_right,count`` rows; ``log`` bins by ``log10(value)``."""
    values = np.asarray(values, dtype=np.float64)
    lines = ["bin_left,bin_right,count"]
    if values.size == 0:
        return lines[0] + "\n"
    if log:
        floor = 1e-30
        edges = np.histogram_bin_edges(np.log10(np.maximum(values, floor)), bins=bins)
        counts, _ = np.histogram(np.log10(np.maximum(values, floor)), bins=edges)
        edges = 10.0 ** edges
    else:
        counts, edges = np.histogram(values, bins=bins)
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        lines.append(f"{lo!r},{hi!r},{int(c)}")
    return "\n".join(lines) + "\n"


def timing_csv(reports: list[RunReport]) -> str:
    lines = ["index,seed,time_sp,time_qp"]
    for r in reports:
        lines.append(f"{r.index},{r.seed},{r.time_sp_total!r},{r.time_qp_total!r}")
    sp = sum(r.time_sp_total for r in reports)
    qp = sum(r.time_qp_total for r in reports)
    lines.append(f"total,,{sp!r},{qp!r}")
    return "\n".join(lines) + "\n"


def write_figure_data(out_dir, reports: list[RunReport], bins: int = 10) -> list[Path]:
    """Histogram CSVs of g before/after the search and of recovery distances."""
    out_dir = Path(out_dir)
    written = []
    for name, values, log in (
        ("g_initial", [r.g_initial for r in reports], False),
        ("g_final", [r.g_final for r in reports], True),
        ("recovery_distance", [d for r in reports for d in r.recovery_distances], False),
    ):
        path = out_dir / f"{name}_hist.csv"
        atomic_write_text(path, histogram_csv(values, bins=bins, log=log))
        written.append(path)
    return written


def write_batch(out_dir, reports: list[RunReport], failures: list[dict], params: GeneratorParams,
                config: SearchConfig, seed_base: int, bins: int = 10) -> None:
    """Deterministic outputs (results.json, histogram CSVs) plus timing.csv.

    Wall-clock timings vary between runs and are kept out of every file except
    ``timing.csv``.
    """
    out_dir = Path(out_dir)
    atomic_write_json(out_dir / "results.json", {
        "seed_base": seed_base,
        "generator": params.to_dict(),
        "search": asdict(config),
        "reports": [r.to_dict(timing=False) for r in reports],
        "failures": failures,
    })
    write_figure_data(out_dir, reports, bins=bins)
    atomic_write_text(out_dir / "timing.csv", timing_csv(reports))
