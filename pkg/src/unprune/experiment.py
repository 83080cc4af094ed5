"""Experiment orchestration: the full (seed x method x sparsity) grid.

Per seed: train the original model on the full data, prune it, build (or
load) the retrain+reprune oracle, then run every unlearning method through
the un-pruning loop and score the result against both the oracle and the
original. Rows are sorted before emission so the output never depends on
execution order, and with timing recording disabled two runs of the same
config produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import ExperimentConfig
from .core import UnpruneConfig, unprune
from .data import Dataset, DeletionSplit, gen_blobs, load_idx, split_delete
from .errors import ConfigError, InputError
from .metrics import MaskPair, iom, iou, kl_masked_weights, uom
from .model import MaskedModel
from .numeric import SeededRng
from .oracle import build_model, cached_oracle
from .prune import prune_magnitude, prune_structured_l2, sparsity_of
from .train import evaluate, train_with_cfg
from .unlearn import UnlearnConfig

CSV_COLUMNS = ("seed", "method", "sparsity", "iom", "uom", "iou", "kl",
               "ta", "ua", "wall_time_s")

METRIC_NAMES = ("iom", "uom", "iou", "kl", "ta", "ua", "sparsity", "wall_time_s")


@dataclass(frozen=True)
class CellRow:
    seed: int
    method: str
    sparsity: float
    iom: float
    uom: float
    iou: float
    kl: float
    ta: float
    ua: float
    wall_time_s: float

    def metric(self, name: str) -> float:
        if name not in METRIC_NAMES:
            raise ConfigError(f"unknown metric {name!r}")
        return getattr(self, name)


@dataclass
class ExperimentReport:
    rows: list[CellRow] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)

    def select(self, method: str | None = None, sparsity: float | None = None
               ) -> list[CellRow]:
        out = []
        for row in self.rows:
            if method is not None and row.method != method:
                continue
            if sparsity is not None and abs(row.sparsity - sparsity) > 1e-9:
                continue
            out.append(row)
        return out


def build_data(cfg: ExperimentConfig, seed: int
               ) -> tuple[Dataset, Dataset | None, DeletionSplit]:
    """Deterministic (train, test, split) triple for one seed."""
    root = SeededRng(seed)
    if cfg.dataset_kind == "blobs":
        train = gen_blobs(root.split("data-train"), cfg.n_per_class, cfg.classes,
                          cfg.dim, cfg.spread, name="blobs-train")
        test = gen_blobs(root.split("data-test"), cfg.test_per_class, cfg.classes,
                         cfg.dim, cfg.spread, name="blobs-test")
    else:
        train = load_idx(cfg.images, cfg.labels, name="idx-train")
        test = (load_idx(cfg.test_images, cfg.test_labels, name="idx-test")
                if cfg.test_images else None)
    split = split_delete(train, cfg.delete_ratio, root.split("delete"),
                         cfg.target_class)
    return train, test, split


def _prune_to(model: MaskedModel, cfg: ExperimentConfig, sparsity: float) -> None:
    if cfg.prune_mode == "unstructured":
        prune_magnitude(model, sparsity, scope=cfg.scope)
    else:
        prune_structured_l2(model, sparsity)


def _mask_pair(cfg: ExperimentConfig, a: MaskedModel, b: MaskedModel) -> MaskPair:
    if cfg.prune_mode == "structured":
        return MaskPair.from_neuron_masks(a, b)
    return MaskPair.from_models(a, b)


def _scores(cfg, model, ref, train_data, test_data, split) -> dict:
    pair = _mask_pair(cfg, model, ref)
    _, ua = evaluate(model, train_data, split.forget_indices)
    if test_data is not None:
        _, ta = evaluate(model, test_data, np.arange(test_data.n))
    else:
        _, ta = evaluate(model, train_data, split.retain_indices)
    return {
        "iom": iom(pair),
        "uom": uom(pair),
        "iou": iou(pair),
        "kl": kl_masked_weights(model, ref),
        "ta": ta,
        "ua": ua,
    }


def _unprune_cell(payload: tuple) -> tuple[CellRow, CellRow, list]:
    """One (seed, sparsity, method) cell; module-level so a pool can run it."""
    (cfg, seed, sparsity, method, pruned, oracle, train_data, test_data,
     split) = payload
    unprune_cfg = UnpruneConfig(
        original_sparsity=sparsity,
        grow_per_iter=cfg.grow_per_iter,
        iterations=cfg.iterations,
        unlearn=cfg.unlearn_config(method),
        init_strategy=cfg.init_strategy,
        random_init_std=cfg.random_init_std,
    )
    model = pruned.clone()
    t0 = time.perf_counter()
    _, trace = unprune(
        model, train_data, split, unprune_cfg,
        SeededRng(seed).split(f"unprune/{method}/{sparsity!r}"),
        mode=cfg.prune_mode, test_data=test_data,
    )
    wall = time.perf_counter() - t0 if cfg.record_timing else 0.0
    vs_oracle = CellRow(
        seed=seed, method=method, sparsity=sparsity, wall_time_s=wall,
        **_scores(cfg, model, oracle, train_data, test_data, split),
    )
    vs_original = CellRow(
        seed=seed, method=f"{method}:vs_original", sparsity=sparsity,
        wall_time_s=wall,
        **_scores(cfg, model, pruned, train_data, test_data, split),
    )
    return vs_oracle, vs_original, trace.rows + [
        ("final", trace.final_sparsity, "", "", 0)
    ]


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None
                   ) -> ExperimentReport:
    """Run the configured grid; optionally write traces under out_dir."""
    cfg.validate()
    report = ExperimentReport()
    trace_rows: dict[tuple, list] = {}
    cache_dir = (os.path.join(out_dir, "oracle_cache")
                 if (out_dir and cfg.oracle_cache) else None)

    pool = ProcessPoolExecutor(max_workers=cfg.jobs) if cfg.jobs > 1 else None
    try:
        for seed in cfg.seeds:
            train_data, test_data, split = build_data(cfg, seed)
            all_rows = np.arange(train_data.n)
            t0 = time.perf_counter()
            dense = build_model(cfg.arch_dims(), seed)
            train_with_cfg(dense, train_data, all_rows, cfg.train,
                           SeededRng(seed).split("train"))
            dense_wall = time.perf_counter() - t0

            for sparsity in cfg.sparsities:
                pruned = dense.clone()
                t1 = time.perf_counter()
                _prune_to(pruned, cfg, sparsity)
                prune_wall = time.perf_counter() - t1
                rewind = dense if cfg.oracle_rewind else None
                oracle, oracle_wall, _ = cached_oracle(
                    cache_dir, train_data, split, cfg.arch_dims(), cfg.train,
                    sparsity, seed, cfg.prune_mode, cfg.scope, rewind,
                    cfg.imp_rounds,
                )
                timing = cfg.record_timing
                report.rows.append(CellRow(
                    seed=seed, method="original", sparsity=sparsity,
                    wall_time_s=(dense_wall + prune_wall) if timing else 0.0,
                    **_scores(cfg, pruned, oracle, train_data, test_data, split),
                ))
                report.rows.append(CellRow(
                    seed=seed, method="oracle", sparsity=sparsity,
                    wall_time_s=oracle_wall if timing else 0.0,
                    **_scores(cfg, oracle, oracle, train_data, test_data, split),
                ))

                payloads = [
                    (cfg, seed, sparsity, method, pruned, oracle, train_data,
                     test_data, split)
                    for method in cfg.methods
                ]
                if pool is not None:
                    futures = {
                        method: pool.submit(_unprune_cell, payload)
                        for method, payload in zip(cfg.methods, payloads)
                    }
                    outcomes = [
                        (method, futures[method]) for method in cfg.methods
                    ]
                else:
                    outcomes = [(m, p) for m, p in zip(cfg.methods, payloads)]

                for method, item in outcomes:
                    try:
                        result = (item.result() if pool is not None
                                  else _unprune_cell(item))
                        vs_oracle, vs_original, rows = result
                        report.rows.append(vs_oracle)
                        report.rows.append(vs_original)
                        trace_rows[(seed, sparsity, method)] = rows
                    except Exception as exc:  # cell failure: record, continue
                        report.errors.append({
                            "seed": seed, "method": method,
                            "sparsity": sparsity, "error": str(exc),
                        })
    finally:
        if pool is not None:
            pool.shutdown()

    report.rows.sort(key=lambda r: (r.seed, r.sparsity, r.method))
    report.errors.sort(key=lambda e: (e["seed"], e["sparsity"], e["method"]))

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        emit_csv(report, os.path.join(out_dir, "results.csv"))
        emit_json(report, os.path.join(out_dir, "results.json"))
        traces_dir = os.path.join(out_dir, "traces")
        os.makedirs(traces_dir, exist_ok=True)
        for (seed, sparsity, method), rows in sorted(trace_rows.items()):
            path = os.path.join(
                traces_dir, f"trace_seed{seed}_s{sparsity:g}_{method}.csv"
            )
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["iteration", "sparsity", "ua", "ta",
                                 "grown_count"])
                for row in rows:
                    writer.writerow([
                        row[0],
                        f"{row[1]:.10g}",
                        f"{row[2]:.10g}" if row[2] != "" else "",
                        f"{row[3]:.10g}" if row[3] != "" else "",
                        row[4],
                    ])
    return report


def _format_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def emit_csv(report: ExperimentReport, path: str) -> None:
    """Stable column order: seed,method,sparsity,iom,uom,iou,kl,ta,ua,wall_time_s."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in report.rows:
            writer.writerow([
                row.seed, row.method, f"{row.sparsity:.10g}",
                f"{row.iom:.10g}", f"{row.uom:.10g}", f"{row.iou:.10g}",
                f"{row.kl:.10g}", f"{row.ta:.10g}", f"{row.ua:.10g}",
                f"{row.wall_time_s:.3f}",
            ])


def emit_json(report: ExperimentReport, path: str) -> None:
    payload = {
        "rows": [asdict(row) for row in report.rows],
        "errors": list(report.errors),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def report_from_json(path: str) -> ExperimentReport:
    with open(path) as fh:
        payload = json.load(fh)
    return ExperimentReport(
        rows=[CellRow(**row) for row in payload["rows"]],
        errors=list(payload["errors"]),
    )


def load_csv_rows(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def emit_scatter(report: ExperimentReport, x_metric: str, y_metric: str,
                 path: str) -> None:
    """One point per (method, seed) row, with the oracle as a reference marker."""
    from .svg import scatter_svg

    if x_metric not in METRIC_NAMES or y_metric not in METRIC_NAMES:
        raise ConfigError(f"unknown metric: {x_metric!r} / {y_metric!r}")
    points = []
    reference = None
    for row in report.rows:
        if ":vs_original" in row.method:
            continue
        if row.method == "oracle":
            if reference is None:
                reference = (row.metric(x_metric), row.metric(y_metric), "oracle")
            continue
        points.append((row.metric(x_metric), row.metric(y_metric), row.method))
    scatter_svg(points, x_metric, y_metric, path, reference)
