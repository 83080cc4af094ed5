"""Command-line entry point: every pipeline stage independently invocable.

Subcommands: train, prune, oracle, unprune, evaluate, mia-sweep, run, plot.
Exit codes: 0 full success, 1 config error, 2 partial cell failures.
The environment variable UNPRUNE_OUT overrides the output directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .config import ExperimentConfig, parse_config
from .core import UnpruneConfig, unprune
from .errors import ConfigError
from .experiment import (
    build_data,
    emit_scatter,
    report_from_json,
    run_experiment,
)
from .mia import ratio_sweep, sweep_to_csv
from .model import load_snapshot, save_snapshot
from .numeric import SeededRng
from .oracle import build_model, cached_oracle
from .prune import prune_magnitude, prune_structured_l2, sparsity_of
from .svg import line_svg
from .train import evaluate, train_with_cfg

DEFAULT_MIA_RATIOS = tuple(round(0.8 + 0.05 * i, 2) for i in range(9))


def _out_dir(args) -> str:
    out = os.environ.get("UNPRUNE_OUT") or args.out
    os.makedirs(out, exist_ok=True)
    return out


def _load_cfg(args) -> ExperimentConfig:
    cfg = parse_config(args.config)
    if args.seeds:
        cfg = replace(cfg, seeds=tuple(int(s) for s in args.seeds.split(",")))
    if args.jobs:
        cfg = replace(cfg, jobs=args.jobs)
    return cfg.validate()


def _train_original(cfg: ExperimentConfig, seed: int):
    train_data, test_data, split = build_data(cfg, seed)
    model = build_model(cfg.arch_dims(), seed)
    log = train_with_cfg(model, train_data, np.arange(train_data.n), cfg.train,
                         SeededRng(seed).split("train"))
    return model, log, train_data, test_data, split


def cmd_train(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(args)
    seed = cfg.seeds[0]
    model, log, train_data, test_data, split = _train_original(cfg, seed)
    snap = os.path.join(out, f"model_seed{seed}.bin")
    save_snapshot(model, snap)
    log.to_csv(os.path.join(out, f"trainlog_seed{seed}.csv"))
    loss, acc = evaluate(model, train_data, np.arange(train_data.n))
    print(f"trained seed={seed} loss={loss:.4f} acc={acc:.4f} -> {snap}")
    return 0


def cmd_prune(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(args)
    seed = cfg.seeds[0]
    sparsity = args.sparsity if args.sparsity is not None else cfg.sparsities[0]
    if args.model:
        model = load_snapshot(args.model)
    else:
        model, _, _, _, _ = _train_original(cfg, seed)
    if cfg.prune_mode == "unstructured":
        prune_magnitude(model, sparsity, scope=cfg.scope)
    else:
        prune_structured_l2(model, sparsity)
    report = sparsity_of(model)
    snap = os.path.join(out, f"pruned_seed{seed}_s{sparsity:g}.bin")
    save_snapshot(model, snap)
    print(f"pruned to {report.sparsity:.4f} "
          f"({report.zero_mask_entries}/{report.total_weights} zeros) -> {snap}")
    return 0


def cmd_oracle(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(args)
    seed = cfg.seeds[0]
    sparsity = args.sparsity if args.sparsity is not None else cfg.sparsities[0]
    train_data, _, split = build_data(cfg, seed)
    cache = os.path.join(out, "oracle_cache") if cfg.oracle_cache else None
    model, wall, hit = cached_oracle(
        cache, train_data, split, cfg.arch_dims(), cfg.train, sparsity, seed,
        cfg.prune_mode, cfg.scope, None, cfg.imp_rounds,
    )
    snap = os.path.join(out, f"oracle_seed{seed}_s{sparsity:g}.bin")
    save_snapshot(model, snap)
    print(f"oracle seed={seed} s={sparsity:g} wall={wall:.3f}s "
          f"cache_hit={hit} -> {snap}")
    return 0


def cmd_unprune(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(args)
    seed = cfg.seeds[0]
    sparsity = args.sparsity if args.sparsity is not None else cfg.sparsities[0]
    method = args.method or cfg.methods[0]
    model, _, train_data, test_data, split = _train_original(cfg, seed)
    if cfg.prune_mode == "unstructured":
        prune_magnitude(model, sparsity, scope=cfg.scope)
    else:
        prune_structured_l2(model, sparsity)
    unprune_cfg = UnpruneConfig(
        original_sparsity=sparsity, grow_per_iter=cfg.grow_per_iter,
        iterations=cfg.iterations, unlearn=cfg.unlearn_config(method),
        init_strategy=cfg.init_strategy, random_init_std=cfg.random_init_std,
    )
    _, trace = unprune(
        model, train_data, split, unprune_cfg,
        SeededRng(seed).split(f"unprune/{method}/{sparsity!r}"),
        mode=cfg.prune_mode, test_data=test_data,
    )
    snap = os.path.join(out, f"unpruned_seed{seed}_s{sparsity:g}_{method}.bin")
    save_snapshot(model, snap)
    trace_path = os.path.join(out, f"trace_seed{seed}_s{sparsity:g}_{method}.csv")
    trace.to_csv(trace_path)
    print(f"unpruned ({method}) final sparsity={trace.final_sparsity:.4f} "
          f"-> {snap}")
    return 0


def cmd_evaluate(cfg: ExperimentConfig, args) -> int:
    seed = cfg.seeds[0]
    model = load_snapshot(args.model)
    train_data, test_data, split = build_data(cfg, seed)
    loss_f, ua = evaluate(model, train_data, split.forget_indices)
    loss_r, ra = evaluate(model, train_data, split.retain_indices)
    print(f"forget: loss={loss_f:.4f} ua={ua:.4f}")
    print(f"retain: loss={loss_r:.4f} acc={ra:.4f}")
    if test_data is not None:
        loss_t, ta = evaluate(model, test_data, np.arange(test_data.n))
        print(f"test:   loss={loss_t:.4f} ta={ta:.4f}")
    if args.ref:
        from .metrics import MaskPair, iom, iou, kl_masked_weights, uom

        ref = load_snapshot(args.ref)
        pair = (MaskPair.from_neuron_masks(model, ref)
                if cfg.prune_mode == "structured"
                else MaskPair.from_models(model, ref))
        print(f"vs ref: iom={iom(pair):.4f} uom={uom(pair):.4f} "
              f"iou={iou(pair):.4f} kl={kl_masked_weights(model, ref):.4f}")
    return 0


def cmd_mia_sweep(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(args)
    seed = cfg.seeds[0]
    if args.model:
        model = load_snapshot(args.model)
        train_data, test_data, split = build_data(cfg, seed)
    else:
        model, _, train_data, test_data, split = _train_original(cfg, seed)
    if test_data is None:
        raise ConfigError("mia-sweep needs held-out test data as non-members")
    ratios = list(cfg.mia_ratios or DEFAULT_MIA_RATIOS)
    # Default non-member pool is small (about the member pool size): the
    # fragility under ratio perturbations is a small-pool phenomenon.
    n_nonmembers = args.nonmembers or min(
        2 * len(split.forget_indices), test_data.n
    )
    reports = ratio_sweep(
        model, train_data, split.forget_indices,
        test_data, np.arange(min(n_nonmembers, test_data.n)),
        ratios, SeededRng(seed).split("mia"),
    )
    csv_path = os.path.join(out, f"mia_sweep_seed{seed}.csv")
    sweep_to_csv(reports, csv_path)
    svg_path = os.path.join(out, f"mia_sweep_seed{seed}.svg")
    from .mia import CHANNELS

    series = {
        channel: [(rep.ratio, rep.score(channel)) for rep in reports]
        for channel in CHANNELS
    }
    line_svg(series, "shadow ratio", "attack score", svg_path)
    spread = max(r.correctness for r in reports) - min(
        r.correctness for r in reports
    )
    print(f"mia sweep: {len(reports)} ratios, correctness spread={spread:.3f} "
          f"-> {csv_path}")
    return 0


def cmd_run(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(args)
    report = run_experiment(cfg, out_dir=out)
    print(f"run: {len(report.rows)} rows, {len(report.errors)} failed cells "
          f"-> {os.path.join(out, 'results.csv')}")
    for err in report.errors:
        print(f"  cell failed: seed={err['seed']} method={err['method']} "
              f"s={err['sparsity']}: {err['error']}", file=sys.stderr)
    return 2 if report.errors else 0


def cmd_plot(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(args)
    results = args.results or os.path.join(out, "results.json")
    report = report_from_json(results)
    path = os.path.join(out, f"scatter_{args.x}_{args.y}.svg")
    emit_scatter(report, args.x, args.y, path)
    print(f"plot: {len(report.rows)} rows -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unprune",
        description="Un-pruning laboratory: remove deleted-data influence "
                    "from sparse model weights and masks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "train": cmd_train,
        "prune": cmd_prune,
        "oracle": cmd_oracle,
        "unprune": cmd_unprune,
        "evaluate": cmd_evaluate,
        "mia-sweep": cmd_mia_sweep,
        "run": cmd_run,
        "plot": cmd_plot,
    }
    for name in commands:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--seeds", default="", help="override seed list (CSV)")
        p.add_argument("--jobs", type=int, default=0, help="worker processes")
        if name in ("prune", "oracle", "unprune"):
            p.add_argument("--sparsity", type=float, default=None)
        if name == "unprune":
            p.add_argument("--method", default="")
        if name in ("prune", "evaluate", "mia-sweep"):
            p.add_argument("--model", default="")
        if name == "mia-sweep":
            p.add_argument("--nonmembers", type=int, default=0)
        if name == "evaluate":
            p.add_argument("--ref", default="")
        if name == "plot":
            p.add_argument("--results", default="")
            p.add_argument("--x", default="iom")
            p.add_argument("--y", default="ua")
        p.set_defaults(func=commands[name])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_cfg(args)
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
