"""Acceptance gate: one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. Paper-scale magnitudes are not reproducible on the desk-scale
reference tasks; each criterion checks the documented direction or exact
property at its stated tolerance.
"""

import math
import time

import numpy as np
import pytest

from unprune.core import UnpruneConfig, unprune
from unprune.data import gen_blobs, split_delete
from unprune.metrics import MaskPair, iom, iou, kl_masked_weights, uom
from unprune.mia import mia_evaluate, ratio_sweep
from unprune.model import backward, forward, init_model, mlp_specs
from unprune.numeric import SeededRng, softmax_cross_entropy
from unprune.oracle import build_model, retrain_reprune
from unprune.prune import prune_magnitude, prune_structured_l2, sparsity_of
from unprune.reference import (
    REF_DIMS,
    REF_SPARSITY,
    REF_TRAIN,
    REFERENCE_SEEDS,
    STRUCT_FRACTION,
    reference_config,
    reference_unprune_config,
    structured_unprune_config,
)
from unprune.train import TrainCfg, evaluate, train_with_cfg
from unprune.unlearn import UnlearnConfig


def _verdict(number, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {number:2d}] {status} - {detail}")
    return ok


def test_criterion_01_metric_identities():
    """IoM/UoM/IoU ranges and exact identities on 10,000 random mask pairs."""
    t0 = time.perf_counter()
    rng = SeededRng(1001)
    worst = 0.0
    for _ in range(10_000):
        n = int(rng.integers(2, 40, 1)[0])
        u = (rng.uniform(0, 1, n) < rng.uniform(0.05, 0.95, 1)[0]).astype(float)
        r = (rng.uniform(0, 1, n) < rng.uniform(0.05, 0.95, 1)[0]).astype(float)
        p = MaskPair(u, r)
        i, un, j = iom(p), uom(p), iou(p)
        assert 0.0 <= i <= 1.0 and 0.0 <= un <= 1.0
        assert i <= un
        if math.isnan(j):
            assert un == 0.0
            continue
        assert 0.0 <= j <= 1.0
        worst = max(worst, abs(j * un - i))
        assert abs(j * un - i) <= 1e-12
        assert (j == 1.0) == (np.array_equal(u, r) and un > 0)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 5.0
    assert _verdict(1, ok, f"10,000 pairs, max |iou*uom-iom| = {worst:.2e}, "
                           f"{elapsed:.2f}s")


def test_criterion_02_gradient_fidelity():
    """Analytic masked gradients match central differences, 100 random configs."""
    t0 = time.perf_counter()
    step = 1e-5
    worst = 0.0
    checked = 0
    config_rng = SeededRng(2002)
    from unprune.model import _forward_trace

    for case in range(100):
        dims = [3, int(config_rng.integers(4, 9, 1)[0]),
                int(config_rng.integers(3, 7, 1)[0])]
        model = init_model(mlp_specs(dims), SeededRng(3000 + case))
        sparsity = float(config_rng.uniform(0.0, 0.6, 1)[0])
        if sparsity > 0.01:
            prune_magnitude(model, sparsity)
        # Resample inputs and biases until all pre-activations sit away from
        # relu kinks (dead units are otherwise pinned at zero), keeping the
        # finite-difference oracle valid at this step size.
        data_rng = SeededRng(4000 + case)
        for _ in range(50):
            for b in model.biases:
                b[...] = data_rng.normal(b.size, 0.0, 0.1)
            x = data_rng.normal(4 * 3).reshape(4, 3)
            labels = data_rng.integers(0, dims[-1], 4)
            _, pre = _forward_trace(model, x, True)
            if min(float(np.abs(z).min()) for z in pre) >= 1e-3:
                break
        else:
            continue
        _, grads = backward(model, x, labels)

        def loss_at():
            return softmax_cross_entropy(forward(model, x), labels)[0]

        for w, g in zip(model.weights + model.biases,
                        grads.weights + grads.biases):
            flat_w = w.ravel()
            flat_g = g.ravel()
            fd = np.zeros_like(flat_g)
            for i in range(flat_w.size):
                orig = flat_w[i]
                flat_w[i] = orig + step
                up = loss_at()
                flat_w[i] = orig - step
                down = loss_at()
                flat_w[i] = orig
                fd[i] = (up - down) / (2 * step)
            err = np.linalg.norm(flat_g - fd) / max(np.linalg.norm(fd), 1e-8)
            worst = max(worst, err)
            assert err < 1e-4
        checked += 1
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 30.0 and checked == 100
    assert _verdict(2, ok, f"{checked} configs, worst rel err = {worst:.2e}, "
                           f"{elapsed:.1f}s")


def test_criterion_03_data_dependence(ref_runs, ref_oracles):
    """Same seed, 10% deleted: pruned topologies visibly diverge (IoU < 0.95)."""
    values = []
    for seed in REFERENCE_SEEDS:
        pair = MaskPair.from_models(ref_runs[seed].pruned,
                                    ref_oracles[(seed, 0.6)])
        values.append(iou(pair))
    hits = sum(v < 0.95 for v in values)
    ok = hits >= 4
    assert _verdict(3, ok, "IoU(original, oracle masks) = "
                    + ", ".join(f"{v:.3f}" for v in values)
                    + f" -> {hits}/5 below 0.95")


@pytest.fixture(scope="session")
def unpruned_reference(ref_runs):
    """Un-pruning outputs for both headline methods on the reference task."""
    out = {}
    for method in ("gradient_ascent", "finetune"):
        for seed, run in ref_runs.items():
            model = run.pruned.clone()
            cfg = reference_unprune_config(method)
            model, trace = unprune(
                model, run.train_data, run.split, cfg,
                SeededRng(seed).split(f"unprune/{method}"),
                test_data=run.test_data,
            )
            out[(method, seed)] = (model, trace)
    return out


def test_criterion_04_unpruning_beats_doing_nothing(
        ref_runs, ref_oracles, unpruned_reference):
    """Mean IoM(M_u, oracle) > mean IoM(M, oracle) and UA gap not worse."""
    all_ok = True
    details = []
    for method in ("gradient_ascent", "finetune"):
        iom_orig, iom_u, gap_orig, gap_u = [], [], [], []
        for seed in REFERENCE_SEEDS:
            run = ref_runs[seed]
            oracle = ref_oracles[(seed, 0.6)]
            model, _ = unpruned_reference[(method, seed)]
            iom_orig.append(iom(MaskPair.from_models(run.pruned, oracle)))
            iom_u.append(iom(MaskPair.from_models(model, oracle)))
            ua_orig = evaluate(run.pruned, run.train_data,
                               run.split.forget_indices)[1]
            ua_oracle = evaluate(oracle, run.train_data,
                                 run.split.forget_indices)[1]
            ua_u = evaluate(model, run.train_data, run.split.forget_indices)[1]
            gap_orig.append(abs(ua_orig - ua_oracle))
            gap_u.append(abs(ua_u - ua_oracle))
            print(f"    [crit 4] {method} seed {seed}: IoM "
                  f"{iom_orig[-1]:.4f} -> {iom_u[-1]:.4f}, UA gap "
                  f"{gap_orig[-1]:.3f} -> {gap_u[-1]:.3f}")
        better_iom = np.mean(iom_u) > np.mean(iom_orig)
        better_ua = np.mean(gap_u) <= np.mean(gap_orig)
        all_ok &= better_iom and better_ua
        details.append(
            f"{method}: dIoM={np.mean(iom_u) - np.mean(iom_orig):+.4f}, "
            f"gap {np.mean(gap_orig):.3f}->{np.mean(gap_u):.3f}"
        )
    assert _verdict(4, all_ok, "; ".join(details))


def test_criterion_05_sparsity_restoration():
    """50 randomized valid configs: final sparsity equals s within 1/N."""
    t0 = time.perf_counter()
    rng = SeededRng(5005)
    data = gen_blobs(SeededRng(55).split("d"), 40, 2, 2, 1.0)
    split = split_delete(data, 0.15, SeededRng(55).split("s"))
    methods = ("noop", "gradient_ascent", "finetune", "fisher_forgetting")
    checked = 0
    for case in range(50):
        hidden = int(rng.integers(5, 20, 1)[0])
        s = float(rng.uniform(0.25, 0.8, 1)[0])
        p = float(rng.uniform(0.01, 0.12, 1)[0])
        t = int(rng.integers(1, 4, 1)[0])
        if s - t * p < 0:
            p = s / (t + 1)
        model = init_model(mlp_specs([2, hidden, 2]), SeededRng(6000 + case))
        prune_magnitude(model, s)
        target_zeros = sparsity_of(model).zero_mask_entries
        cfg = UnpruneConfig(
            s, p, t,
            UnlearnConfig(method=methods[case % 4], steps=2, rate=1e-3,
                          fisher_noise_scale=1e-3, batch_size=16),
        )
        model, trace = unprune(model, data, split, cfg, SeededRng(7000 + case))
        assert sparsity_of(model).zero_mask_entries == target_zeros, case
        checked += 1
    elapsed = time.perf_counter() - t0
    ok = checked == 50 and elapsed < 300.0
    assert _verdict(5, ok, f"{checked}/50 randomized configs restored exactly, "
                           f"{elapsed:.1f}s")


def test_criterion_06_kl_ground_truth(ref_runs, ref_oracles):
    """Self-KL is exactly 0; KL(original, oracle) non-decreasing in sparsity."""
    oracle = ref_oracles[(0, 0.6)]
    self_kl = kl_masked_weights(oracle, oracle)
    assert self_kl == 0.0
    wins = 0
    per_seed = []
    for seed in REFERENCE_SEEDS:
        kls = []
        for sparsity in (0.4, 0.6, 0.95):
            pruned = ref_runs[seed].dense.clone()
            prune_magnitude(pruned, sparsity)
            kls.append(kl_masked_weights(pruned, ref_oracles[(seed, sparsity)]))
        wins += kls[0] <= kls[1] <= kls[2]
        per_seed.append("->".join(f"{k:.3f}" for k in kls))
    ok = wins >= 4
    assert _verdict(6, ok, f"self-KL = {self_kl}; non-decreasing in {wins}/5 "
                           f"seeds ({'; '.join(per_seed)})")


def test_criterion_07_init_strategy_ordering(ref_runs, ref_oracles):
    """Original-initialization un-pruning matches or beats random init on IoM."""
    means = {}
    for strategy in ("original", "random"):
        values = []
        for seed in REFERENCE_SEEDS:
            run = ref_runs[seed]
            model = run.pruned.clone()
            cfg = reference_unprune_config("gradient_ascent", strategy)
            model, _ = unprune(model, run.train_data, run.split, cfg,
                               SeededRng(seed).split("unprune/gradient_ascent"),
                               test_data=run.test_data)
            values.append(iom(MaskPair.from_models(model,
                                                   ref_oracles[(seed, 0.6)])))
        means[strategy] = float(np.mean(values))
    ok = means["original"] >= means["random"]
    detail = (f"mean IoM original={means['original']:.4f} vs "
              f"random={means['random']:.4f}")
    if not ok:
        # The criterion downgrades to qualitative when the ordering fails:
        # raw values are reported either way.
        _verdict(7, False, detail + " (qualitative: ordering not met)")
        pytest.xfail(f"init ordering failed qualitatively: {detail}")
    assert _verdict(7, ok, detail)


def test_criterion_08_running_time_ordering(ref_runs):
    """Un-pruning (GA, T=3) costs at most half of retraining+repruning."""
    run = ref_runs[0]
    t0 = time.perf_counter()
    retrain_reprune(run.train_data, run.split, REF_DIMS, REF_TRAIN,
                    REF_SPARSITY, 0)
    oracle_wall = time.perf_counter() - t0
    model = run.pruned.clone()
    cfg = reference_unprune_config("gradient_ascent")
    t0 = time.perf_counter()
    unprune(model, run.train_data, run.split, cfg,
            SeededRng(0).split("unprune/gradient_ascent"),
            test_data=run.test_data)
    unprune_wall = time.perf_counter() - t0
    ok = unprune_wall <= 0.5 * oracle_wall
    assert _verdict(8, ok, f"unprune {unprune_wall:.3f}s vs retrain+reprune "
                           f"{oracle_wall:.3f}s (ratio "
                           f"{unprune_wall / oracle_wall:.3f})")


def test_criterion_09_mia_fragility(ref_runs):
    """Shadow-ratio sweep swings correctness >= 0.2; chance at ratio 1.0."""
    run = ref_runs[0]
    ratios = [round(0.8 + 0.05 * i, 2) for i in range(9)]
    reports = ratio_sweep(
        run.dense, run.train_data, run.split.forget_indices,
        run.test_data, np.arange(40), ratios, SeededRng(0).split("mia"),
    )
    corr = [r.correctness for r in reports]
    spread = max(corr) - min(corr)

    # Well-generalized model: separable blobs, short clean training.
    rng = SeededRng(100)
    train = gen_blobs(rng.split("data-train"), 200, 2, 2, 0.5)
    test = gen_blobs(rng.split("data-test"), 250, 2, 2, 0.5)
    split = split_delete(train, 0.25, rng.split("delete"))
    model = build_model(REF_DIMS, 100)
    train_with_cfg(model, train, np.arange(train.n), TrainCfg(300, 0.5, 400),
                   SeededRng(100).split("train"))
    report = mia_evaluate(model, train, split.forget_indices, test,
                          np.arange(100), 1.0, SeededRng(100).split("mia-1"))
    ok = spread >= 0.2 and 0.45 <= report.correctness <= 0.55
    assert _verdict(9, ok, f"sweep spread = {spread:.3f} (>= 0.2); "
                           f"well-generalized correctness@1.0 = "
                           f"{report.correctness:.3f}")


def test_criterion_10_determinism(tmp_path):
    """Two runs of the reference grid emit byte-identical CSV and JSON."""
    cfg = reference_config(record_timing=False)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    from unprune.experiment import run_experiment

    report_a = run_experiment(cfg, out_dir=str(out_a))
    report_b = run_experiment(cfg, out_dir=str(out_b))
    assert not report_a.errors and not report_b.errors
    same_csv = (out_a / "results.csv").read_bytes() == \
               (out_b / "results.csv").read_bytes()
    same_json = (out_a / "results.json").read_bytes() == \
                (out_b / "results.json").read_bytes()
    ok = same_csv and same_json
    assert _verdict(10, ok, f"byte-identical CSV: {same_csv}, "
                            f"JSON: {same_json} "
                            f"({len(report_a.rows)} rows)")


def test_criterion_11_structured_variant(struct_runs, struct_oracles):
    """Neuron-level analogues of criteria 4-5 on the 2-32-32-2 network."""
    all_ok = True
    details = []
    for method in ("gradient_ascent", "finetune"):
        iom_orig, iom_u, gap_orig, gap_u = [], [], [], []
        for seed in REFERENCE_SEEDS:
            run = struct_runs[seed]
            oracle = struct_oracles[seed]
            model = run.pruned.clone()
            cfg = structured_unprune_config(method)
            pruned_counts = [int(m.size - m.sum()) for m in run.pruned.masks]
            model, _ = unprune(model, run.train_data, run.split, cfg,
                               SeededRng(seed).split("up"),
                               mode="structured", test_data=run.test_data)
            # Criterion 5 analogue: per-layer pruned counts restored exactly.
            assert [int(m.size - m.sum()) for m in model.masks] == pruned_counts
            iom_orig.append(iom(MaskPair.from_neuron_masks(run.pruned, oracle)))
            iom_u.append(iom(MaskPair.from_neuron_masks(model, oracle)))
            ua_orig = evaluate(run.pruned, run.train_data,
                               run.split.forget_indices)[1]
            ua_oracle = evaluate(oracle, run.train_data,
                                 run.split.forget_indices)[1]
            ua_u = evaluate(model, run.train_data, run.split.forget_indices)[1]
            gap_orig.append(abs(ua_orig - ua_oracle))
            gap_u.append(abs(ua_u - ua_oracle))
            print(f"    [crit 11] {method} seed {seed}: neuron IoM "
                  f"{iom_orig[-1]:.4f} -> {iom_u[-1]:.4f}, UA gap "
                  f"{gap_orig[-1]:.3f} -> {gap_u[-1]:.3f}")
        better_iom = np.mean(iom_u) > np.mean(iom_orig)
        better_ua = np.mean(gap_u) <= np.mean(gap_orig)
        all_ok &= better_iom and better_ua
        details.append(
            f"{method}: dIoM={np.mean(iom_u) - np.mean(iom_orig):+.4f}, "
            f"gap {np.mean(gap_orig):.3f}->{np.mean(gap_u):.3f}"
        )
    assert _verdict(11, all_ok, "; ".join(details))
