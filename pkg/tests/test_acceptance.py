"""Acceptance gate: the nine [PRIMARY] behaviours at desk scale.

One test per criterion; each prints a single ACCEPTANCE line with the
measured numbers before asserting, so a full run documents every verdict.
Criteria 1-4 retrain from scratch (about ten minutes together on one core);
the rest are seconds.
"""

import numpy as np
import pytest

from gnmlab.cli import main

pytestmark = pytest.mark.acceptance
from gnmlab.crn import noise_study
from gnmlab.deepnet import gradient_relative_error, random_check_instance
from gnmlab.harness import (
    EVAL_GAP_MEAN,
    SweepGrid,
    aggregate_sweep,
    compare_models,
    eval_rng_for,
    noisy_performance,
    pattern_set_for,
    run_sweep,
    train_job,
    train_rng_for,
)
from gnmlab.learn import (
    TrainConfig,
    all_update,
    init_weights,
    observe_episode_continuous,
    train,
)
from gnmlab.neuron import LifParams, StateTrace
from gnmlab.patterns import EpisodeConfig, generate_episode, generate_pattern
from gnmlab.readout import crossing_bins


def verdict(number: int, name: str, ok: bool, detail: str) -> bool:
    print(f"ACCEPTANCE {number} {name}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)
    return ok


def test_criterion_1_single_pattern_learning():
    # GNM eta=0, alpha=0.3, lambda=1e-4, N=100, M=50, p=0.005, 10000 epochs:
    # mean noisy performance >= 10x the untrained baseline on >= 4 of 5 seeds.
    cap, reps = 1000, 30
    wins = []
    details = []
    for seed in range(5):
        cfg = TrainConfig(epochs=10000, seed=seed)
        ps, res = train_job(cfg, n_classes=1)
        baseline_w = init_weights(train_rng_for(seed, seed), cfg.episode.n_channels)

        def perf(w):
            rng = eval_rng_for(seed, seed)
            return noisy_performance(
                w, cfg.neuron, ps, cap, reps, rng, EVAL_GAP_MEAN, cfg.episode.p
            ).noisy_performance

        trained, baseline = perf(res.weights), perf(baseline_w)
        ratio = trained / baseline
        wins.append(ratio >= 10.0)
        details.append(f"seed {seed}: {trained:.1f}/{baseline:.1f}={ratio:.2f}x")
    ok = sum(wins) >= 4
    assert verdict(1, "single-pattern learning", ok,
                   f"{sum(wins)}/5 seeds at >=10x; " + "; ".join(details))


def test_criterion_2_heatmap_structure():
    # 5x5 (alpha, eta) grid, 3 seeds: performance(0.3, 0) must beat both
    # performance(0.025, 0) and every alpha at eta=0.975.
    grid = SweepGrid(
        alpha_values=(0.025, 0.08, 0.3, 0.6, 1.0),
        eta_values=(0.0, 0.25, 0.5, 0.75, 0.975),
        seeds=(0, 1, 2),
        template=TrainConfig(epochs=10000),
        n_classes=1,
        cap=1000,
        reps=30,
        master_seed=0,
    )
    alphas, etas, matrix = aggregate_sweep(run_sweep(grid))
    mid = matrix[alphas.tolist().index(0.3), etas.tolist().index(0.0)]
    low_alpha = matrix[alphas.tolist().index(0.025), etas.tolist().index(0.0)]
    high_eta_best = np.nanmax(matrix[:, etas.tolist().index(0.975)])
    ok = mid > low_alpha and mid > high_eta_best
    assert verdict(2, "heatmap structure", ok,
                   f"perf(0.3,0)={mid:.1f} vs perf(0.025,0)={low_alpha:.1f} "
                   f"and best at eta=0.975 {high_eta_best:.1f}")


def test_criterion_3_et_beats_all():
    # Two-class task over 10 seeds: ET above ALL on >= 7 seeds.
    template = TrainConfig(epochs=10000)
    res = compare_models(
        {"gnm-all": template.with_(algorithm="ALL"),
         "gnm-et": template.with_(algorithm="ET")},
        seeds=tuple(range(10)), n_classes=2, cap=1000, reps=30, master_seed=0,
    )
    table = res.per_seed()
    et_wins = sum(1 for s in table if table[s]["gnm-et"] > table[s]["gnm-all"])
    ok = et_wins >= 7
    assert verdict(3, "ET vs ALL", ok,
                   f"ET higher on {et_wins}/10 seeds; means "
                   f"ET={res.mean('gnm-et'):.1f} ALL={res.mean('gnm-all'):.1f}")


def test_criterion_4_lif_below_gnm():
    # Three-class task: LIF (refractory 0, hard reset) below GNM on >= 7/10.
    res = compare_models(
        {"gnm": TrainConfig(epochs=10000),
         "lif": TrainConfig(epochs=10000, neuron=LifParams(alpha=0.3))},
        seeds=tuple(range(10)), n_classes=3, cap=1000, reps=30, master_seed=0,
    )
    table = res.per_seed()
    lif_lower = sum(1 for s in table if table[s]["lif"] < table[s]["gnm"])
    ok = lif_lower >= 7
    assert verdict(4, "LIF below GNM", ok,
                   f"LIF lower on {lif_lower}/10 seeds; means "
                   f"LIF={res.mean('lif'):.1f} GNM={res.mean('gnm'):.1f}")


def test_criterion_5_continuous_readout():
    # Continuous-time GNM trained on two classes: held-out spike integrals
    # round to 1 and 2 for the respective classes in >= 8 of 10 presentations.
    seed = 0
    cfg = TrainConfig(epochs=10000, mode="continuous", dt=0.1, seed=seed)
    ps = pattern_set_for(seed, seed, 2, cfg.episode)
    res = train(cfg, ps, rng=train_rng_for(seed, seed))
    rng = eval_rng_for(seed, seed)
    got = {1: [], 2: []}
    while len(got[1]) < 10 or len(got[2]) < 10:
        ep = generate_episode(rng, ps, cfg.episode)
        _, _, integrals = observe_episode_continuous(cfg.neuron, res.weights, ep, cfg.dt)
        for label, s in zip(ep.window_labels, integrals):
            if len(got[label]) < 10:
                got[label].append(s)
    hits = {k: int(np.sum(np.round(got[k]) == k)) for k in (1, 2)}
    ok = hits[1] >= 8 and hits[2] >= 8
    assert verdict(5, "continuous readout", ok,
                   f"class 1: {hits[1]}/10 round to 1 (mean S={np.mean(got[1]):.2f}); "
                   f"class 2: {hits[2]}/10 round to 2 (mean S={np.mean(got[2]):.2f})")


def test_criterion_6_crn_convergence():
    # C=10, alpha=0.2, 100 SSA runs per setting: RMSE strictly decreasing over
    # n_mol 25 -> 100 -> 500, and n_mol=500 within 3 stderr at >= 95% of grid.
    rng = np.random.default_rng(7)
    cfg = EpisodeConfig()
    pattern = generate_pattern(rng, cfg.n_channels, cfg.pattern_bins, cfg.p)
    weights = init_weights(rng, cfg.n_channels) + 0.4
    results, _ = noise_study(weights, pattern, [25, 100, 500], runs=100, seed=0,
                             alpha=0.2, C=10.0)
    rmses = [r.rmse for r in results]
    fine = results[-1]
    frac = float(np.mean(np.abs(fine.mean_v - fine.ode_v) <= 3 * fine.stderr_v))
    ok = rmses[0] > rmses[1] > rmses[2] and frac >= 0.95
    assert verdict(6, "CRN convergence", ok,
                   f"rmse {rmses[0]:.4f} > {rmses[1]:.4f} > {rmses[2]:.4f}; "
                   f"500-molecule coverage {frac:.1%}")


def test_criterion_7_gradient_check():
    # Analytic vs central finite-difference gradients (step 1e-5) on 20 small
    # random instances: relative error < 1e-4 on every one.
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        n_inputs = int(rng.integers(1, 6))
        net, inputs, e_series = random_check_instance(
            rng, n_inputs=n_inputs, n_hidden=2, n_bins=10
        )
        worst = max(worst, gradient_relative_error(net, inputs, e_series, step=1e-5))
    ok = worst < 1e-4
    assert verdict(7, "gradient check", ok, f"worst relative error {worst:.2e} over 20")


def test_criterion_8_oracle_equivalence():
    # count_crossings against a naive scan on 1000 random traces, and the
    # decile gate moving exactly ceil(N/10) synapses on 1000 distinct vectors.
    rng = np.random.default_rng(77)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        v = rng.uniform(0.0, 2.0, size=n)
        v0 = float(rng.uniform(0.0, 2.0))
        theta = float(rng.uniform(0.1, 1.9))
        zeros = np.zeros(n)
        got = crossing_bins(StateTrace(v, zeros, zeros, dt=1.0, v_init=v0), theta)
        prev = v0
        want = []
        for t, x in enumerate(v):
            if prev < theta <= x:
                want.append(t)
            prev = x
        if got.tolist() != want:
            mismatches += 1
    wrong_sizes = 0
    for _ in range(1000):
        n = int(rng.integers(2, 300))
        elig = rng.permutation(n).astype(float)  # distinct by construction
        w = np.full(n, 0.5)
        updated, _ = all_update(w, elig, 1, 1e-3)
        if int(np.sum(updated != w)) != -(-n // 10):
            wrong_sizes += 1
    ok = mismatches == 0 and wrong_sizes == 0
    assert verdict(8, "oracle equivalence", ok,
                   f"{mismatches}/1000 crossing mismatches, "
                   f"{wrong_sizes}/1000 decile-size mismatches")


def test_criterion_9_cli_determinism(tmp_path, capsys):
    # Every CLI command rerun with identical options and seed must produce
    # byte-identical output files.
    tiny = ["--channels", "20", "--pattern-bins", "10",
            "--episode-length", "150", "--spike-prob", "0.02"]
    w = tmp_path / "w.txt"
    assert main(["train", *tiny, "--epochs", "10", "--weights-out", str(w)]) == 0
    reruns = {
        "train": (["train", *tiny, "--epochs", "10", "--weights-out"], "t{}.txt"),
        "eval": (["eval", "--weights", str(w), "--cap", "80", "--reps", "3",
                  "--trace-out"], "e{}.csv"),
        "sweep": (["sweep", *tiny, "--epochs", "5", "--alphas", "0.3,0.6",
                   "--etas", "0,0.5", "--seeds", "0", "--cap", "80",
                   "--reps", "3", "--out"], "s{}.csv"),
        "compare": (["compare", *tiny, "--epochs", "5", "--models",
                     "gnm-all,lif", "--seeds", "0,1", "--cap", "80",
                     "--reps", "3", "--out"], "c{}.csv"),
        "bp-train": (["bp-train", *tiny, "--epochs", "4", "--n-hidden", "3",
                      "--net-out"], "n{}.txt"),
    }
    stable = []
    for name, (args, pattern) in reruns.items():
        paths = [tmp_path / pattern.format(k) for k in (1, 2)]
        for path in paths:
            assert main([*args, str(path)]) == 0
        stable.append(paths[0].read_bytes() == paths[1].read_bytes())
    crn_dirs = [tmp_path / f"crn{k}" for k in (1, 2)]
    for d in crn_dirs:
        assert main(["crn", "--channels", "5", "--pattern-bins", "6",
                     "--spike-prob", "0.1", "--n-mol", "10", "--runs", "3",
                     "--horizon", "4", "--out-dir", str(d)]) == 0
    stable.append(
        (crn_dirs[0] / "crn_summary_10.csv").read_bytes()
        == (crn_dirs[1] / "crn_summary_10.csv").read_bytes()
        and (crn_dirs[0] / "crn_trajectories_10.csv").read_bytes()
        == (crn_dirs[1] / "crn_trajectories_10.csv").read_bytes()
    )
    capsys.readouterr()
    ok = all(stable)
    names = list(reruns.keys()) + ["crn"]
    detail = ", ".join(f"{n}={'ok' if s else 'DIFFERS'}" for n, s in zip(names, stable))
    assert verdict(9, "CLI determinism", ok, detail)
