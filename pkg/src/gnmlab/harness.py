"""Experiment orchestration: noisy-performance evaluation, parameter sweeps
over (alpha, eta), and model comparisons.

Noisy performance is the number of timebins a trained neuron survives a
stream of background noise with randomly interspersed target patterns
before its first mistake, capped and averaged over repetitions.  A mistake
is either a readout spike during noise (charged at its bin) or a pattern
window whose spike count misses its class label (charged when the window
ends).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .learn import TrainConfig, observe_episode, train
from .neuron import LifParams, NeuronParams, StateTrace
from .patterns import Episode, EpisodeConfig, PatternSet, assemble_episode, make_pattern_set

# Mean geometric gap (in bins) between pattern placements in the evaluation
# stream.  Chosen so the untrained baseline stays an order of magnitude
# under the survival cap; sparser streams would let a silent neuron coast.
EVAL_GAP_MEAN = 25.0

MST_REFERENCE_EPOCHS = 377  # reported mean of the reference tempotron; not recomputed


@dataclass(frozen=True)
class EvalResult:
    survivals: np.ndarray  # timebins survived, one per repetition
    cap: int

    def __post_init__(self):
        s = np.asarray(self.survivals, dtype=float)
        object.__setattr__(self, "survivals", s)
        if np.any(s < 0) or np.any(s > self.cap):
            raise ValueError("survivals must lie in [0, cap]")

    @property
    def repetitions(self) -> int:
        return len(self.survivals)

    @property
    def noisy_performance(self) -> float:
        return float(np.mean(self.survivals))


def build_eval_stream(
    rng: np.random.Generator,
    pattern_set: PatternSet,
    cap: int,
    gap_mean: float = EVAL_GAP_MEAN,
    p: float = 0.005,
) -> Episode:
    """One evaluation episode of `cap` bins: geometric gaps (mean gap_mean,
    minimum 1) between pattern windows, patterns drawn uniformly."""
    if gap_mean < 1.0:
        raise ValueError("gap_mean must be >= 1")
    m = pattern_set.n_bins
    cfg = EpisodeConfig(
        n_channels=pattern_set.n_channels,
        pattern_bins=m,
        length=cap,
        p=p,
    )
    windows = []
    pos = 0
    while True:
        gap = int(rng.geometric(1.0 / gap_mean))
        start = pos + gap
        if start + m > cap:
            break
        windows.append((start, int(rng.integers(len(pattern_set)))))
        pos = start + m
    return assemble_episode(rng, pattern_set, cfg, windows)


def survival_bins(readout, episode: Episode, cap: int) -> int:
    """Timebins survived before the first failure in one evaluation episode."""
    fail_at = cap
    if readout.noise_crossings.size:
        fail_at = min(fail_at, int(readout.noise_crossings[0]))
    for (start, _), label, count in zip(
        episode.windows, episode.window_labels, readout.per_window_counts
    ):
        if count != label:
            fail_at = min(fail_at, start + episode.pattern_bins)
    return fail_at


def noisy_performance(
    weights: np.ndarray,
    neuron: NeuronParams | LifParams,
    pattern_set: PatternSet,
    cap: int,
    reps: int,
    rng: np.random.Generator,
    gap_mean: float = EVAL_GAP_MEAN,
    p: float = 0.005,
) -> EvalResult:
    if reps < 1:
        raise ValueError("reps must be >= 1")
    survivals = np.zeros(reps)
    for rep in range(reps):
        episode = build_eval_stream(rng, pattern_set, cap, gap_mean, p)
        _, readout = observe_episode(neuron, weights, episode)
        survivals[rep] = survival_bins(readout, episode, cap)
    return EvalResult(survivals, cap)


@dataclass(frozen=True)
class SweepGrid:
    alpha_values: tuple[float, ...]
    eta_values: tuple[float, ...]
    seeds: tuple[int, ...]
    template: TrainConfig
    n_classes: int = 1
    cap: int = 1000
    reps: int = 30
    gap_mean: float = EVAL_GAP_MEAN
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alpha_values", tuple(float(a) for a in self.alpha_values))
        object.__setattr__(self, "eta_values", tuple(float(e) for e in self.eta_values))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        for a in self.alpha_values:
            for e in self.eta_values:
                self.template.neuron.with_(alpha=a, eta=e).validate_discrete()

    @property
    def size(self) -> int:
        return len(self.alpha_values) * len(self.eta_values) * len(self.seeds)


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    eta: float
    seed: int
    noisy_perf: float  # nan for a failed grid point
    cap: int
    error: str | None = None


# Stream tags: one SeedSequence namespace per purpose so that adding rng
# draws to one phase never perturbs another.
_PATTERN_STREAM = 1
_TRAIN_STREAM = 2
_EVAL_STREAM = 3


def _pattern_rng(master_seed: int, seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, _PATTERN_STREAM, seed)))


def sweep_point(grid: SweepGrid, a_idx: int, e_idx: int, seed: int) -> SweepRow:
    """Train and evaluate one grid point; independent of every other point."""
    alpha = grid.alpha_values[a_idx]
    eta = grid.eta_values[e_idx]
    try:
        config = grid.template.with_(
            neuron=grid.template.neuron.with_(alpha=alpha, eta=eta), seed=seed
        ).validate()
        pattern_set = make_pattern_set(_pattern_rng(grid.master_seed, seed), grid.n_classes, config.episode)
        train_rng = np.random.default_rng(
            np.random.SeedSequence((grid.master_seed, _TRAIN_STREAM, a_idx, e_idx, seed))
        )
        result = train(config, pattern_set, rng=train_rng)
        eval_rng = np.random.default_rng(
            np.random.SeedSequence((grid.master_seed, _EVAL_STREAM, a_idx, e_idx, seed))
        )
        perf = noisy_performance(
            result.weights, config.neuron, pattern_set, grid.cap, grid.reps,
            eval_rng, grid.gap_mean, config.episode.p,
        )
        return SweepRow(alpha, eta, seed, perf.noisy_performance, grid.cap)
    except Exception as exc:  # a bad grid point must not abort the sweep
        return SweepRow(alpha, eta, seed, float("nan"), grid.cap, error=str(exc))


def run_sweep(grid: SweepGrid, progress=None) -> list[SweepRow]:
    rows = []
    for a_idx in range(len(grid.alpha_values)):
        for e_idx in range(len(grid.eta_values)):
            for seed in grid.seeds:
                rows.append(sweep_point(grid, a_idx, e_idx, seed))
                if progress is not None:
                    progress(rows[-1])
    return rows


def aggregate_sweep(rows: list[SweepRow]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seed-mean performance matrix indexed by (alpha, eta), sorted values."""
    alphas = np.array(sorted({r.alpha for r in rows}))
    etas = np.array(sorted({r.eta for r in rows}))
    sums = np.zeros((len(alphas), len(etas)))
    counts = np.zeros((len(alphas), len(etas)))
    for r in rows:
        if np.isnan(r.noisy_perf):
            continue
        i = int(np.searchsorted(alphas, r.alpha))
        j = int(np.searchsorted(etas, r.eta))
        sums[i, j] += r.noisy_perf
        counts[i, j] += 1
    with np.errstate(invalid="ignore"):
        return alphas, etas, sums / counts


def residuals(etas: np.ndarray, perf_matrix: np.ndarray) -> np.ndarray:
    """Best-over-alpha performance per eta, relative to the eta=0 column.

    perf_matrix is (n_alpha, n_eta); etas must include 0.
    """
    etas = np.asarray(etas, dtype=float)
    zero_cols = np.nonzero(etas == 0.0)[0]
    if zero_cols.size == 0:
        raise ValueError("residuals need the eta=0 column as baseline")
    best = np.nanmax(perf_matrix, axis=0)
    return best - best[zero_cols[0]]


def write_sweep_csv(path, rows: list[SweepRow], metadata: dict | None = None) -> None:
    with open(path, "w") as fh:
        for key, value in (metadata or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write("alpha,eta,seed,noisy_perf,cap\n")
        for r in rows:
            fh.write(f"{r.alpha:.9g},{r.eta:.9g},{r.seed},{r.noisy_perf:.9g},{r.cap}\n")


def read_sweep_csv(path) -> list[SweepRow]:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("alpha,"):
                continue
            a, e, s, p, c = line.split(",")
            rows.append(SweepRow(float(a), float(e), int(s), float(p), int(c)))
    return rows


def train_job(config: TrainConfig, n_classes: int, master_seed: int | None = None):
    """Seed-derived pattern set plus a training run, as the CLI wires them.

    Streams: patterns from (master, 1, seed), training episodes from
    (master, 2, seed); master defaults to the config seed.
    """
    master = config.seed if master_seed is None else master_seed
    pattern_set = make_pattern_set(_pattern_rng(master, config.seed), n_classes, config.episode)
    train_rng = np.random.default_rng(
        np.random.SeedSequence((master, _TRAIN_STREAM, config.seed))
    )
    return pattern_set, train(config, pattern_set, rng=train_rng)


def eval_rng_for(master_seed: int, seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, _EVAL_STREAM, seed)))


def train_rng_for(master_seed: int, seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, _TRAIN_STREAM, seed)))


def pattern_set_for(master_seed: int, seed: int, n_classes: int, cfg: EpisodeConfig) -> PatternSet:
    return make_pattern_set(_pattern_rng(master_seed, seed), n_classes, cfg)


@dataclass(frozen=True)
class ComparisonRow:
    model: str
    seed: int
    noisy_perf: float


@dataclass(frozen=True)
class ComparisonResult:
    rows: tuple[ComparisonRow, ...]
    models: tuple[str, ...]

    def per_seed(self) -> dict[int, dict[str, float]]:
        table: dict[int, dict[str, float]] = {}
        for r in self.rows:
            table.setdefault(r.seed, {})[r.model] = r.noisy_perf
        return table

    def win_counts(self) -> dict[str, int]:
        wins = {m: 0 for m in self.models}
        for scores in self.per_seed().values():
            best = max(scores.values())
            winners = [m for m, v in scores.items() if v == best]
            if len(winners) == 1:
                wins[winners[0]] += 1
        return wins

    def mean(self, model: str) -> float:
        vals = [r.noisy_perf for r in self.rows if r.model == model]
        return float(np.mean(vals))

    def ratio(self, numerator: str, denominator: str) -> float:
        return self.mean(numerator) / self.mean(denominator)


def noisy_performance_net(
    net,
    pattern_set: PatternSet,
    cap: int,
    reps: int,
    rng: np.random.Generator,
    gap_mean: float = EVAL_GAP_MEAN,
    p: float = 0.005,
) -> EvalResult:
    """noisy_performance for a trained layered net; output spikes are the
    readout-threshold crossings of the output neuron."""
    from .deepnet import net_forward_episode
    from .readout import crossing_bins, split_readout

    if reps < 1:
        raise ValueError("reps must be >= 1")
    survivals = np.zeros(reps)
    for rep in range(reps):
        episode = build_eval_stream(rng, pattern_set, cap, gap_mean, p)
        trace = net_forward_episode(net, episode).out_trace
        readout = split_readout(crossing_bins(trace, net.out_params.theta_r), episode)
        survivals[rep] = survival_bins(readout, episode, cap)
    return EvalResult(survivals, cap)


def compare_models(
    configs: dict,
    seeds: tuple[int, ...],
    n_classes: int,
    cap: int = 1000,
    reps: int = 30,
    gap_mean: float = EVAL_GAP_MEAN,
    master_seed: int = 0,
    progress=None,
) -> ComparisonResult:
    """Train every configuration on every seed and evaluate each on the same
    per-seed pattern set and evaluation stream.

    configs maps model names to TrainConfig (single neuron) or BpConfig
    (layered net) templates.
    """
    from .deepnet import BpConfig, bp_train

    if len(configs) < 2:
        raise ValueError("compare_models needs at least two configurations")
    rows = []
    for seed in seeds:
        for m_idx, (name, template) in enumerate(configs.items()):
            pattern_set = make_pattern_set(
                _pattern_rng(master_seed, seed), n_classes, template.episode
            )
            train_rng = np.random.default_rng(
                np.random.SeedSequence((master_seed, _TRAIN_STREAM, m_idx, seed))
            )
            eval_rng = np.random.default_rng(
                np.random.SeedSequence((master_seed, _EVAL_STREAM, seed))
            )
            if isinstance(template, BpConfig):
                bp = bp_train(template, pattern_set, rng=train_rng)
                perf = noisy_performance_net(
                    bp.net, pattern_set, cap, reps, eval_rng, gap_mean, template.episode.p
                )
            else:
                config = template.with_(seed=seed).validate()
                result = train(config, pattern_set, rng=train_rng)
                perf = noisy_performance(
                    result.weights, config.neuron, pattern_set, cap, reps,
                    eval_rng, gap_mean, config.episode.p,
                )
            rows.append(ComparisonRow(name, seed, perf.noisy_performance))
            if progress is not None:
                progress(rows[-1])
    return ComparisonResult(tuple(rows), tuple(configs.keys()))


def write_compare_csv(path, result: ComparisonResult, metadata: dict | None = None) -> None:
    with open(path, "w") as fh:
        for key, value in (metadata or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write("model,seed,noisy_perf\n")
        for r in result.rows:
            fh.write(f"{r.model},{r.seed},{r.noisy_perf:.9g}\n")


def write_trace_csv(path, trace: StateTrace, theta_r: float) -> None:
    """Membrane trace rows t,v,r,d with the readout threshold recorded as a
    leading comment so plots can draw it."""
    with open(path, "w") as fh:
        fh.write(f"# theta_r={theta_r:.9g}\n")
        fh.write(f"# dt={trace.dt:.9g}\n")
        fh.write("t,v,r,d\n")
        for k in range(len(trace)):
            t = k * trace.dt
            fh.write(
                f"{t:.9g},{trace.v_series[k]:.9g},{trace.r_series[k]:.9g},{trace.d_series[k]:.9g}\n"
            )
