"""Single-neuron weight learning: aggregate-label (ALL) and error-trace (ET).

Both rules correlate input spikes with a scalar signal.  ALL gets one signed
bit of feedback per episode (spiked too much / too little / exactly right)
and moves only the top decile of synapses ranked by the eligibility
eps_i = sum_t I_i(t) V(t).  ET gets a per-timebin error trace E(t) and moves
every synapse by lambda * sum_t I_i(t) E(t).  Updates are optionally
momentum-smoothed and always clipped back into [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .neuron import (
    LifParams,
    NeuronParams,
    StateTrace,
    integrate_continuous_grid,
    lif_run,
    run_trace,
)
from .patterns import Episode, EpisodeConfig, PatternSet, episode_drive, generate_episode
from .readout import (
    ErrorTrace,
    SpikeReadout,
    aggregate_error,
    build_error_trace,
    build_error_trace_continuous,
    crossing_bins,
    spike_integral,
    split_readout,
)

WEIGHT_INIT_HIGH = 0.05  # untrained neuron starts mostly silent


def init_weights(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.uniform(0.0, WEIGHT_INIT_HIGH, size=n)


@dataclass
class MomentumState:
    """Carries a fraction gamma_mom of the previous update into the next."""

    prev_delta: np.ndarray
    gamma_mom: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.gamma_mom < 1.0:
            raise ValueError(f"gamma_mom must be in [0, 1), got {self.gamma_mom}")

    @classmethod
    def zeros(cls, n: int, gamma_mom: float = 0.2) -> "MomentumState":
        return cls(np.zeros(n), gamma_mom)


def momentum_apply(raw_delta: np.ndarray, state: MomentumState) -> tuple[np.ndarray, MomentumState]:
    delta = raw_delta + state.gamma_mom * state.prev_delta
    return delta, MomentumState(delta, state.gamma_mom)


def eligibility(inputs: np.ndarray, trace: StateTrace) -> np.ndarray:
    """eps_i = sum_t I_i(t) V(t) for dense per-channel spike series; the
    continuous version integrates trapezoidally over the sample grid."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[1] != len(trace):
        raise ValueError("inputs must be (n_channels, len(trace))")
    if trace.dt == 1.0:
        return inputs @ trace.v_series
    return np.trapezoid(inputs * trace.v_series, dx=trace.dt, axis=1)


def _event_eligibility(episode: Episode, values: np.ndarray, n_channels: int) -> np.ndarray:
    """Sparse form of sum_t I_i(t) * values(t), using the episode's events."""
    return np.bincount(
        episode.raster.channels,
        weights=values[episode.raster.bins],
        minlength=n_channels,
    )


def decile_indices(eligibilities: np.ndarray) -> np.ndarray:
    """Channels in the top tenth by eligibility, ties to the lower index.

    Selects exactly ceil(N/10) synapses, which for distinct values equals
    the strict above-90th-percentile set.
    """
    n = len(eligibilities)
    k = math.ceil(n / 10)
    order = np.lexsort((np.arange(n), -np.asarray(eligibilities)))
    return np.sort(order[:k])


def all_update(
    weights: np.ndarray,
    eligibilities: np.ndarray,
    error_sign: int,
    lam: float,
    momentum: MomentumState | None = None,
) -> tuple[np.ndarray, MomentumState | None]:
    """Move the top-decile synapses by sign * lambda; zero sign means the
    episode was read perfectly and nothing changes, momentum included."""
    if error_sign not in (-1, 0, 1):
        raise ValueError(f"error_sign must be in {{-1, 0, 1}}, got {error_sign}")
    if error_sign == 0:
        return weights, momentum
    raw = np.zeros_like(weights)
    raw[decile_indices(eligibilities)] = error_sign * lam
    if momentum is not None:
        raw, momentum = momentum_apply(raw, momentum)
    return np.clip(weights + raw, 0.0, 1.0), momentum


def et_update(
    weights: np.ndarray,
    inputs: np.ndarray,
    error_trace: ErrorTrace,
    lam: float,
    momentum: MomentumState | None = None,
) -> tuple[np.ndarray, MomentumState | None]:
    """Every synapse moves by lambda * sum_t I_i(t) E(t); no decile gate.

    A perfectly classified episode (E identically zero) changes nothing.
    """
    if error_trace.is_zero():
        return weights, momentum
    inputs = np.asarray(inputs, dtype=float)
    raw = lam * (inputs @ error_trace.e_series)
    if momentum is not None:
        raw, momentum = momentum_apply(raw, momentum)
    return np.clip(weights + raw, 0.0, 1.0), momentum


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    lam: float = 1e-4
    algorithm: str = "ALL"  # or "ET"
    neuron: NeuronParams | LifParams = field(default_factory=lambda: NeuronParams(alpha=0.3))
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    seed: int = 0
    gamma_mom: float = 0.2
    mode: str = "discrete"  # or "continuous" (eta=0 GNM only)
    dt: float = 0.1  # continuous-mode sample step, must divide the timebin

    def validate(self) -> "TrainConfig":
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.lam < 0.0:
            raise ValueError("lambda must be >= 0")
        if self.algorithm not in ("ALL", "ET"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.mode not in ("discrete", "continuous"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "continuous":
            if isinstance(self.neuron, LifParams):
                raise ValueError("continuous mode is defined for the GNM only")
            self.neuron.validate_continuous()
            if abs(round(1.0 / self.dt) - 1.0 / self.dt) > 1e-9:
                raise ValueError("dt must divide the unit timebin")
        elif isinstance(self.neuron, LifParams):
            self.neuron.validate()
        else:
            self.neuron.validate_discrete()
        return self

    def with_(self, **kwargs) -> "TrainConfig":
        return replace(self, **kwargs)


def observe_episode(
    neuron: NeuronParams | LifParams, weights: np.ndarray, episode: Episode
) -> tuple[StateTrace, SpikeReadout]:
    """Simulate one episode and read its output spikes.

    GNM output spikes are upward theta_r crossings; LIF output spikes are
    its own reset events.
    """
    drive = episode_drive(episode, weights)
    if isinstance(neuron, LifParams):
        trace, spike_bins = lif_run(drive, neuron)
        bins = spike_bins
    else:
        trace = run_trace(drive, neuron)
        bins = crossing_bins(trace, neuron.theta_r)
    return trace, split_readout(bins, episode)


def observe_episode_continuous(
    neuron: NeuronParams, weights: np.ndarray, episode: Episode, dt: float
) -> tuple[StateTrace, ErrorTrace, tuple[float, ...]]:
    """Continuous-mode episode simulation on a grid of `dt` per sample.

    Input spikes are unit impulses at integer bin times.  Returns the trace,
    the sampled error trace, and the per-window spike integrals.
    """
    steps = int(round(1.0 / dt))
    grid = np.zeros(episode.length * steps + 1)
    np.add.at(grid, episode.raster.bins * steps, weights[episode.raster.channels])
    trace = integrate_continuous_grid(grid, neuron, dt)
    e, integrals = build_error_trace_continuous(trace, episode, neuron.theta_r)
    return trace, e, integrals


@dataclass(frozen=True)
class TrainResult:
    weights: np.ndarray
    target_history: np.ndarray
    actual_history: np.ndarray

    @property
    def error_history(self) -> np.ndarray:
        return self.actual_history - self.target_history


def train(
    config: TrainConfig,
    pattern_set: PatternSet,
    w0: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> TrainResult:
    """Episode-by-episode training loop; deterministic given config.seed.

    The rng argument overrides the seed-derived stream (used by the sweep
    harness, which derives streams from grid coordinates).
    """
    config.validate()
    if rng is None:
        rng = np.random.default_rng(config.seed)
    n = config.episode.n_channels
    w = init_weights(rng, n) if w0 is None else np.asarray(w0, dtype=float).copy()
    momentum = MomentumState.zeros(n, config.gamma_mom)
    targets = np.zeros(config.epochs, dtype=np.int64)
    actuals = np.zeros(config.epochs, dtype=np.int64)
    for epoch in range(config.epochs):
        episode = generate_episode(rng, pattern_set, config.episode)
        targets[epoch] = episode.target_total
        if config.mode == "continuous":
            trace, e, _ = observe_episode_continuous(config.neuron, w, episode, config.dt)
            actuals[epoch] = round(spike_integral(trace, config.neuron.theta_r))
            if config.algorithm == "ALL":
                sign = aggregate_error(actuals[epoch], episode.target_total)
                if sign != 0:
                    steps = int(round(1.0 / config.dt))
                    eps = np.bincount(
                        episode.raster.channels,
                        weights=trace.v_series[episode.raster.bins * steps],
                        minlength=n,
                    )
                    w, momentum = all_update(w, eps, sign, config.lam, momentum)
            else:
                if not e.is_zero():
                    steps = int(round(1.0 / config.dt))
                    raw = config.lam * np.bincount(
                        episode.raster.channels,
                        weights=e.e_series[episode.raster.bins * steps],
                        minlength=n,
                    )
                    delta, momentum = momentum_apply(raw, momentum)
                    w = np.clip(w + delta, 0.0, 1.0)
            continue
        trace, readout = observe_episode(config.neuron, w, episode)
        actuals[epoch] = readout.total
        if config.algorithm == "ALL":
            sign = aggregate_error(readout.total, episode.target_total)
            if sign != 0:
                eps = _event_eligibility(episode, trace.v_series, n)
                w, momentum = all_update(w, eps, sign, config.lam, momentum)
        else:
            e = build_error_trace(readout, episode)
            if not e.is_zero():
                raw = config.lam * _event_eligibility(episode, e.e_series, n)
                delta, momentum = momentum_apply(raw, momentum)
                w = np.clip(w + delta, 0.0, 1.0)
    return TrainResult(w, targets, actuals)


def save_weights(path, weights: np.ndarray, metadata: dict | None = None) -> None:
    """Text format: "GNM-WEIGHTS v1", N, one full-precision weight per line,
    then "# key=value" metadata comment lines."""
    lines = ["GNM-WEIGHTS v1", str(len(weights))]
    lines.extend(repr(float(w)) for w in weights)
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}={value}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_weights(path) -> tuple[np.ndarray, dict]:
    with open(path) as fh:
        raw = fh.read().splitlines()
    if not raw or raw[0] != "GNM-WEIGHTS v1":
        raise ValueError(f"{path} is not a GNM-WEIGHTS v1 file")
    n = int(raw[1])
    weights = np.array([float(line) for line in raw[2 : 2 + n]])
    metadata = {}
    for line in raw[2 + n :]:
        if line.startswith("# ") and "=" in line:
            key, value = line[2:].split("=", 1)
            metadata[key] = value
    return weights, metadata
