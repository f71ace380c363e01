"""The eta=0 neuron as a chemical reaction network.

Each input channel i is a species I_i; an input spike injects n_mol
molecules of I_i.  Every I_i molecule independently converts to the
potential species V at rate w_i*C or vanishes at rate (1-w_i)*C, and V
molecules decay at rate alpha.  The mean field of this network is exactly
the continuous eta=0 neuron driven by impulses of total weight w_i (after
normalizing counts by n_mol), so finite n_mol exposes copy-number noise
around the deterministic membrane trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .patterns import SpikeRaster

_TIME_EPS = 1e-9


@dataclass(frozen=True)
class ReactionSystem:
    """2N+1 reaction channels plus timed injection events.

    events are (time, channel) pairs; each adds n_mol molecules to I_channel.
    """

    weights: np.ndarray
    alpha: float
    C: float
    n_mol: int
    events: tuple[tuple[float, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        if self.C <= 0.0:
            raise ValueError("conversion rate C must be positive")
        if self.alpha < 0.0:
            raise ValueError("decay rate alpha must be nonnegative")
        if self.n_mol < 1:
            raise ValueError("n_mol must be >= 1")
        events = tuple(sorted((float(t), int(c)) for t, c in self.events))
        for t, c in events:
            if t < 0.0 or not 0 <= c < len(w):
                raise ValueError(f"bad injection event ({t}, {c})")
        object.__setattr__(self, "events", events)

    @property
    def n_inputs(self) -> int:
        return len(self.weights)


def crn_from_weights(weights: np.ndarray, alpha: float, C: float, n_mol: int) -> ReactionSystem:
    return ReactionSystem(weights, alpha, C, n_mol)


def events_from_raster(raster: SpikeRaster) -> tuple[tuple[float, int], ...]:
    """One injection per input spike, at its timebin (bins are time units)."""
    return tuple((float(b), int(c)) for b, c in zip(raster.bins, raster.channels))


@dataclass(frozen=True)
class Trajectory:
    """V sampled on a uniform grid, plus molecule bookkeeping totals.

    The totals satisfy injected = i_remaining + i_discarded + converted and
    v0 + converted = v_final + v_decayed; the ODE reference leaves them 0.
    """

    times: np.ndarray
    v_counts: np.ndarray
    n_mol: int
    i_counts: np.ndarray | None = None
    injected: int = 0
    v_decayed: int = 0
    i_discarded: int = 0
    i_remaining: int = 0
    v_final: int = 0

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("sample times must be strictly increasing")
        if np.any(self.v_counts < 0.0):
            raise ValueError("V counts must be nonnegative")

    @property
    def v_normalized(self) -> np.ndarray:
        return self.v_counts / self.n_mol


def _sample_grid(T: float, sample_dt: float) -> np.ndarray:
    if T <= 0.0 or sample_dt <= 0.0:
        raise ValueError("T and sample_dt must be positive")
    return np.arange(int(round(T / sample_dt)) + 1) * sample_dt


def ssa_run(
    system: ReactionSystem,
    rng: np.random.Generator,
    T: float,
    sample_dt: float,
    v0: int = 0,
    i0: np.ndarray | None = None,
    record_inputs: bool = False,
) -> Trajectory:
    """Exact stochastic simulation interleaved with the injection schedule.

    Direct method: waiting times are exponential in the total propensity
    C*sum(I) + alpha*V; the firing channel is picked hierarchically (input
    group vs V-decay, then the molecule, then its destination), which is
    distribution-identical to enumerating all 2N+1 channels.  A pending
    waiting time is discarded at each injection and redrawn, which is valid
    by memorylessness of the exponential.
    """
    times = _sample_grid(T, sample_dt)
    n = system.n_inputs
    counts = np.zeros(n, dtype=np.int64) if i0 is None else np.asarray(i0, dtype=np.int64).copy()
    i_total = int(counts.sum())
    v = int(v0)
    injected = v_decayed = i_discarded = 0
    v_series = np.zeros(len(times), dtype=np.int64)
    i_series = np.zeros((len(times), n), dtype=np.int64) if record_inputs else None
    w = system.weights
    alpha, C = system.alpha, system.C

    queue = system.events
    idx = 0
    t = 0.0

    def react_until(t, boundary):
        nonlocal i_total, v, v_decayed, i_discarded
        while True:
            a_total = C * i_total + alpha * v
            if a_total <= 0.0:
                return boundary
            tau = rng.exponential(1.0 / a_total)
            if t + tau > boundary:
                return boundary
            t += tau
            if rng.random() * a_total < C * i_total:
                pick = int(rng.integers(i_total))
                species = int(np.searchsorted(np.cumsum(counts), pick, side="right"))
                counts[species] -= 1
                i_total -= 1
                if rng.random() < w[species]:
                    v += 1
                else:
                    i_discarded += 1
            else:
                v -= 1
                v_decayed += 1

    for k, t_sample in enumerate(times):
        while idx < len(queue) and queue[idx][0] <= t_sample + _TIME_EPS:
            t_event, channel = queue[idx]
            t = react_until(t, t_event)
            counts[channel] += system.n_mol
            i_total += system.n_mol
            injected += system.n_mol
            idx += 1
        t = react_until(t, t_sample)
        v_series[k] = v
        if i_series is not None:
            i_series[k] = counts
    return Trajectory(
        times,
        v_series.astype(float),
        system.n_mol,
        i_counts=i_series,
        injected=injected,
        v_decayed=v_decayed,
        i_discarded=i_discarded,
        i_remaining=i_total,
        v_final=v,
    )


def _segment_v(v0: float, s0: float, alpha: float, C: float, tau) -> np.ndarray:
    """V(tau) under dV/dt = s0*exp(-C*t) - alpha*V, exactly."""
    tau = np.asarray(tau, dtype=float)
    ea = np.exp(-alpha * tau)
    if abs(C - alpha) < 1e-12:
        return v0 * ea + s0 * tau * ea
    return v0 * ea + s0 * (ea - np.exp(-C * tau)) / (C - alpha)


def ode_reference(system: ReactionSystem, T: float, sample_dt: float) -> Trajectory:
    """Mean-field trajectory, in closed form segment by segment.

    Only the weighted conversion flux S = sum_i w_i*C*I_i enters V, and S
    itself decays as exp(-C*t) between injections, so each inter-event
    segment is a double exponential; no numerical integrator is involved.
    """
    times = _sample_grid(T, sample_dt)
    v_series = np.zeros(len(times))
    v, s = 0.0, 0.0
    t = 0.0
    queue = system.events
    idx = 0
    for k, t_sample in enumerate(times):
        while idx < len(queue) and queue[idx][0] <= t_sample + _TIME_EPS:
            t_event, channel = queue[idx]
            span = t_event - t
            if span > 0.0:
                v = float(_segment_v(v, s, system.alpha, system.C, span))
                s *= np.exp(-system.C * span)
                t = t_event
            s += system.weights[channel] * system.C * system.n_mol
            idx += 1
        span = t_sample - t
        if span > 0.0:
            v = float(_segment_v(v, s, system.alpha, system.C, span))
            s *= np.exp(-system.C * span)
            t = t_sample
        v_series[k] = v
    return Trajectory(times, v_series, system.n_mol)


@dataclass(frozen=True)
class NoiseStudyResult:
    n_mol: int
    runs: int
    times: np.ndarray
    ode_v: np.ndarray  # normalized
    mean_v: np.ndarray  # normalized mean over runs
    stddev_v: np.ndarray
    rmse: float

    @property
    def stderr_v(self) -> np.ndarray:
        return self.stddev_v / np.sqrt(self.runs)


def noise_study(
    weights: np.ndarray,
    raster: SpikeRaster,
    n_mol_list: list[int],
    runs: int,
    seed: int,
    T: float | None = None,
    sample_dt: float = 0.1,
    alpha: float = 0.2,
    C: float = 10.0,
    keep_trajectories: int = 0,
) -> tuple[list[NoiseStudyResult], dict[int, list[Trajectory]]]:
    """RMSE of the mean normalized SSA trajectory against the ODE reference
    for each molecule count; runs are seeded independently and folded in
    run-index order."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    events = events_from_raster(raster)
    horizon = float(raster.n_bins) if T is None else T
    results = []
    kept: dict[int, list[Trajectory]] = {}
    for j, n_mol in enumerate(n_mol_list):
        system = ReactionSystem(weights, alpha, C, n_mol, events)
        ode = ode_reference(system, horizon, sample_dt)
        acc = np.zeros(len(ode.times))
        acc_sq = np.zeros(len(ode.times))
        kept[n_mol] = []
        for run in range(runs):
            rng = np.random.default_rng(np.random.SeedSequence((seed, j, run)))
            traj = ssa_run(system, rng, horizon, sample_dt)
            vn = traj.v_normalized
            acc += vn
            acc_sq += vn**2
            if run < keep_trajectories:
                kept[n_mol].append(traj)
        mean = acc / runs
        var = np.maximum(acc_sq / runs - mean**2, 0.0)
        stddev = np.sqrt(var)
        rmse = float(np.sqrt(np.mean((mean - ode.v_normalized) ** 2)))
        results.append(
            NoiseStudyResult(n_mol, runs, ode.times, ode.v_normalized, mean, stddev, rmse)
        )
    return results, kept


def write_trajectories_csv(path, trajectories: list[Trajectory], ode: Trajectory) -> None:
    """Rows time,v_normalized,run_id; the ODE reference is run_id -1."""
    with open(path, "w") as fh:
        fh.write("time,v_normalized,run_id\n")
        for t, v in zip(ode.times, ode.v_normalized):
            fh.write(f"{t:.9g},{v:.9g},-1\n")
        for run_id, traj in enumerate(trajectories):
            for t, v in zip(traj.times, traj.v_normalized):
                fh.write(f"{t:.9g},{v:.9g},{run_id}\n")


def write_summary_csv(path, result: NoiseStudyResult) -> None:
    """Rows time,mean,stddev for one molecule-count setting."""
    with open(path, "w") as fh:
        fh.write("time,mean,stddev\n")
        for t, m, s in zip(result.times, result.mean_v, result.stddev_v):
            fh.write(f"{t:.9g},{m:.9g},{s:.9g}\n")
