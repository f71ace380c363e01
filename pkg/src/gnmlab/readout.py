"""Reading output spikes off a membrane trace and turning them into errors.

In the discrete model an output spike is an upward crossing of the readout
threshold theta_r: bin t spikes iff V(t-1) < theta_r <= V(t), where the
predecessor of the first bin is the initial potential.  In the continuous
model the output is the spike integral S = integral of V over the
super-threshold segments; the class estimate is round(S).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .neuron import StateTrace
from .patterns import Episode


def crossing_bins(trace: StateTrace, theta_r: float, window: tuple[int, int] | None = None) -> np.ndarray:
    """Bins where V crosses theta_r from below, optionally restricted to
    [window[0], window[1])."""
    if len(trace) == 0:
        raise ValueError("cannot read spikes off an empty trace")
    v = trace.v_series
    prev = np.empty_like(v)
    prev[0] = trace.v_init
    prev[1:] = v[:-1]
    hits = np.nonzero((prev < theta_r) & (v >= theta_r))[0]
    if window is not None:
        start, end = window
        if start < 0 or end > len(v):
            raise ValueError(f"window {window} outside trace of length {len(v)}")
        hits = hits[(hits >= start) & (hits < end)]
    return hits


def count_crossings(trace: StateTrace, theta_r: float, window: tuple[int, int] | None = None) -> int:
    return int(crossing_bins(trace, theta_r, window).size)


@dataclass(frozen=True)
class SpikeReadout:
    """Threshold crossings of one episode, split by pattern window.

    per_window_counts is aligned with episode.windows; noise_crossings are
    the crossing bins outside every window.  Counts partition: total
    crossings = sum of window counts + len(noise_crossings).
    """

    crossings: np.ndarray
    per_window_counts: tuple[int, ...]
    noise_crossings: np.ndarray

    @property
    def total(self) -> int:
        return int(self.crossings.size)


def split_readout(bins: np.ndarray, episode: Episode) -> SpikeReadout:
    """Partition explicit output-spike bins into per-window counts and noise."""
    in_any = np.zeros(episode.length, dtype=bool)
    counts = []
    for start, _ in episode.windows:
        sel = (bins >= start) & (bins < start + episode.pattern_bins)
        counts.append(int(np.count_nonzero(sel)))
        in_any[start : start + episode.pattern_bins] = True
    noise = bins[~in_any[bins]] if bins.size else bins
    return SpikeReadout(bins, tuple(counts), noise)


def read_episode(trace: StateTrace, episode: Episode, theta_r: float) -> SpikeReadout:
    if len(trace) != episode.length:
        raise ValueError("trace length does not match episode length")
    return split_readout(crossing_bins(trace, theta_r), episode)


def spike_integral(
    trace: StateTrace,
    theta_r: float,
    t_start: float | None = None,
    t_end: float | None = None,
) -> float:
    """Integral of V over samples with V >= theta_r, trapezoidal in dt.

    Sub-threshold samples contribute zero, so a segment entering or leaving
    the super-threshold region is charged half its boundary sample.
    """
    if len(trace) == 0:
        raise ValueError("cannot integrate an empty trace")
    v = trace.v_series
    lo = 0 if t_start is None else max(0, int(round(t_start / trace.dt)))
    hi = len(v) if t_end is None else min(len(v), int(round(t_end / trace.dt)) + 1)
    seg = v[lo:hi]
    if seg.size < 2:
        return 0.0
    integrand = np.where(seg >= theta_r, seg, 0.0)
    return float(np.trapezoid(integrand, dx=trace.dt))


def aggregate_error(actual_total: int, target_total: int) -> int:
    """Sign of the end-of-episode feedback: -1 spiked too often, +1 too
    rarely, 0 exactly right (no update)."""
    if actual_total > target_total:
        return -1
    if actual_total < target_total:
        return 1
    return 0


@dataclass(frozen=True)
class ErrorTrace:
    """Per-timebin error signal E(t); zero wherever the episode was read
    correctly."""

    e_series: np.ndarray

    def is_zero(self) -> bool:
        return not np.any(self.e_series)


def build_error_trace(readout: SpikeReadout, episode: Episode) -> ErrorTrace:
    """Discrete error trace: each pattern window with target k and count c
    carries E = (k - c)/M on all of its M bins; every erroneous noise
    crossing carries a unit negative impulse at its bin."""
    e = np.zeros(episode.length)
    m = episode.pattern_bins
    for (start, _), target, count in zip(
        episode.windows, episode.window_labels, readout.per_window_counts
    ):
        e[start : start + m] = (target - count) / m
    e[readout.noise_crossings] = -1.0
    return ErrorTrace(e)


def build_error_trace_continuous(
    trace: StateTrace, episode: Episode, theta_r: float
) -> tuple[ErrorTrace, tuple[float, ...]]:
    """Continuous analogue on the sample grid of `trace`.

    Each window carries (k - S_w)/M where S_w is its spike integral; noise
    samples at or above theta_r carry -1.  Returns the trace and the
    per-window integrals.
    """
    n = len(trace)
    times = np.arange(n) * trace.dt
    e = np.zeros(n)
    m = episode.pattern_bins
    in_any = np.zeros(n, dtype=bool)
    integrals = []
    for (start, _), target in zip(episode.windows, episode.window_labels):
        s_w = spike_integral(trace, theta_r, start, start + m)
        integrals.append(s_w)
        sel = (times >= start - 1e-9) & (times < start + m - 1e-9)
        e[sel] = (target - s_w) / m
        in_any |= sel
    noisy = ~in_any & (trace.v_series >= theta_r)
    e[noisy] = -1.0
    return ErrorTrace(e), tuple(integrals)
