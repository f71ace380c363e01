"""Spike readout: crossing detection, window splitting, error traces."""

import numpy as np
import pytest

from gnmlab.neuron import StateTrace
from gnmlab.patterns import Episode, SpikeRaster
from gnmlab.readout import (
    aggregate_error,
    build_error_trace,
    build_error_trace_continuous,
    count_crossings,
    crossing_bins,
    read_episode,
    spike_integral,
    split_readout,
)


def make_trace(v, dt=1.0, v_init=0.0):
    v = np.asarray(v, dtype=float)
    zeros = np.zeros_like(v)
    return StateTrace(v, zeros, zeros, dt=dt, v_init=v_init)


def make_episode(length, windows, labels, pattern_bins=50):
    raster = SpikeRaster(1, length, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))
    return Episode(raster, pattern_bins, tuple(windows), tuple(labels))


def brute_crossings(v, theta, v_init=0.0):
    prev = v_init
    hits = []
    for t, x in enumerate(v):
        if prev < theta <= x:
            hits.append(t)
        prev = x
    return hits


def test_crossings_hand_case():
    # Up at bin 1, down at 2, up again at 3: two distinct crossings.  Staying
    # at or above threshold is one event until V dips back below.
    bins = crossing_bins(make_trace([0.0, 1.5, 0.5, 1.5]), 1.0)
    assert bins.tolist() == [1, 3]


def test_crossings_start_above_threshold():
    # v_init at threshold means the trace never rises through it.
    assert count_crossings(make_trace([1.2, 1.3, 1.4], v_init=1.0), 1.0) == 0
    # From resting potential the same trace crosses once at bin 0.
    assert count_crossings(make_trace([1.2, 1.3, 1.4]), 1.0) == 1


def test_crossings_match_brute_force():
    rng = np.random.default_rng(13)
    for _ in range(300):
        v = rng.uniform(0.0, 2.0, size=rng.integers(1, 40))
        theta = rng.uniform(0.2, 1.8)
        assert crossing_bins(make_trace(v), theta).tolist() == brute_crossings(v, theta)


def test_crossings_window_restriction():
    v = [0.0, 1.5, 0.5, 1.5, 0.0, 1.5]
    assert crossing_bins(make_trace(v), 1.0, window=(2, 5)).tolist() == [3]
    with pytest.raises(ValueError):
        crossing_bins(make_trace(v), 1.0, window=(0, 7))


def test_empty_trace_rejected():
    with pytest.raises(ValueError):
        crossing_bins(make_trace([]), 1.0)
    with pytest.raises(ValueError):
        spike_integral(make_trace([]), 1.0)


def test_split_readout_partitions_counts():
    rng = np.random.default_rng(29)
    ep = make_episode(400, [(50, 0), (200, 1)], [1, 2])
    for _ in range(100):
        bins = np.unique(rng.integers(0, 400, size=rng.integers(0, 25)))
        ro = split_readout(bins, ep)
        assert ro.total == sum(ro.per_window_counts) + ro.noise_crossings.size
        for b in ro.noise_crossings:
            assert not (50 <= b < 100 or 200 <= b < 250)


def test_read_episode_counts_per_window():
    ep = make_episode(300, [(100, 0)], [2])
    v = np.zeros(300)
    v[[110, 130]] = 1.5  # two isolated crossings inside the window
    v[20] = 1.5  # one noise crossing
    ro = read_episode(make_trace(v), ep, 1.0)
    assert ro.per_window_counts == (2,)
    assert ro.noise_crossings.tolist() == [20]
    assert ro.total == 3
    with pytest.raises(ValueError):
        read_episode(make_trace(v[:200]), ep, 1.0)


def test_aggregate_error_sign():
    assert aggregate_error(5, 3) == -1
    assert aggregate_error(2, 2) == 0
    assert aggregate_error(0, 1) == 1


def test_spike_integral_constant_segment():
    # V = 2 held for 1 time unit integrates to 2; below threshold gives 0.
    n = 101
    dt = 0.01
    tr = make_trace(np.full(n, 2.0), dt=dt)
    assert abs(spike_integral(tr, 1.0) - 2.0) < 1e-9
    assert spike_integral(tr, 2.5) == 0.0


def test_spike_integral_window_slicing():
    dt = 0.1
    v = np.zeros(100)
    v[30:40] = 3.0  # t in [3.0, 4.0)
    tr = make_trace(v, dt=dt)
    # Hand trapezoids: the whole trace sees [0, 3 x10, 0] = 3.0; slicing at
    # [3.0, 4.0] drops the entering ramp's half-charge: [3 x10, 0] = 2.85.
    assert abs(spike_integral(tr, 1.0) - 3.0) < 1e-9
    assert abs(spike_integral(tr, 1.0, 3.0, 4.0) - 2.85) < 1e-9
    assert abs(spike_integral(tr, 1.0, 2.0, 5.0) - 3.0) < 1e-9
    assert spike_integral(tr, 1.0, 5.0, 6.0) == 0.0


def test_spike_integral_dt_refinement():
    # The masked trapezoid is first order in dt (the threshold crossing falls
    # between samples), so halving dt should roughly halve the error.
    def bump(dt):
        t = np.arange(0.0, 4.0 + dt / 2, dt)
        return make_trace(1.5 * np.exp(-((t - 2.0) ** 2)), dt=dt)

    ref = spike_integral(bump(0.0005), 1.0)
    errs = [abs(spike_integral(bump(dt), 1.0) - ref) for dt in (0.04, 0.02, 0.01)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.02


def test_error_trace_hand_case():
    # Window of 50 bins, target 2, zero crossings: E = +2/50 on the window.
    # A noise crossing at bin 7 carries a unit negative impulse.
    ep = make_episode(200, [(100, 0)], [2])
    v = np.zeros(200)
    v[7] = 1.5
    ro = read_episode(make_trace(v), ep, 1.0)
    e = build_error_trace(ro, ep).e_series
    assert abs(e[100] - 0.04) < 1e-12
    assert np.allclose(e[100:150], 0.04)
    assert e[7] == -1.0
    assert not np.any(e[:7]) and not np.any(e[8:100]) and not np.any(e[150:])


def test_error_trace_zero_when_perfect():
    ep = make_episode(200, [(100, 0)], [1])
    v = np.zeros(200)
    v[120] = 1.5
    ro = read_episode(make_trace(v), ep, 1.0)
    assert build_error_trace(ro, ep).is_zero()


def test_error_trace_window_sum_is_residual():
    # Sum of E over a window recovers k - c for any count c.
    ep = make_episode(300, [(60, 0)], [3])
    for c in range(5):
        v = np.zeros(300)
        for j in range(c):
            v[62 + 2 * j] = 1.5
        ro = read_episode(make_trace(v), ep, 1.0)
        e = build_error_trace(ro, ep).e_series
        assert abs(e[60:110].sum() - (3 - c)) < 1e-9


def test_error_trace_continuous_matches_discrete_shape():
    # On a dt=0.1 grid, a window with target 2 and spike integral s carries
    # (2 - s)/M per sample; samples above threshold outside windows carry -1.
    dt = 0.1
    ep = make_episode(100, [(20, 0)], [2], pattern_bins=10)
    n = int(100 / dt)
    v = np.zeros(n)
    v[250:255] = 2.0  # inside window [20, 30)
    v[800] = 1.5  # noise sample at t=80
    tr = make_trace(v, dt=dt)
    err, integrals = build_error_trace_continuous(tr, ep, 1.0)
    s_w = spike_integral(tr, 1.0, 20.0, 30.0)
    assert integrals == (s_w,)
    assert abs(err.e_series[200] - (2 - s_w) / 10) < 1e-12
    assert err.e_series[800] == -1.0
    assert not np.any(err.e_series[:200])
