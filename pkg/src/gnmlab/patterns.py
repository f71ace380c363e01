"""Random spike patterns, background noise, and labelled training episodes.

A pattern is an N x M binary raster drawn bitwise from Bernoulli(p).  An
episode is a longer raster in which a random number of copies of each
target pattern are embedded at random non-overlapping positions; every bin
outside those windows carries fresh Bernoulli(p) noise with the same p, so
pattern and noise are statistically indistinguishable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """An episode or experiment configuration cannot be realized."""


_PLACEMENT_ATTEMPTS = 1000


def _bernoulli_positions(rng: np.random.Generator, n_cells: int, p: float) -> np.ndarray:
    """Indices of set bits when each of n_cells bits is 1 w.p. p.

    Sampled as cumulative geometric gaps, which is distribution-identical to
    flipping every bit but costs O(n*p) draws instead of O(n).
    """
    if not 0.0 <= p <= 1.0:
        raise ConfigurationError(f"spike probability must be in [0, 1], got {p}")
    if p == 0.0 or n_cells == 0:
        return np.empty(0, dtype=np.int64)
    if p == 1.0:
        return np.arange(n_cells, dtype=np.int64)
    out = []
    pos = -1
    chunk = int(n_cells * p + 6.0 * np.sqrt(n_cells * p) + 16)
    while True:
        gaps = rng.geometric(p, size=chunk)
        positions = pos + np.cumsum(gaps)
        if positions[-1] >= n_cells:
            out.append(positions[positions < n_cells])
            break
        out.append(positions)
        pos = positions[-1]
    return np.concatenate(out)


@dataclass(frozen=True)
class SpikeRaster:
    """Binary spike events on n_channels input lines over n_bins timebins."""

    n_channels: int
    n_bins: int
    channels: np.ndarray
    bins: np.ndarray

    def __post_init__(self):
        channels = np.asarray(self.channels, dtype=np.int64)
        bins = np.asarray(self.bins, dtype=np.int64)
        if channels.shape != bins.shape:
            raise ValueError("channels and bins must have the same length")
        if channels.size:
            if channels.min() < 0 or channels.max() >= self.n_channels:
                raise ValueError("event channel out of range")
            if bins.min() < 0 or bins.max() >= self.n_bins:
                raise ValueError("event timebin out of range")
        order = np.lexsort((channels, bins))
        channels = channels[order]
        bins = bins[order]
        flat = bins * self.n_channels + channels
        if flat.size and np.any(np.diff(flat) == 0):
            raise ValueError("duplicate spike events")
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "bins", bins)

    @property
    def n_events(self) -> int:
        return int(self.channels.size)

    def event_set(self) -> set[tuple[int, int]]:
        return set(zip(self.channels.tolist(), self.bins.tolist()))

    def dense(self) -> np.ndarray:
        grid = np.zeros((self.n_channels, self.n_bins), dtype=bool)
        grid[self.channels, self.bins] = True
        return grid


@dataclass(frozen=True)
class PatternSet:
    """Target patterns with positive integer class labels (spike counts)."""

    patterns: tuple[SpikeRaster, ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "patterns", tuple(self.patterns))
        object.__setattr__(self, "labels", tuple(int(l) for l in self.labels))
        if len(self.patterns) != len(self.labels):
            raise ValueError("one label per pattern required")
        if any(l < 1 for l in self.labels):
            raise ValueError("class labels are positive spike counts")
        shapes = {(p.n_channels, p.n_bins) for p in self.patterns}
        if len(shapes) > 1:
            raise ValueError("all patterns must share n_channels and n_bins")

    def __len__(self) -> int:
        return len(self.patterns)

    @property
    def n_channels(self) -> int:
        return self.patterns[0].n_channels

    @property
    def n_bins(self) -> int:
        return self.patterns[0].n_bins


@dataclass(frozen=True)
class EpisodeConfig:
    n_channels: int = 100
    pattern_bins: int = 50
    length: int = 2000
    p: float = 0.005
    max_occurrences: int = 3  # per pattern, drawn uniformly from {0..max}


@dataclass(frozen=True)
class Episode:
    """A noise stream with embedded pattern windows and their ground truth.

    windows holds (start_bin, pattern_index); window_labels the matching
    class labels.  Windows are disjoint and the raster restricted to a
    window equals the embedded pattern exactly.
    """

    raster: SpikeRaster
    pattern_bins: int
    windows: tuple[tuple[int, int], ...] = field(default_factory=tuple)
    window_labels: tuple[int, ...] = field(default_factory=tuple)

    @property
    def length(self) -> int:
        return self.raster.n_bins

    @property
    def target_total(self) -> int:
        return int(sum(self.window_labels))

    def noise_bins(self) -> np.ndarray:
        mask = np.ones(self.length, dtype=bool)
        for start, _ in self.windows:
            mask[start : start + self.pattern_bins] = False
        return np.nonzero(mask)[0]

    def extract_window(self, index: int) -> SpikeRaster:
        start, _ = self.windows[index]
        sel = (self.raster.bins >= start) & (self.raster.bins < start + self.pattern_bins)
        return SpikeRaster(
            self.raster.n_channels,
            self.pattern_bins,
            self.raster.channels[sel],
            self.raster.bins[sel] - start,
        )


def generate_pattern(rng: np.random.Generator, n_channels: int, n_bins: int, p: float) -> SpikeRaster:
    """Draw every one of the n_channels * n_bins bits from Bernoulli(p)."""
    flat = _bernoulli_positions(rng, n_channels * n_bins, p)
    channels, bins = np.divmod(flat, n_bins)
    return SpikeRaster(n_channels, n_bins, channels, bins)


def make_pattern_set(
    rng: np.random.Generator, n_classes: int, cfg: EpisodeConfig
) -> PatternSet:
    """One random pattern per class, labelled 1..n_classes."""
    patterns = [
        generate_pattern(rng, cfg.n_channels, cfg.pattern_bins, cfg.p)
        for _ in range(n_classes)
    ]
    return PatternSet(tuple(patterns), tuple(range(1, n_classes + 1)))


def _place_windows(
    rng: np.random.Generator, counts: list[int], length: int, pattern_bins: int
) -> list[tuple[int, int]]:
    placed: list[tuple[int, int]] = []
    for pattern_index, count in enumerate(counts):
        for _ in range(count):
            for _attempt in range(_PLACEMENT_ATTEMPTS):
                start = int(rng.integers(0, length - pattern_bins + 1))
                if all(
                    start + pattern_bins <= s or start >= s + pattern_bins
                    for s, _ in placed
                ):
                    placed.append((start, pattern_index))
                    break
            else:
                raise ConfigurationError(
                    "could not place pattern windows without overlap"
                )
    placed.sort()
    return placed


def generate_episode(
    rng: np.random.Generator, pattern_set: PatternSet, cfg: EpisodeConfig
) -> Episode:
    """Random pattern placements over fresh background noise.

    Occurrence counts are drawn uniformly from {0..max_occurrences} per
    pattern; window content replaces (never superposes on) the background.
    """
    m = cfg.pattern_bins
    counts = [int(rng.integers(0, cfg.max_occurrences + 1)) for _ in pattern_set.patterns]
    if sum(counts) * m > cfg.length:
        raise ConfigurationError(
            f"{sum(counts)} windows of {m} bins cannot fit in {cfg.length}"
        )
    windows = _place_windows(rng, counts, cfg.length, m)
    return assemble_episode(rng, pattern_set, cfg, windows)


def assemble_episode(
    rng: np.random.Generator,
    pattern_set: PatternSet,
    cfg: EpisodeConfig,
    windows: list[tuple[int, int]],
) -> Episode:
    n = cfg.n_channels
    flat = _bernoulli_positions(rng, n * cfg.length, cfg.p)
    noise_ch, noise_bin = np.divmod(flat, cfg.length)

    in_window = np.zeros(cfg.length, dtype=bool)
    for start, _ in windows:
        in_window[start : start + cfg.pattern_bins] = True
    keep = ~in_window[noise_bin]
    all_ch = [noise_ch[keep]]
    all_bin = [noise_bin[keep]]
    for start, pattern_index in windows:
        pat = pattern_set.patterns[pattern_index]
        all_ch.append(pat.channels)
        all_bin.append(pat.bins + start)
    raster = SpikeRaster(n, cfg.length, np.concatenate(all_ch), np.concatenate(all_bin))
    labels = tuple(pattern_set.labels[pi] for _, pi in windows)
    return Episode(raster, cfg.pattern_bins, tuple(windows), labels)


def episode_drive(episode: Episode, weights: np.ndarray) -> np.ndarray:
    """Summed weighted input per timebin: I(t) = sum_i w_i * spike_i(t)."""
    drive = np.zeros(episode.length)
    np.add.at(drive, episode.raster.bins, weights[episode.raster.channels])
    return drive


def channel_drive(episode: Episode, n_channels: int) -> np.ndarray:
    """Dense per-channel spike indicator, shape (n_channels, length)."""
    grid = np.zeros((n_channels, episode.length))
    grid[episode.raster.channels, episode.raster.bins] = 1.0
    return grid


def save_episode(episode: Episode, path) -> None:
    """Text format: header "N,M,T_ep", event lines "channel,timebin", a blank
    separator line, then window lines "start,pattern_index"."""
    lines = [f"{episode.raster.n_channels},{episode.pattern_bins},{episode.length}"]
    for c, b in zip(episode.raster.channels, episode.raster.bins):
        lines.append(f"{c},{b}")
    lines.append("")
    for start, pattern_index in episode.windows:
        lines.append(f"{start},{pattern_index}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_episode(path) -> Episode:
    with open(path) as fh:
        raw = fh.read().splitlines()
    header = raw[0].split(",")
    n, m, length = int(header[0]), int(header[1]), int(header[2])
    sep = raw.index("", 1)
    channels, bins = [], []
    for line in raw[1:sep]:
        c, b = line.split(",")
        channels.append(int(c))
        bins.append(int(b))
    windows, labels = [], []
    for line in raw[sep + 1 :]:
        if not line:
            continue
        start, pattern_index = line.split(",")
        windows.append((int(start), int(pattern_index)))
        labels.append(int(pattern_index) + 1)  # class labels are always 1..K
    raster = SpikeRaster(n, length, np.array(channels, dtype=np.int64), np.array(bins, dtype=np.int64))
    return Episode(raster, m, tuple(windows), tuple(labels))
