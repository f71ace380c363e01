"""Readers for the gnmlab CSV schemas.

gnmviz talks to the core package only through these files (and the gnmlab
command line that produces them); it never imports gnmlab itself.  Each
reader validates the header against its schema and raises SchemaError on
anything else, including a file with no data rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SchemaError(ValueError):
    """The input CSV does not match the schema its figure kind expects."""


def _read_lines(path) -> tuple[dict, list[str]]:
    try:
        with open(path) as fh:
            raw = fh.read().splitlines()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    metadata = {}
    body = []
    for line in raw:
        if line.startswith("#"):
            stripped = line.lstrip("#").strip()
            if "=" in stripped:
                key, value = stripped.split("=", 1)
                metadata[key.strip()] = value.strip()
        elif line.strip():
            body.append(line.strip())
    return metadata, body


def _split_header(body: list[str], expected: str, path) -> list[str]:
    if not body or body[0] != expected:
        got = body[0] if body else "<empty file>"
        raise SchemaError(f"{path}: expected header {expected!r}, got {got!r}")
    rows = body[1:]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


@dataclass(frozen=True)
class SweepTable:
    alphas: np.ndarray  # sorted unique values
    etas: np.ndarray
    matrix: np.ndarray  # seed means, (n_alpha, n_eta), nan where absent
    cap: int
    metadata: dict


def read_sweep(path) -> SweepTable:
    metadata, body = _read_lines(path)
    rows = _split_header(body, "alpha,eta,seed,noisy_perf,cap", path)
    parsed = []
    for line in rows:
        try:
            a, e, s, perf, cap = line.split(",")
            parsed.append((float(a), float(e), int(s), float(perf), int(cap)))
        except ValueError as exc:
            raise SchemaError(f"{path}: bad sweep row {line!r}") from exc
    alphas = np.array(sorted({r[0] for r in parsed}))
    etas = np.array(sorted({r[1] for r in parsed}))
    sums = np.zeros((len(alphas), len(etas)))
    counts = np.zeros((len(alphas), len(etas)))
    for a, e, _s, perf, _cap in parsed:
        if math.isnan(perf):
            continue
        i = int(np.searchsorted(alphas, a))
        j = int(np.searchsorted(etas, e))
        sums[i, j] += perf
        counts[i, j] += 1
    with np.errstate(invalid="ignore"):
        matrix = sums / counts
    return SweepTable(alphas, etas, matrix, parsed[0][4], metadata)


@dataclass(frozen=True)
class TraceTable:
    t: np.ndarray
    v: np.ndarray
    r: np.ndarray
    d: np.ndarray
    theta_r: float
    metadata: dict


def read_trace(path) -> TraceTable:
    metadata, body = _read_lines(path)
    rows = _split_header(body, "t,v,r,d", path)
    try:
        data = np.array([[float(x) for x in line.split(",")] for line in rows])
        if data.shape[1] != 4:
            raise ValueError("need 4 columns")
    except ValueError as exc:
        raise SchemaError(f"{path}: bad trace rows") from exc
    theta_r = float(metadata.get("theta_r", 1.0))
    return TraceTable(data[:, 0], data[:, 1], data[:, 2], data[:, 3], theta_r, metadata)


@dataclass(frozen=True)
class CrnTable:
    times: np.ndarray  # one shared sample grid
    ode_v: np.ndarray
    runs: list[np.ndarray]
    metadata: dict


def read_crn(path) -> CrnTable:
    metadata, body = _read_lines(path)
    rows = _split_header(body, "time,v_normalized,run_id", path)
    series: dict[int, list[tuple[float, float]]] = {}
    for line in rows:
        try:
            t, v, run_id = line.split(",")
            series.setdefault(int(run_id), []).append((float(t), float(v)))
        except ValueError as exc:
            raise SchemaError(f"{path}: bad trajectory row {line!r}") from exc
    if -1 not in series:
        raise SchemaError(f"{path}: missing the run_id=-1 reference trajectory")
    ref = np.array(series.pop(-1))
    runs = [np.array(series[k])[:, 1] for k in sorted(series)]
    for k, run in zip(sorted(series), runs):
        if len(run) != len(ref):
            raise SchemaError(f"{path}: run {k} length differs from the reference")
    return CrnTable(ref[:, 0], ref[:, 1], runs, metadata)


@dataclass(frozen=True)
class CompareTable:
    models: list[str]  # first-appearance order
    scores: dict[str, list[tuple[int, float]]]  # model -> [(seed, perf)]
    metadata: dict


def read_compare(path) -> CompareTable:
    metadata, body = _read_lines(path)
    rows = _split_header(body, "model,seed,noisy_perf", path)
    models: list[str] = []
    scores: dict[str, list[tuple[int, float]]] = {}
    for line in rows:
        try:
            model, seed, perf = line.split(",")
            if model not in scores:
                models.append(model)
                scores[model] = []
            scores[model].append((int(seed), float(perf)))
        except ValueError as exc:
            raise SchemaError(f"{path}: bad comparison row {line!r}") from exc
    return CompareTable(models, scores, metadata)
