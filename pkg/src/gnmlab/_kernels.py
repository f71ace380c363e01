"""Compiled inner loops for per-timebin neuron recurrences.

numba is optional at runtime: if it is missing or fails to import, the
pure-python versions below are used unchanged (they are the same code
objects that numba compiles).
"""

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def _hill_scalar(v, zeta, h, theta_b):
    # Rearranged for overflow safety at large h or large v.
    if v <= 0.0:
        return 0.0
    if v > theta_b:
        return zeta / (1.0 + (theta_b / v) ** h)
    x = (v / theta_b) ** h
    return zeta * x / (1.0 + x)


def _gnm_loop(drive, alpha, beta, gamma, zeta, eta, h, theta_b, v0, r0):
    n = drive.shape[0]
    v_series = np.empty(n)
    r_series = np.empty(n)
    d_series = np.empty(n)
    v = v0
    r = r0
    for t in range(n):
        factor = eta * gamma * r + (1.0 - eta) * alpha
        if factor > 1.0:
            factor = 1.0
        d = factor * v
        if v <= 0.0:
            hill_v = 0.0
        elif v > theta_b:
            hill_v = zeta / (1.0 + (theta_b / v) ** h)
        else:
            x = (v / theta_b) ** h
            hill_v = zeta * x / (1.0 + x)
        r = r + hill_v - beta * r
        v = v + drive[t] - d
        v_series[t] = v
        r_series[t] = r
        d_series[t] = d
    return v_series, r_series, d_series


def _lif_loop(drive, alpha, theta, v_reset, refractory, v0, counter0):
    n = drive.shape[0]
    v_series = np.empty(n)
    spikes = np.zeros(n, dtype=np.bool_)
    v = v0
    counter = counter0
    for t in range(n):
        if counter > 0:
            counter -= 1
            v = v_reset
        else:
            v = v + drive[t] - alpha * v
            if v >= theta:
                spikes[t] = True
                v = v_reset
                counter = refractory
        v_series[t] = v
    return v_series, spikes


if _HAVE_NUMBA:
    gnm_loop = njit(cache=True)(_gnm_loop)
    lif_loop = njit(cache=True)(_lif_loop)
else:  # pragma: no cover
    gnm_loop = _gnm_loop
    lif_loop = _lif_loop
