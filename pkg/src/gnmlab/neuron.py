"""Generalised neuron model (GNM) and leaky integrate-and-fire (LIF) dynamics.

The GNM is a two-variable state model.  The membrane potential V integrates
weighted input and loses a fraction of itself each timebin; the reset
variable R is charged through a sigmoidal (Hill) gate whenever V approaches
the behavioural threshold and drains at a fixed rate.  One update of the
discrete model reads

    V(t) = V(t-1) + I(t) - [eta*gamma*R(t-1)*V(t-1) + (1-eta)*alpha*V(t-1)]
    R(t) = R(t-1) + zeta*Hill(V(t-1)) - beta*R(t-1)

with Hill(v) = v^h / (theta_b^h + v^h).  The blend parameter eta selects
between a plain leaky integrator (eta=0) and a threshold-gated, hysteretic
"spiking" regime (eta=1).  The same equations, read as ODEs, define the
continuous-time model; there the rate parameters may exceed 1.

The LIF baseline shares the eta=0 leak but adds a hard reset to a fixed
potential and an optional deterministic refractory period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from ._kernels import gnm_loop, lif_loop


class ParameterError(ValueError):
    """A neuron parameter is outside its valid domain."""


@dataclass(frozen=True)
class NeuronParams:
    """Dynamical constants of the GNM.

    alpha   -- membrane leak per timebin (discrete) or leak rate (continuous)
    beta    -- decay of the reset variable R
    gamma   -- coupling of R into the membrane decay
    zeta    -- charging rate of R through the Hill gate
    eta     -- model blend in [0, 1]: 0 = pure leaky integrator, 1 = fully
               threshold-gated decay
    h       -- Hill exponent (steepness of the gate)
    theta_b -- behavioural threshold, midpoint of the Hill gate
    theta_r -- readout threshold used to interpret V as output spikes
    """

    alpha: float
    beta: float = 0.3
    gamma: float = 1.0
    zeta: float = 1.0
    eta: float = 0.0
    h: float = 4.0
    theta_b: float = 1.0
    theta_r: float = 1.0

    def _validate_common(self) -> None:
        if not 0.0 <= self.eta <= 1.0:
            raise ParameterError(f"eta must be in [0, 1], got {self.eta}")
        if self.theta_b <= 0.0 or self.theta_r <= 0.0:
            raise ParameterError("thresholds theta_b and theta_r must be positive")
        if self.h < 1.0:
            raise ParameterError(f"Hill exponent must be >= 1, got {self.h}")
        for name in ("beta", "gamma", "zeta"):
            if getattr(self, name) < 0.0:
                raise ParameterError(f"{name} must be nonnegative")

    def validate_discrete(self) -> "NeuronParams":
        self._validate_common()
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"discrete-mode alpha must be in [0, 1], got {self.alpha}")
        if self.beta > 1.0:
            raise ParameterError(f"discrete-mode beta must be in [0, 1], got {self.beta}")
        return self

    def validate_continuous(self) -> "NeuronParams":
        # In the ODE reading the decay coefficients become rates: positive,
        # but no longer capped at 1.
        self._validate_common()
        if self.alpha < 0.0:
            raise ParameterError(f"continuous-mode alpha must be >= 0, got {self.alpha}")
        return self

    def with_(self, **kwargs) -> "NeuronParams":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class LifParams:
    """LIF baseline: leak alpha, firing threshold, hard reset, refractory bins."""

    alpha: float
    theta: float = 1.0
    v_reset: float = 0.0
    refractory: int = 0

    def validate(self) -> "LifParams":
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"LIF alpha must be in [0, 1], got {self.alpha}")
        if self.refractory < 0:
            raise ParameterError("refractory period must be >= 0")
        if self.theta <= self.v_reset:
            raise ParameterError("firing threshold must exceed the reset potential")
        return self


@dataclass(frozen=True)
class NeuronState:
    v: float = 0.0
    r: float = 0.0


@dataclass(frozen=True)
class StateTrace:
    """Time series of membrane potential V, reset variable R and decay D.

    dt is the sample spacing: 1 for discrete timebins, the sampling step for
    continuous-mode traces.
    """

    v_series: np.ndarray
    r_series: np.ndarray
    d_series: np.ndarray
    dt: float = 1.0
    v_init: float = 0.0

    def __post_init__(self):
        if not (len(self.v_series) == len(self.r_series) == len(self.d_series)):
            raise ValueError("trace series must have equal length")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")

    def __len__(self) -> int:
        return len(self.v_series)


def hill(v: float, params: NeuronParams):
    """Sigmoidal gate zeta * v^h / (theta_b^h + v^h), bounded in [0, zeta].

    Accepts scalars or arrays; evaluated in a form that cannot overflow for
    large v or large h.
    """
    v = np.asarray(v, dtype=float)
    if np.any(v < 0.0):
        raise ParameterError("hill() requires v >= 0")
    ratio_lo = np.divide(v, params.theta_b)
    ratio_hi = np.divide(params.theta_b, np.where(v > 0.0, v, 1.0))
    with np.errstate(over="ignore", invalid="ignore"):
        x = ratio_lo**params.h
        lo = params.zeta * x / (1.0 + x)
        hi = params.zeta / (1.0 + ratio_hi**params.h)
    out = np.where(v > params.theta_b, hi, lo)
    out = np.where(v == 0.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def gnm_step(
    state: NeuronState, input_sum: float, params: NeuronParams
) -> tuple[NeuronState, float]:
    """Advance the discrete GNM by one timebin.

    Both right-hand sides use the pre-update (v, r).  The total decay factor
    eta*gamma*r + (1-eta)*alpha is clamped to 1 so the membrane can lose at
    most its current potential; with nonnegative input this keeps v >= 0.

    Returns the new state and the decay amount D removed this bin.
    """
    params.validate_discrete()
    if input_sum < 0.0:
        raise ParameterError("input_sum must be nonnegative in discrete mode")
    factor = params.eta * params.gamma * state.r + (1.0 - params.eta) * params.alpha
    factor = min(factor, 1.0)
    d = factor * state.v
    v_new = state.v + input_sum - d
    r_new = state.r + hill(state.v, params) - params.beta * state.r
    return NeuronState(v=v_new, r=r_new), d


def lif_step(
    v: float, input_sum: float, params: LifParams, refractory_counter: int
) -> tuple[float, bool, int]:
    """One LIF timebin: leak-integrate, hard reset on crossing, refractoriness.

    While the refractory counter is positive the input is ignored, the
    potential is held at v_reset, and the counter ticks down.
    """
    params.validate()
    if refractory_counter > 0:
        return params.v_reset, False, refractory_counter - 1
    v_new = v + input_sum - params.alpha * v
    if v_new >= params.theta:
        return params.v_reset, True, params.refractory
    return v_new, False, 0


def run_trace(
    drive: np.ndarray,
    params: NeuronParams,
    v0: float = 0.0,
    r0: float = 0.0,
) -> StateTrace:
    """Simulate the discrete GNM over a whole episode of summed weighted input.

    Equivalent to folding gnm_step over `drive`, but runs through a linear
    filter when eta=0 and a compiled loop otherwise.
    """
    params.validate_discrete()
    drive = np.asarray(drive, dtype=float)
    if params.eta == 0.0:
        # v(t) = (1-alpha) v(t-1) + I(t): a first-order IIR filter.
        zi = np.array([(1.0 - params.alpha) * v0])
        v_series, _ = lfilter([1.0], [1.0, -(1.0 - params.alpha)], drive, zi=zi)
        v_prev = np.empty_like(v_series)
        v_prev[0] = v0
        v_prev[1:] = v_series[:-1]
        gate = hill(np.maximum(v_prev, 0.0), params)
        zi_r = np.array([(1.0 - params.beta) * r0])
        r_series, _ = lfilter([1.0], [1.0, -(1.0 - params.beta)], gate, zi=zi_r)
        d_series = params.alpha * v_prev
        return StateTrace(v_series, r_series, d_series, dt=1.0, v_init=v0)
    v_series, r_series, d_series = gnm_loop(
        drive,
        params.alpha,
        params.beta,
        params.gamma,
        params.zeta,
        params.eta,
        params.h,
        params.theta_b,
        v0,
        r0,
    )
    return StateTrace(v_series, r_series, d_series, dt=1.0, v_init=v0)


def lif_run(
    drive: np.ndarray,
    params: LifParams,
    v0: float = 0.0,
) -> tuple[StateTrace, np.ndarray]:
    """Simulate the LIF over an episode; returns the trace and spike bins."""
    params.validate()
    drive = np.asarray(drive, dtype=float)
    v_series, spikes = lif_loop(
        drive, params.alpha, params.theta, params.v_reset, params.refractory, v0, 0
    )
    zeros = np.zeros_like(v_series)
    trace = StateTrace(v_series, zeros, zeros, dt=1.0, v_init=v0)
    return trace, np.nonzero(spikes)[0]


_RK4_STEP = 0.01


def _decay_step_exact(v: float, alpha: float, span: float) -> float:
    return v * math.exp(-alpha * span)


def _rk4_step(v: float, r: float, params: NeuronParams, dt: float) -> tuple[float, float]:
    def f(v, r):
        dv = -(params.eta * params.gamma * r * v + (1.0 - params.eta) * params.alpha * v)
        dr = hill(max(v, 0.0), params) - params.beta * r
        return dv, dr

    k1v, k1r = f(v, r)
    k2v, k2r = f(v + 0.5 * dt * k1v, r + 0.5 * dt * k1r)
    k3v, k3r = f(v + 0.5 * dt * k2v, r + 0.5 * dt * k2r)
    k4v, k4r = f(v + dt * k3v, r + dt * k3r)
    v += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    r += dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
    return v, r


def integrate_continuous_grid(
    impulses: np.ndarray,
    params: NeuronParams,
    dt: float,
    v0: float = 0.0,
    r0: float = 0.0,
) -> StateTrace:
    """Continuous-time eta=0 dynamics sampled on a uniform grid.

    impulses[k] is the summed weight of impulse events at time k*dt; all
    events must lie on the grid.  V is exact: pure exponential decay between
    samples with each impulse applied at its own sample.  R does not feed
    back into V at eta=0, so it is integrated for the trace record only, by
    an exponential-trapezoid rule on the sampled Hill gate.
    """
    params.validate_continuous()
    if params.eta != 0.0:
        raise ParameterError("the grid integrator is an eta=0 fast path")
    if dt <= 0.0:
        raise ParameterError("dt must be positive")
    impulses = np.asarray(impulses, dtype=float)
    q = math.exp(-params.alpha * dt)
    v_first = v0 + impulses[0]
    v_series = np.empty_like(impulses)
    v_series[0] = v_first
    if len(impulses) > 1:
        zi = np.array([q * v_first])
        v_series[1:], _ = lfilter([1.0], [1.0, -q], impulses[1:], zi=zi)
    # r(t+dt) = r(t) e^(-beta dt) + integral of the gate against the decay
    # kernel, with the gate piecewise-linear between samples.  An impulse at a
    # sample time lies outside the interval ending there, so the interval's
    # right endpoint uses the pre-impulse potential.  Sample k is the state at
    # t = k*dt, matching integrate_continuous.
    v_pre = v_series - impulses
    v_pre[0] = v0
    gate_post = hill(np.maximum(v_series, 0.0), params)
    gate_pre = hill(np.maximum(v_pre, 0.0), params)
    qb = math.exp(-params.beta * dt)
    r_series = np.empty_like(v_series)
    r_series[0] = r0
    if len(v_series) > 1:
        u = 0.5 * dt * (gate_pre[1:] + qb * gate_post[:-1])
        r_series[1:], _ = lfilter([1.0], [1.0, -qb], u, zi=np.array([qb * r0]))
    d_series = params.alpha * v_series
    return StateTrace(v_series, r_series, d_series, dt=dt, v_init=v0)


def integrate_continuous(
    events: list[tuple[float, float]],
    params: NeuronParams,
    T: float,
    dt: float,
    v0: float = 0.0,
    r0: float = 0.0,
) -> StateTrace:
    """Integrate the continuous-time GNM with impulsive inputs.

    `events` is a list of (time, weight) pairs; each one bumps V by its
    weight instantaneously.  Between events the membrane follows the ODE:
    exactly (exponential decay) when eta=0, by fixed-step RK4 otherwise.
    Samples are recorded on the uniform grid 0, dt, 2*dt, ..., with events
    falling on a sample time applied before that sample is recorded.

    Returns a StateTrace with the given dt.
    """
    params.validate_continuous()
    if dt <= 0.0:
        raise ParameterError("dt must be positive")
    for t_e, _ in events:
        if not 0.0 <= t_e <= T:
            raise ParameterError(f"event time {t_e} outside [0, {T}]")
    queue = sorted(events, key=lambda e: e[0])
    n_samples = int(round(T / dt)) + 1
    v_series = np.empty(n_samples)
    r_series = np.empty(n_samples)
    d_series = np.empty(n_samples)

    v, r = v0, r0
    t = 0.0
    idx = 0  # next event

    def advance(v, r, t_from, t_to):
        span = t_to - t_from
        if span <= 0.0:
            return v, r
        if params.eta == 0.0:
            # V decays exactly; R sees V(t) = V0*exp(-alpha*s) as forcing and
            # is stepped by RK4 on its own scalar ODE.
            n_sub = max(1, int(math.ceil(span / dt)))
            sub = span / n_sub
            for _ in range(n_sub):
                v_mid = _decay_step_exact(v, params.alpha, 0.5 * sub)
                v_end = _decay_step_exact(v, params.alpha, sub)
                k1 = hill(max(v, 0.0), params) - params.beta * r
                k2 = hill(max(v_mid, 0.0), params) - params.beta * (r + 0.5 * sub * k1)
                k3 = hill(max(v_mid, 0.0), params) - params.beta * (r + 0.5 * sub * k2)
                k4 = hill(max(v_end, 0.0), params) - params.beta * (r + sub * k3)
                r = r + sub / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
                v = v_end
            return v, r
        # Hill-gated regime has no closed form; RK4 at a fixed internal step.
        n_sub = max(1, int(math.ceil(span / min(dt, _RK4_STEP))))
        sub = span / n_sub
        for _ in range(n_sub):
            v, r = _rk4_step(v, r, params, sub)
        return v, r

    for k in range(n_samples):
        t_sample = k * dt
        while idx < len(queue) and queue[idx][0] <= t_sample + 1e-12:
            t_event, weight = queue[idx]
            v, r = advance(v, r, t, t_event)
            v += weight
            t = t_event
            idx += 1
        v, r = advance(v, r, t, t_sample)
        t = t_sample
        v_series[k] = v
        r_series[k] = r
        d_series[k] = (
            params.eta * params.gamma * r * v + (1.0 - params.eta) * params.alpha * v
        )
    return StateTrace(v_series, r_series, d_series, dt=dt, v_init=v0)
