"""Layered GNM network trained by backpropagating the error trace.

Architecture: N input lines feed 10 hidden eta=0 GNMs all-to-all; hidden
unit j emits the rectified super-threshold potential
a_j(t) = max(V_j(t) - theta_r, 0) and inhibits its neighbours laterally with
strength kappa (through the previous bin's activations, keeping the update
order explicit); a single eta=0 output GNM integrates sum_j w_out[j] a_j(t).

Training descends the per-timebin loss l(t) = -E(t) * V_out(t), whose exact
gradient is available because the eta=0 recurrences are linear and the
activation is piecewise linear (subgradient 0 at the kink).  For a single
pass-through hidden layer this reduces to the single-neuron error-trace
rule, which fixes the sign convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .learn import MomentumState, init_weights, momentum_apply
from .neuron import NeuronParams, StateTrace
from .patterns import Episode, EpisodeConfig, PatternSet, channel_drive, generate_episode
from .readout import build_error_trace, crossing_bins, split_readout


@dataclass(frozen=True)
class LayeredNet:
    w_hidden: np.ndarray  # (n_hidden, n_inputs), each in [0, 1]
    w_out: np.ndarray  # (n_hidden,), each in [0, 1]
    hidden_params: NeuronParams
    out_params: NeuronParams
    kappa: float = 0.0

    def __post_init__(self):
        w_h = np.asarray(self.w_hidden, dtype=float)
        w_o = np.asarray(self.w_out, dtype=float)
        object.__setattr__(self, "w_hidden", w_h)
        object.__setattr__(self, "w_out", w_o)
        if w_h.ndim != 2 or w_o.ndim != 1 or w_h.shape[0] != w_o.shape[0]:
            raise ValueError("w_hidden must be (n_hidden, n_inputs), w_out (n_hidden,)")
        if self.kappa < 0.0:
            raise ValueError("kappa must be >= 0")
        for p in (self.hidden_params, self.out_params):
            p.validate_discrete()
            if p.eta != 0.0:
                raise ValueError("the layered net is defined for eta=0 neurons")

    @property
    def n_hidden(self) -> int:
        return self.w_out.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.w_hidden.shape[1]

    def with_(self, **kwargs) -> "LayeredNet":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class NetTrace:
    hidden_v: np.ndarray  # (n_hidden, T)
    hidden_a: np.ndarray  # (n_hidden, T)
    out_trace: StateTrace

    def __post_init__(self):
        if self.hidden_v.shape != self.hidden_a.shape or self.hidden_v.shape[1] != len(
            self.out_trace
        ):
            raise ValueError("trace series must have equal length")


def net_forward(net: LayeredNet, inputs: np.ndarray) -> NetTrace:
    """Run the network over dense per-channel inputs of shape (n_inputs, T)."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[0] != net.n_inputs:
        raise ValueError(f"inputs must be ({net.n_inputs}, T)")
    T = inputs.shape[1]
    keep_h = 1.0 - net.hidden_params.alpha
    keep_o = 1.0 - net.out_params.alpha
    theta = net.hidden_params.theta_r
    drive = net.w_hidden @ inputs  # (n_hidden, T)
    hv = np.empty((net.n_hidden, T))
    ha = np.empty((net.n_hidden, T))
    vo = np.empty(T)
    v = np.zeros(net.n_hidden)
    a = np.zeros(net.n_hidden)
    v_out = 0.0
    for t in range(T):
        lateral = net.kappa * (a.sum() - a)  # excludes each unit's own activation
        v = keep_h * v + drive[:, t] - lateral
        a = np.maximum(v - theta, 0.0)
        v_out = keep_o * v_out + float(net.w_out @ a)
        hv[:, t] = v
        ha[:, t] = a
        vo[t] = v_out
    zeros = np.zeros(T)
    return NetTrace(hv, ha, StateTrace(vo, zeros, net.out_params.alpha * vo, dt=1.0))


def net_forward_episode(net: LayeredNet, episode: Episode) -> NetTrace:
    return net_forward(net, channel_drive(episode, net.n_inputs))


def net_loss(net_trace: NetTrace, e_series: np.ndarray) -> float:
    """Total loss sum_t -E(t) * V_out(t): positive error pushes V_out up."""
    return float(-np.dot(e_series, net_trace.out_trace.v_series))


def net_backward(
    net: LayeredNet, net_trace: NetTrace, e_series: np.ndarray, inputs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradients of net_loss w.r.t. (w_hidden, w_out) by BPTT.

    The alpha leaks are linear recurrences; the activation contributes
    1[v > theta_r] (0 at the kink); lateral inhibition couples a_j(t) into
    every other unit's v at t+1 with coefficient -kappa.
    """
    e_series = np.asarray(e_series, dtype=float)
    hv, ha = net_trace.hidden_v, net_trace.hidden_a
    T = hv.shape[1]
    if e_series.shape != (T,) or inputs.shape != (net.n_inputs, T):
        raise ValueError("error series and inputs must match the trace length")
    keep_h = 1.0 - net.hidden_params.alpha
    keep_o = 1.0 - net.out_params.alpha
    active = hv > net.hidden_params.theta_r  # da/dv, 0 at the kink
    grad_out = np.zeros(net.n_hidden)
    grad_hidden = np.zeros_like(net.w_hidden)
    g_o = 0.0  # dL/dv_out(t+1), one step ahead
    gv_next = np.zeros(net.n_hidden)  # dL/dv_j(t+1)
    for t in range(T - 1, -1, -1):
        g_o = -e_series[t] + keep_o * g_o
        grad_out += g_o * ha[:, t]
        ga = g_o * net.w_out - net.kappa * (gv_next.sum() - gv_next)
        gv = ga * active[:, t] + keep_h * gv_next
        grad_hidden += np.outer(gv, inputs[:, t])
        gv_next = gv
    return grad_hidden, grad_out


def _flatten(net: LayeredNet) -> np.ndarray:
    return np.concatenate([net.w_hidden.ravel(), net.w_out])


def _unflatten(net: LayeredNet, flat: np.ndarray) -> LayeredNet:
    k = net.w_hidden.size
    return net.with_(
        w_hidden=flat[:k].reshape(net.w_hidden.shape), w_out=flat[k:].copy()
    )


def fd_gradient(
    net: LayeredNet, inputs: np.ndarray, e_series: np.ndarray, step: float = 1e-5
) -> np.ndarray:
    """Central finite differences of net_loss over all weights, flattened."""
    flat = _flatten(net)
    grad = np.empty_like(flat)
    for i in range(flat.size):
        bumped = flat.copy()
        bumped[i] = flat[i] + step
        up = net_loss(net_forward(_unflatten(net, bumped), inputs), e_series)
        bumped[i] = flat[i] - step
        down = net_loss(net_forward(_unflatten(net, bumped), inputs), e_series)
        grad[i] = (up - down) / (2.0 * step)
    return grad


def gradient_relative_error(
    net: LayeredNet, inputs: np.ndarray, e_series: np.ndarray, step: float = 1e-5
) -> float:
    """norm(analytic - FD) / norm-scale; 0 when both gradients vanish."""
    trace = net_forward(net, inputs)
    gh, go = net_backward(net, trace, e_series, inputs)
    analytic = np.concatenate([gh.ravel(), go])
    numeric = fd_gradient(net, inputs, e_series, step)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


def random_check_instance(
    rng: np.random.Generator,
    n_inputs: int = 5,
    n_hidden: int = 2,
    n_bins: int = 10,
    kink_margin: float = 1e-3,
) -> tuple[LayeredNet, np.ndarray, np.ndarray]:
    """A small random net, inputs, and error series for gradient checking.

    Instances whose hidden potentials graze the activation kink are
    rejected: finite differences are only valid where the loss is smooth
    within the probe step.
    """
    hidden = NeuronParams(alpha=float(rng.uniform(0.1, 0.9)), theta_r=0.5)
    out = NeuronParams(alpha=float(rng.uniform(0.1, 0.9)), theta_r=0.5)
    for _ in range(100):
        net = LayeredNet(
            rng.uniform(0.0, 1.0, size=(n_hidden, n_inputs)),
            rng.uniform(0.0, 1.0, size=n_hidden),
            hidden,
            out,
            kappa=float(rng.uniform(0.0, 0.5)),
        )
        inputs = (rng.random((n_inputs, n_bins)) < 0.3).astype(float)
        e_series = rng.choice([-1.0, 0.0, 1.0], size=n_bins)
        trace = net_forward(net, inputs)
        if np.all(np.abs(trace.hidden_v - hidden.theta_r) > kink_margin):
            return net, inputs, e_series
    raise RuntimeError("could not draw a kink-free gradient-check instance")


def gradient_selfcheck(rng: np.random.Generator, instances: int = 3, tol: float = 1e-4) -> None:
    """Gate run before training: raises if analytic and FD gradients differ."""
    for _ in range(instances):
        net, inputs, e_series = random_check_instance(rng)
        err = gradient_relative_error(net, inputs, e_series)
        if err >= tol:
            raise RuntimeError(f"gradient self-check failed: relative error {err:.3e}")


@dataclass(frozen=True)
class BpConfig:
    epochs: int
    lam: float = 1e-4
    n_hidden: int = 10
    kappa: float = 0.1
    hidden: NeuronParams = field(default_factory=lambda: NeuronParams(alpha=0.3))
    out: NeuronParams = field(default_factory=lambda: NeuronParams(alpha=0.3))
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    seed: int = 0
    gamma_mom: float = 0.2

    def validate(self) -> "BpConfig":
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.lam < 0.0:
            raise ValueError("lambda must be >= 0")
        if self.n_hidden < 1:
            raise ValueError("need at least one hidden unit")
        return self


@dataclass(frozen=True)
class BpResult:
    net: LayeredNet
    target_history: np.ndarray
    actual_history: np.ndarray


def bp_train(
    config: BpConfig,
    pattern_set: PatternSet,
    rng: np.random.Generator | None = None,
) -> BpResult:
    """Forward / error trace / BPTT / momentum step, clip both layers.

    A gradient self-check on small random instances gates every run.
    """
    config.validate()
    if rng is None:
        rng = np.random.default_rng(config.seed)
    gradient_selfcheck(np.random.default_rng(12345))
    n = config.episode.n_channels
    net = LayeredNet(
        np.stack([init_weights(rng, n) for _ in range(config.n_hidden)]),
        init_weights(rng, config.n_hidden),
        config.hidden,
        config.out,
        config.kappa,
    )
    mom_h = MomentumState.zeros(config.n_hidden * n, config.gamma_mom)
    mom_o = MomentumState.zeros(config.n_hidden, config.gamma_mom)
    targets = np.zeros(config.epochs, dtype=np.int64)
    actuals = np.zeros(config.epochs, dtype=np.int64)
    for epoch in range(config.epochs):
        episode = generate_episode(rng, pattern_set, config.episode)
        inputs = channel_drive(episode, n)
        trace = net_forward(net, inputs)
        bins = crossing_bins(trace.out_trace, config.out.theta_r)
        readout = split_readout(bins, episode)
        targets[epoch] = episode.target_total
        actuals[epoch] = readout.total
        e = build_error_trace(readout, episode)
        if e.is_zero():
            continue
        gh, go = net_backward(net, trace, e.e_series, inputs)
        raw_h, raw_o = -config.lam * gh.ravel(), -config.lam * go
        dh, mom_h = momentum_apply(raw_h, mom_h)
        do, mom_o = momentum_apply(raw_o, mom_o)
        net = net.with_(
            w_hidden=np.clip(net.w_hidden + dh.reshape(net.w_hidden.shape), 0.0, 1.0),
            w_out=np.clip(net.w_out + do, 0.0, 1.0),
        )
    return BpResult(net, targets, actuals)


def save_net(path, net: LayeredNet, metadata: dict | None = None) -> None:
    """Text format: "GNM-NET v1", "n_hidden n_inputs", one row-major line per
    hidden row, one line of output weights, then "# key=value" metadata."""
    lines = ["GNM-NET v1", f"{net.n_hidden} {net.n_inputs}"]
    for row in net.w_hidden:
        lines.append(" ".join(repr(float(w)) for w in row))
    lines.append(" ".join(repr(float(w)) for w in net.w_out))
    meta = {
        "kappa": net.kappa,
        "alpha_hidden": net.hidden_params.alpha,
        "alpha_out": net.out_params.alpha,
        "theta_r": net.hidden_params.theta_r,
    }
    meta.update(metadata or {})
    for key, value in meta.items():
        lines.append(f"# {key}={value}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_net(path) -> tuple[LayeredNet, dict]:
    with open(path) as fh:
        raw = fh.read().splitlines()
    if not raw or raw[0] != "GNM-NET v1":
        raise ValueError(f"{path} is not a GNM-NET v1 file")
    n_hidden, n_inputs = (int(x) for x in raw[1].split())
    w_hidden = np.array(
        [[float(x) for x in raw[2 + j].split()] for j in range(n_hidden)]
    )
    w_out = np.array([float(x) for x in raw[2 + n_hidden].split()])
    metadata = {}
    for line in raw[3 + n_hidden :]:
        if line.startswith("# ") and "=" in line:
            key, value = line[2:].split("=", 1)
            metadata[key] = value
    hidden = NeuronParams(
        alpha=float(metadata["alpha_hidden"]), theta_r=float(metadata["theta_r"])
    )
    out = NeuronParams(
        alpha=float(metadata["alpha_out"]), theta_r=float(metadata["theta_r"])
    )
    net = LayeredNet(w_hidden, w_out, hidden, out, float(metadata["kappa"]))
    return net, metadata
