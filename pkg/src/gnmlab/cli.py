"""Command-line interface.

Subcommands: train, eval, sweep, compare, crn, bp-train.  Every option can
also come from a flat key=value config file (--config); explicit flags win.
Exit codes: 0 success, 1 configuration error, 2 runtime failure.  All file
outputs are deterministic for a fixed option set and seed.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import crn as crnmod
from . import harness
from .config import ConfigError, parse_config_file, parse_float_list, parse_int_list, parse_str_list
from .deepnet import BpConfig, bp_train, save_net
from .learn import TrainConfig, load_weights, observe_episode, save_weights
from .neuron import LifParams, NeuronParams, ParameterError
from .patterns import ConfigurationError, EpisodeConfig


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # bad flags are configuration errors: exit 1
        raise ConfigError(message)


class OptionSet:
    """Declares a subcommand's options once, for both flags and config keys."""

    def __init__(self, parser: argparse.ArgumentParser):
        self.parser = parser
        self.defaults: dict = {}
        self.types: dict = {}
        self.choices: dict = {}
        self.required: set[str] = set()
        parser.add_argument("--config", dest="config", default=None, help="key=value config file")

    def add(self, flag: str, *, type=str, default=None, help: str = "", choices=None, required=False):
        dest = flag.lstrip("-").replace("-", "_")
        kwargs = dict(dest=dest, type=type, help=help, default=argparse.SUPPRESS)
        if choices is not None:
            kwargs["choices"] = choices
            self.choices[dest] = tuple(choices)
        self.parser.add_argument(flag, **kwargs)
        self.defaults[dest] = default
        self.types[dest] = type
        if required:
            self.required.add(dest)

    def _convert(self, key: str, value: str):
        try:
            converted = self.types[key](value)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
        allowed = self.choices.get(key)
        if allowed is not None and converted not in allowed:
            raise ConfigError(f"{key} must be one of {allowed}, got {converted!r}")
        return converted

    def resolve(self, ns: argparse.Namespace, extra_defaults: dict | None = None) -> dict:
        """Defaults < extra_defaults < config file < explicit flags."""
        opts = dict(self.defaults)
        if extra_defaults:
            for key, value in extra_defaults.items():
                if key in self.types:
                    opts[key] = self._convert(key, str(value))
        config_path = getattr(ns, "config", None)
        if config_path:
            for key, value in parse_config_file(config_path).items():
                if key not in self.types:
                    raise ConfigError(f"unknown config key {key!r} for this command")
                opts[key] = self._convert(key, value)
        for key, value in vars(ns).items():
            if key in self.types:
                opts[key] = value
        for key in self.required:
            if opts.get(key) is None:
                raise ConfigError(f"missing required option --{key.replace('_', '-')}")
        return opts


def _add_neuron_opts(o: OptionSet) -> None:
    o.add("--alpha", type=float, default=0.3, help="membrane leak per timebin")
    o.add("--beta", type=float, default=0.3, help="reset-variable decay")
    o.add("--gamma", type=float, default=1.0, help="reset coupling into the membrane")
    o.add("--zeta", type=float, default=1.0, help="reset charging rate")
    o.add("--eta", type=float, default=0.0, help="model blend: 0 leaky, 1 threshold-gated")
    o.add("--hill", type=float, default=4.0, help="Hill gate exponent")
    o.add("--theta-b", type=float, default=1.0, help="behavioural threshold (Hill midpoint)")
    o.add("--theta-r", type=float, default=1.0, help="readout threshold")
    o.add("--model", choices=("gnm", "lif"), default="gnm")
    o.add("--lif-theta", type=float, default=1.0, help="LIF firing threshold")
    o.add("--lif-reset", type=float, default=0.0, help="LIF reset potential")
    o.add("--refractory", type=int, default=0, help="LIF refractory bins")


def _add_episode_opts(o: OptionSet) -> None:
    o.add("--channels", type=int, default=100, help="input channels N")
    o.add("--pattern-bins", type=int, default=50, help="pattern length M")
    o.add("--episode-length", type=int, default=2000, help="training episode bins")
    o.add("--spike-prob", type=float, default=0.005, help="per-bit spike probability")
    o.add("--max-occurrences", type=int, default=3, help="max pattern windows per episode")
    o.add("--classes", type=int, default=1, help="number of pattern classes")


def _add_train_opts(o: OptionSet) -> None:
    o.add("--epochs", type=int, default=10000)
    o.add("--lambda", type=float, default=1e-4, help="learning rate")
    o.add("--algorithm", choices=("ALL", "ET"), default="ALL")
    o.add("--gamma-mom", type=float, default=0.2, help="momentum coefficient")
    o.add("--mode", choices=("discrete", "continuous"), default="discrete")
    o.add("--dt", type=float, default=0.1, help="continuous-mode sample step")
    o.add("--seed", type=int, default=0)


def _add_eval_opts(o: OptionSet) -> None:
    o.add("--cap", type=int, default=1000, help="survival cap in timebins")
    o.add("--reps", type=int, default=30, help="evaluation repetitions")
    o.add("--gap-mean", type=float, default=harness.EVAL_GAP_MEAN,
          help="mean noise gap between patterns in the evaluation stream")


def _neuron_from(opts: dict) -> NeuronParams | LifParams:
    if opts["model"] == "lif":
        return LifParams(
            alpha=opts["alpha"],
            theta=opts["lif_theta"],
            v_reset=opts["lif_reset"],
            refractory=opts["refractory"],
        )
    return NeuronParams(
        alpha=opts["alpha"],
        beta=opts["beta"],
        gamma=opts["gamma"],
        zeta=opts["zeta"],
        eta=opts["eta"],
        h=opts["hill"],
        theta_b=opts["theta_b"],
        theta_r=opts["theta_r"],
    )


def _episode_from(opts: dict) -> EpisodeConfig:
    return EpisodeConfig(
        n_channels=opts["channels"],
        pattern_bins=opts["pattern_bins"],
        length=opts["episode_length"],
        p=opts["spike_prob"],
        max_occurrences=opts["max_occurrences"],
    )


def _train_config_from(opts: dict) -> TrainConfig:
    return TrainConfig(
        epochs=opts["epochs"],
        lam=opts["lambda"],
        algorithm=opts["algorithm"],
        neuron=_neuron_from(opts),
        episode=_episode_from(opts),
        seed=opts["seed"],
        gamma_mom=opts["gamma_mom"],
        mode=opts["mode"],
        dt=opts["dt"],
    ).validate()


_NON_METADATA = ("config",)


def _metadata_from(opts: dict) -> dict:
    """Everything that shaped the result, sorted; output paths excluded."""
    skip = set(_NON_METADATA)
    return {
        k: opts[k]
        for k in sorted(opts)
        if k not in skip and not k.endswith("_out") and k not in ("out", "out_dir")
    }


def _cmd_train(ns) -> int:
    opts = ns._optset.resolve(ns)
    config = _train_config_from(opts)
    pattern_set, result = harness.train_job(config, opts["classes"])
    save_weights(opts["weights_out"], result.weights, _metadata_from(opts))
    if opts["history_out"]:
        with open(opts["history_out"], "w") as fh:
            fh.write("epoch,target,actual\n")
            for k in range(config.epochs):
                fh.write(f"{k},{result.target_history[k]},{result.actual_history[k]}\n")
    tail = result.error_history[-100:]
    mean_err = float(np.mean(np.abs(tail))) if tail.size else 0.0
    print(f"trained epochs={config.epochs} mean_abs_error_last100={mean_err:.9g} "
          f"weights={opts['weights_out']}")
    return 0


def _cmd_eval(ns) -> int:
    pre = ns._optset.resolve(ns)
    weights, meta = load_weights(pre["weights"])
    opts = ns._optset.resolve(ns, extra_defaults=meta)
    neuron = _neuron_from(opts)
    episode_cfg = _episode_from(opts)
    if len(weights) != episode_cfg.n_channels:
        raise ConfigError(
            f"weights file has {len(weights)} channels, options say {episode_cfg.n_channels}"
        )
    pattern_set = harness.pattern_set_for(opts["seed"], opts["seed"], opts["classes"], episode_cfg)
    rng = harness.eval_rng_for(opts["seed"], opts["seed"])
    perf = harness.noisy_performance(
        weights, neuron, pattern_set, opts["cap"], opts["reps"], rng,
        opts["gap_mean"], episode_cfg.p,
    )
    print(f"noisy_performance={perf.noisy_performance:.9g} cap={perf.cap} reps={perf.repetitions}")
    if opts["trace_out"]:
        rng2 = harness.eval_rng_for(opts["seed"], opts["seed"])
        episode = harness.build_eval_stream(
            rng2, pattern_set, opts["cap"], opts["gap_mean"], episode_cfg.p
        )
        trace, _ = observe_episode(neuron, weights, episode)
        theta = neuron.theta if isinstance(neuron, LifParams) else neuron.theta_r
        harness.write_trace_csv(opts["trace_out"], trace, theta)
    return 0


def _cmd_sweep(ns) -> int:
    opts = ns._optset.resolve(ns)
    template = _train_config_from(opts)
    grid = harness.SweepGrid(
        alpha_values=opts["alphas"],
        eta_values=opts["etas"],
        seeds=opts["seeds"],
        template=template,
        n_classes=opts["classes"],
        cap=opts["cap"],
        reps=opts["reps"],
        gap_mean=opts["gap_mean"],
        master_seed=opts["master_seed"],
    )

    def progress(row):
        print(
            f"alpha={row.alpha:g} eta={row.eta:g} seed={row.seed} noisy_perf={row.noisy_perf:g}"
            + (f" error={row.error}" if row.error else ""),
            file=sys.stderr,
        )

    rows = harness.run_sweep(grid, progress=progress)
    harness.write_sweep_csv(opts["out"], rows, _metadata_from(opts))
    alphas, etas, matrix = harness.aggregate_sweep(rows)
    flat_best = np.nanargmax(matrix)
    i, j = np.unravel_index(flat_best, matrix.shape)
    print(f"wrote {opts['out']}; best mean cell alpha={alphas[i]:g} eta={etas[j]:g} "
          f"noisy_perf={matrix[i, j]:.9g}")
    return 0


def _cmd_compare(ns) -> int:
    opts = ns._optset.resolve(ns)
    template = _train_config_from({**opts, "model": "gnm"})
    configs: dict[str, object] = {}
    for name in opts["models"]:
        if name == "gnm-all":
            configs[name] = template.with_(algorithm="ALL")
        elif name == "gnm-et":
            configs[name] = template.with_(algorithm="ET")
        elif name == "lif":
            configs[name] = template.with_(
                algorithm="ALL", neuron=_neuron_from({**opts, "model": "lif"})
            )
        elif name == "bp":
            eta0 = template.neuron.with_(eta=0.0)
            configs[name] = BpConfig(
                epochs=opts["epochs"],
                lam=opts["lambda"],
                n_hidden=opts["n_hidden"],
                kappa=opts["kappa"],
                hidden=eta0,
                out=eta0,
                episode=template.episode,
                gamma_mom=opts["gamma_mom"],
            )
        else:
            raise ConfigError(f"unknown model {name!r}; choose from gnm-all, gnm-et, lif, bp")

    def progress(row):
        print(f"model={row.model} seed={row.seed} noisy_perf={row.noisy_perf:g}", file=sys.stderr)

    result = harness.compare_models(
        configs,
        seeds=opts["seeds"],
        n_classes=opts["classes"],
        cap=opts["cap"],
        reps=opts["reps"],
        gap_mean=opts["gap_mean"],
        master_seed=opts["master_seed"],
        progress=progress,
    )
    harness.write_compare_csv(opts["out"], result, _metadata_from(opts))
    wins = result.win_counts()
    summary = " ".join(f"{m}:wins={wins[m]},mean={result.mean(m):.9g}" for m in result.models)
    print(f"wrote {opts['out']}; {summary}")
    if "lif" in result.models and "gnm-all" in result.models:
        print(f"lif/gnm noisy performance ratio={result.ratio('lif', 'gnm-all'):.9g}")
    return 0


def _cmd_crn(ns) -> int:
    opts = ns._optset.resolve(ns)
    episode_cfg = _episode_from(opts)
    if opts["weights"]:
        weights, _ = load_weights(opts["weights"])
        if len(weights) != episode_cfg.n_channels:
            raise ConfigError("weights file does not match --channels")
    else:
        weights = np.full(episode_cfg.n_channels, opts["fill_weight"])
    pattern = harness.pattern_set_for(opts["seed"], opts["seed"], 1, episode_cfg).patterns[0]
    horizon = opts["horizon"] if opts["horizon"] else float(episode_cfg.pattern_bins + 10)
    results, kept = crnmod.noise_study(
        weights,
        pattern,
        list(opts["n_mol"]),
        opts["runs"],
        opts["seed"],
        T=horizon,
        sample_dt=opts["sample_dt"],
        alpha=opts["crn_alpha"],
        C=opts["rate_c"],
        keep_trajectories=opts["keep_trajectories"],
    )
    os.makedirs(opts["out_dir"], exist_ok=True)
    for res in results:
        summary_path = os.path.join(opts["out_dir"], f"crn_summary_{res.n_mol}.csv")
        crnmod.write_summary_csv(summary_path, res)
        traj_path = os.path.join(opts["out_dir"], f"crn_trajectories_{res.n_mol}.csv")
        ode = crnmod.Trajectory(res.times, res.ode_v * res.n_mol, res.n_mol)
        crnmod.write_trajectories_csv(traj_path, kept[res.n_mol], ode)
        print(f"n_mol={res.n_mol} rmse={res.rmse:.9g} runs={res.runs}")
    return 0


def _cmd_bp_train(ns) -> int:
    opts = ns._optset.resolve(ns)
    episode_cfg = _episode_from(opts)
    neuron = _neuron_from({**opts, "model": "gnm", "eta": 0.0})
    config = BpConfig(
        epochs=opts["epochs"],
        lam=opts["lambda"],
        n_hidden=opts["n_hidden"],
        kappa=opts["kappa"],
        hidden=neuron,
        out=neuron,
        episode=episode_cfg,
        seed=opts["seed"],
        gamma_mom=opts["gamma_mom"],
    ).validate()
    pattern_set = harness.pattern_set_for(opts["seed"], opts["seed"], opts["classes"], episode_cfg)
    result = bp_train(config, pattern_set, rng=harness.train_rng_for(opts["seed"], opts["seed"]))
    save_net(opts["net_out"], result.net, _metadata_from(opts))
    tail = (result.actual_history - result.target_history)[-100:]
    mean_err = float(np.mean(np.abs(tail))) if tail.size else 0.0
    print(f"trained epochs={config.epochs} mean_abs_error_last100={mean_err:.9g} "
          f"net={opts['net_out']}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="gnmlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a single neuron", add_help=True)
    o = OptionSet(p)
    _add_neuron_opts(o)
    _add_episode_opts(o)
    _add_train_opts(o)
    o.add("--weights-out", type=str, default="weights.txt")
    o.add("--history-out", type=str, default=None, help="per-epoch target/actual CSV")
    p.set_defaults(func=_cmd_train, _optset=o)

    p = sub.add_parser("eval", help="noisy performance of trained weights")
    o = OptionSet(p)
    _add_neuron_opts(o)
    _add_episode_opts(o)
    _add_eval_opts(o)
    o.add("--weights", type=str, required=True, help="GNM-WEIGHTS v1 file")
    o.add("--seed", type=int, default=0)
    o.add("--trace-out", type=str, default=None, help="write one evaluation trace CSV")
    p.set_defaults(func=_cmd_eval, _optset=o)

    p = sub.add_parser("sweep", help="train and evaluate an (alpha, eta) grid")
    o = OptionSet(p)
    _add_neuron_opts(o)
    _add_episode_opts(o)
    _add_train_opts(o)
    _add_eval_opts(o)
    o.add("--alphas", type=parse_float_list, default=(0.025, 0.08, 0.3, 0.6, 1.0))
    o.add("--etas", type=parse_float_list, default=(0.0, 0.25, 0.5, 0.75, 0.975))
    o.add("--seeds", type=parse_int_list, default=(0, 1, 2))
    o.add("--master-seed", type=int, default=0)
    o.add("--out", type=str, default="sweep.csv")
    p.set_defaults(func=_cmd_sweep, _optset=o)

    p = sub.add_parser("compare", help="train and compare model/trainer variants")
    o = OptionSet(p)
    _add_neuron_opts(o)
    _add_episode_opts(o)
    _add_train_opts(o)
    _add_eval_opts(o)
    o.add("--models", type=parse_str_list, default=("gnm-all", "gnm-et"),
          help="comma list from gnm-all, gnm-et, lif, bp")
    o.add("--seeds", type=parse_int_list, default=tuple(range(10)))
    o.add("--master-seed", type=int, default=0)
    o.add("--n-hidden", type=int, default=10, help="hidden units for the bp model")
    o.add("--kappa", type=float, default=0.1, help="lateral inhibition for the bp model")
    o.add("--out", type=str, default="compare.csv")
    p.set_defaults(func=_cmd_compare, _optset=o)

    p = sub.add_parser("crn", help="stochastic reaction-network noise study")
    o = OptionSet(p)
    _add_episode_opts(o)
    o.add("--weights", type=str, default=None, help="GNM-WEIGHTS v1 file (else --fill-weight)")
    o.add("--fill-weight", type=float, default=0.5)
    o.add("--n-mol", type=parse_int_list, default=(25, 100, 500))
    o.add("--runs", type=int, default=100)
    o.add("--crn-alpha", type=float, default=0.2, help="V decay rate")
    o.add("--rate-c", type=float, default=10.0, help="input conversion rate C")
    o.add("--sample-dt", type=float, default=0.1)
    o.add("--horizon", type=float, default=None, help="simulated time; default pattern+10")
    o.add("--keep-trajectories", type=int, default=5, help="runs written to the trajectory CSV")
    o.add("--seed", type=int, default=0)
    o.add("--out-dir", type=str, default=".")
    p.set_defaults(func=_cmd_crn, _optset=o)

    p = sub.add_parser("bp-train", help="train the layered network")
    o = OptionSet(p)
    _add_neuron_opts(o)
    _add_episode_opts(o)
    _add_train_opts(o)
    o.add("--n-hidden", type=int, default=10)
    o.add("--kappa", type=float, default=0.1)
    o.add("--net-out", type=str, default="net.txt")
    p.set_defaults(func=_cmd_bp_train, _optset=o)

    return parser


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        return ns.func(ns)
    except (ConfigError, ConfigurationError, ParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # anything past validation is a runtime failure
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
