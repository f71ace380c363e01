"""Simulation and training laboratory for a generalised spiking neuron model."""

from .crn import (
    NoiseStudyResult,
    ReactionSystem,
    Trajectory,
    crn_from_weights,
    events_from_raster,
    noise_study,
    ode_reference,
    ssa_run,
)
from .deepnet import (
    BpConfig,
    LayeredNet,
    NetTrace,
    bp_train,
    gradient_relative_error,
    load_net,
    net_backward,
    net_forward,
    net_forward_episode,
    save_net,
)
from .harness import (
    EVAL_GAP_MEAN,
    MST_REFERENCE_EPOCHS,
    ComparisonResult,
    EvalResult,
    SweepGrid,
    SweepRow,
    aggregate_sweep,
    build_eval_stream,
    compare_models,
    noisy_performance,
    residuals,
    run_sweep,
    write_compare_csv,
    write_sweep_csv,
    write_trace_csv,
)
from .learn import (
    MomentumState,
    TrainConfig,
    TrainResult,
    all_update,
    decile_indices,
    eligibility,
    et_update,
    init_weights,
    load_weights,
    momentum_apply,
    observe_episode,
    save_weights,
    train,
)
from .neuron import (
    LifParams,
    NeuronParams,
    NeuronState,
    ParameterError,
    StateTrace,
    gnm_step,
    hill,
    integrate_continuous,
    integrate_continuous_grid,
    lif_run,
    lif_step,
    run_trace,
)
from .patterns import (
    ConfigurationError,
    Episode,
    EpisodeConfig,
    PatternSet,
    SpikeRaster,
    episode_drive,
    generate_episode,
    generate_pattern,
    load_episode,
    make_pattern_set,
    save_episode,
)
from .readout import (
    ErrorTrace,
    SpikeReadout,
    aggregate_error,
    build_error_trace,
    build_error_trace_continuous,
    count_crossings,
    crossing_bins,
    read_episode,
    spike_integral,
)

__version__ = "0.1.0"
