"""Deterministic spiking-network simulator with closed-loop stimulation
protocols, an STDP parameter-sweep harness, and a simulated arena robot."""

__version__ = "0.1.0"

from .errors import AnalysisError, ConfigurationError, NumericFault, SpikeloopError
from .neuron import (
    FAST_SPIKING,
    REGULAR_SPIKING,
    IzhikevichParams,
    NeuronState,
    preset_params,
    step_neuron,
)
from .plasticity import (
    DecayParams,
    StdpParams,
    StpParams,
    StpState,
    WeightBounds,
    apply_decay,
    apply_weight_update,
    stdp_delta_w,
    stdp_integral,
    stp_scale,
    stp_step,
)
from .network import (
    Network,
    NetworkConfig,
    SynapseMatrix,
    apply_stdp_on_spikes,
    build_network,
    network_step,
    snapshot_mean_input_weight,
)
from .embodiment import (
    ArenaConfig,
    ArenaTask,
    LoopTask,
    LoopTaskConfig,
    RobotPose,
    removal_schedule_from_events,
    robot_kinematics_step,
    sensor_reading,
    sensor_to_probability,
    spikes_to_wheel_speed,
)
from .experiment import (
    CellResult,
    ExperimentSpec,
    RunResult,
    SweepSpec,
    compute_evoked_rates,
    compute_reaction_times,
    compute_selection_indicator,
    min_selection_frequency,
    run_experiment,
    run_minimal_pair,
    run_parameter_sweep,
    run_scripted_pair,
    success_rate,
)
