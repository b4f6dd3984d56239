"""Adaptive droop-control design and simulation for radial LV feeders."""
from .design import (
    DesignResult,
    WindowSchedule,
    d_bound,
    delta_phi,
    design_all_windows,
    epsilon_from_delta,
    epsilon_y_bound,
    feasibility,
    synthesize_specs,
)
from .droop import (
    ControllerBank,
    DroopSpec,
    controller_derivative,
    min_ramp_slope,
    droop_eval,
    reset,
    slope_of,
    verify_slope_restriction,
)
from .errors import *  # noqa: F401,F403
from .feeder import (
    CompactForm,
    FeederParams,
    FlowState,
    Injections,
    SubstationProfile,
    build_H,
    build_phi,
    forward_sweep,
    output_map,
    voltages_from_y,
)
from .metrics import MetricsReport, check_regulation, compare, metric_q, metric_rho
from .scenario import (
    LoadGenSpec,
    ScenarioConfig,
    build_scenario,
    builtin_cigre,
    dump_config,
    generate_loads,
    load_config,
)
from .simulation import LoadProfiles, Scenario, SimTrace, curtail, rk4_step, run

__version__ = "0.1.0"
