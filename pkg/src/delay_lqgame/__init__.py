"""Distributed LQ-game controller synthesis and simulation for sampled
plants with per-controller input delays."""

from .errors import (
    CouplingSingularityError,
    DelayBoundError,
    DelayGameError,
    DimensionError,
    IntervalError,
    SchemaError,
    SingularMatrixError,
    ValidationError,
)
from .lin_ops import (
    BlockLayout,
    augmented_layout,
    block_get,
    block_set,
    exp_integral,
    mat_exp,
    solve,
    symmetrize,
)
from .model import (
    ContinuousPlant,
    DiscretePlant,
    ExperimentConfig,
    GameWeights,
    PRESETS,
    Scheme,
    config_from_dict,
    config_to_dict,
    discretize,
    dump_config,
    load_config,
    preset_generic,
    preset_lfc,
)
from .schemes import (
    SchemeResult,
    SweepPoint,
    compare_schemes,
    run_scheme,
    sweep_delays,
    synthesize_for_scheme,
    write_comparison_csv,
    write_sweep_csv,
)
from .simulate import (
    DeviationReport,
    NASH_TOLERANCE,
    Trajectory,
    evaluate_costs,
    nash_deviation_check,
    read_trajectory_csv,
    rollout,
    write_trajectory_csv,
)
from .synthesis import (
    GainSchedule,
    StepCoefficients,
    synthesize_delay_free_game,
    synthesize_multi,
    synthesize_single_delayed,
    synthesize_two,
)

__version__ = "0.1.0"

__all__ = [
    "BlockLayout",
    "ContinuousPlant",
    "CouplingSingularityError",
    "DelayBoundError",
    "DelayGameError",
    "DeviationReport",
    "DimensionError",
    "DiscretePlant",
    "ExperimentConfig",
    "GainSchedule",
    "GameWeights",
    "IntervalError",
    "NASH_TOLERANCE",
    "PRESETS",
    "SchemaError",
    "Scheme",
    "SchemeResult",
    "SingularMatrixError",
    "StepCoefficients",
    "SweepPoint",
    "Trajectory",
    "ValidationError",
    "augmented_layout",
    "block_get",
    "block_set",
    "compare_schemes",
    "config_from_dict",
    "config_to_dict",
    "discretize",
    "dump_config",
    "evaluate_costs",
    "exp_integral",
    "load_config",
    "mat_exp",
    "nash_deviation_check",
    "preset_generic",
    "preset_lfc",
    "read_trajectory_csv",
    "rollout",
    "run_scheme",
    "solve",
    "sweep_delays",
    "symmetrize",
    "synthesize_delay_free_game",
    "synthesize_for_scheme",
    "synthesize_multi",
    "synthesize_single_delayed",
    "synthesize_two",
    "write_comparison_csv",
    "write_sweep_csv",
    "write_trajectory_csv",
]
