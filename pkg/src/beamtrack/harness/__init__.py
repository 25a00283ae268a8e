from .ablation import (
    AblationConfig,
    SweepConfig,
    calibrate_eps_ref,
    frequency_ablation,
    parse_ablation_config,
    parse_sweep_config,
    sandbox_sweep,
)
from .config import ConfigError, ExperimentConfig, NetConfig, load_experiment_config, parse_experiment_config
from .experiment import recompute_summary, run_experiment, run_single_seed
from .metrics import (
    combined_gain,
    convergence_episode,
    pearson,
    rolling_std,
    smooth,
    tracking_efficiency,
)

__all__ = [
    "AblationConfig",
    "ConfigError",
    "ExperimentConfig",
    "NetConfig",
    "SweepConfig",
    "calibrate_eps_ref",
    "combined_gain",
    "convergence_episode",
    "frequency_ablation",
    "load_experiment_config",
    "parse_ablation_config",
    "parse_experiment_config",
    "parse_sweep_config",
    "pearson",
    "recompute_summary",
    "rolling_std",
    "run_experiment",
    "run_single_seed",
    "sandbox_sweep",
    "smooth",
    "tracking_efficiency",
]
