from .curves import (
    Curve,
    CurveSpec,
    generate_base_path,
    generate_curve,
    nearest_point,
    normalize_error,
    tracking_error,
)
from .manipulator import (
    DisturbanceSpec,
    EnvConfig,
    EnvSnapshot,
    ManipulatorEnv,
    RewardWeights,
    reward,
)
from .pendulum import PendulumConfig, PendulumTrackingEnv, ReferenceSpec, wrap_angle

__all__ = [
    "Curve",
    "CurveSpec",
    "DisturbanceSpec",
    "EnvConfig",
    "EnvSnapshot",
    "ManipulatorEnv",
    "PendulumConfig",
    "PendulumTrackingEnv",
    "ReferenceSpec",
    "RewardWeights",
    "generate_base_path",
    "generate_curve",
    "nearest_point",
    "normalize_error",
    "reward",
    "tracking_error",
    "wrap_angle",
]
