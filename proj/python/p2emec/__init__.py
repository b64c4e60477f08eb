"""Play-to-earn mobile-edge-computing simulator with multi-agent loss-sharing PPO."""

from ._core import (
    DlOutcome,
    MecEnv,
    NetworkConfig,
    TrainConfig,
    UlOutcome,
    allocation_oracle,
    compute_gae,
    default_network_config,
    default_train_config,
    earning_potential,
    load_config_file,
    parse_config_text,
    run_random,
    spearman,
    train,
)

__all__ = [
    "DlOutcome",
    "MecEnv",
    "NetworkConfig",
    "TrainConfig",
    "UlOutcome",
    "allocation_oracle",
    "compute_gae",
    "default_network_config",
    "default_train_config",
    "earning_potential",
    "load_config_file",
    "parse_config_text",
    "run_random",
    "spearman",
    "train",
]
