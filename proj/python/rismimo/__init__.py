"""RIS-assisted MIMO transceivers: SVD/water-filling design and a trained autoencoder."""

from ._core import (
    Autoencoder,
    CheckpointError,
    ConfigError,
    DimensionError,
    DomainError,
    RankDeficiencyError,
    TrainConfig,
    awgn_bpsk_ber,
    awgn_bpsk_theory,
    design_link,
    effective_channel,
    modelbased_ber,
    optimize_phases,
    path_gain_objective,
    q_function,
    sample_channels,
    selftest,
    svd,
    train,
    water_filling,
)

__all__ = [
    "Autoencoder",
    "CheckpointError",
    "ConfigError",
    "DimensionError",
    "DomainError",
    "RankDeficiencyError",
    "TrainConfig",
    "awgn_bpsk_ber",
    "awgn_bpsk_theory",
    "design_link",
    "effective_channel",
    "modelbased_ber",
    "optimize_phases",
    "path_gain_objective",
    "q_function",
    "sample_channels",
    "selftest",
    "svd",
    "train",
    "water_filling",
]
