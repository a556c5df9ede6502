"""Deterministic one-dimensional cloud-chamber model.

A particle scatters on N fixed spins 1/2 through Dirac-peak interactions.
The package solves the stationary multichannel problem on a one-sided
detector and evolves wave packets in time on a grid.
"""

__version__ = "0.1.0"

from .channelspace import (  # noqa: E402
    ChannelIndex,
    ChannelKinematics,
    DetectorConfig,
    channel_threshold,
    channel_wavenumber,
    coupled_channels,
    hamming_weight,
)
from .stationary import (  # noqa: E402
    ChannelProbabilities,
    ScatteringSolution,
    SingleSpinCoefficients,
    assemble_system,
    channel_probabilities,
    gamma_max,
    single_spin_excitation_probability,
    solve_scattering,
    solve_single_spin,
    unitarity_defect,
)

__all__ = [
    "ChannelIndex", "ChannelKinematics", "DetectorConfig", "channel_threshold",
    "channel_wavenumber", "coupled_channels", "hamming_weight",
    "ChannelProbabilities", "ScatteringSolution", "SingleSpinCoefficients",
    "assemble_system", "channel_probabilities", "gamma_max",
    "single_spin_excitation_probability", "solve_scattering", "solve_single_spin",
    "unitarity_defect",
]
