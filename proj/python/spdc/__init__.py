"""Simulation and heterodyne analysis of a microwave-optical SPDC transducer."""

from pathlib import Path

from ._core import (
    ConfigError,
    DataError,
    DegenerateError,
    ParameterError,
    bootstrap_g2,
    calibrate_gain,
    compose_moments,
    config_hash,
    estimate_noise_occupation,
    g2_ac,
    g2_cc,
    herald_budget,
    invert_moments,
    noise_moments,
    photon_added_thermal,
    power_sweep,
    raw_moments,
    sample_heterodyne,
    simulate,
)
from ._core import compiled_default_config as _compiled_default_config

_packaged = Path(__file__).with_name("defaults.conf")
DEFAULT_CONFIG = str(_packaged if _packaged.exists() else Path(_compiled_default_config))

__all__ = [
    "DEFAULT_CONFIG",
    "ConfigError",
    "DataError",
    "DegenerateError",
    "ParameterError",
    "bootstrap_g2",
    "calibrate_gain",
    "compose_moments",
    "config_hash",
    "estimate_noise_occupation",
    "g2_ac",
    "g2_cc",
    "herald_budget",
    "invert_moments",
    "noise_moments",
    "photon_added_thermal",
    "power_sweep",
    "raw_moments",
    "sample_heterodyne",
    "simulate",
]
