"""Experiment configuration: scenario parameters, validation, YAML config files.

A ScenarioConfig fully determines a simulation run, including every random
draw (all randomness is derived from the single seed).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import yaml

ALLOC_MODES = ("random", "mode1", "mode2_noreeval", "mode2", "cooperative")
DUPLEX_MODES = ("half", "full")
FEEDBACK_MODES = ("ack_nack", "nack_only")


class ConfigError(ValueError):
    """Raised for invalid or malformed scenario configuration."""


@dataclass
class ScenarioConfig:
    # factory hall geometry
    hall_width_m: float = 200.0
    hall_depth_m: float = 200.0
    workpiece_edge_m: float = 10.0

    # radio parameters
    carrier_freq_ghz: float = 2.0
    bandwidth_mhz: float = 20.0
    tx_power_dbm: float = 23.0
    antenna_gain_tx_dbi: float = 3.0
    antenna_gain_rx_dbi: float = 3.0
    noise_figure_db: float = 9.0

    # population and mobility
    n_group_agvs: int = 4
    n_a2i_links: int = 10
    group_speed_kmh: float = 6.0
    a2i_speed_kmh: float = 16.0

    # traffic
    packet_period_ms: int = 10
    packet_size_a2a_bits: int = 2400
    packet_size_a2i_bits: int = 2000

    # allocation behaviour
    alloc_mode: str = "mode2"
    harq_enabled: bool = False
    harq_feedback: str = "nack_only"
    harq_min_range_m: float = 28.3
    duplex: str = "half"
    residual_si_db: float | None = None
    sensing_window_ms: int = 100

    # run control
    sim_duration_s: float = 60.0
    seed: int = 1
    position_update_s: float = 0.1

    def validate(self) -> None:
        if not (2 <= self.n_group_agvs <= 8):
            raise ConfigError(
                f"n_group_agvs must be in [2, 8], got {self.n_group_agvs}")
        if self.packet_period_ms not in (3, 10):
            raise ConfigError(
                f"packet_period_ms must be 3 or 10, got {self.packet_period_ms}")
        if self.sensing_window_ms not in (100, 1100):
            raise ConfigError(
                f"sensing_window_ms must be 100 or 1100, got {self.sensing_window_ms}")
        if self.alloc_mode not in ALLOC_MODES:
            raise ConfigError(f"unknown alloc_mode {self.alloc_mode!r}")
        if self.duplex not in DUPLEX_MODES:
            raise ConfigError(f"unknown duplex mode {self.duplex!r}")
        if self.harq_feedback not in FEEDBACK_MODES:
            raise ConfigError(f"unknown harq_feedback {self.harq_feedback!r}")
        if self.hall_width_m <= 0 or self.hall_depth_m <= 0:
            raise ConfigError("hall dimensions must be positive")
        if self.workpiece_edge_m <= 0:
            raise ConfigError("workpiece_edge_m must be positive")
        if self.n_a2i_links < 0:
            raise ConfigError("n_a2i_links must be >= 0")
        if self.tx_power_dbm > 23.0:
            raise ConfigError("tx_power_dbm exceeds the 23 dBm device limit")
        for name in ("tx_power_dbm", "antenna_gain_tx_dbi", "antenna_gain_rx_dbi",
                     "noise_figure_db", "carrier_freq_ghz", "bandwidth_mhz"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigError(f"{name} must be finite, got {v!r}")
        if self.sim_duration_s < 0:
            raise ConfigError("sim_duration_s must be >= 0")
        if self.position_update_s <= 0:
            raise ConfigError("position_update_s must be positive")
        if self.packet_size_a2a_bits <= 0 or self.packet_size_a2i_bits <= 0:
            raise ConfigError("packet sizes must be positive")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        cfg = replace(self, **kwargs)
        cfg.validate()
        return cfg


# YAML schema: section -> {yaml key -> dataclass field}
_SCHEMA = {
    "geometry": {
        "hall_width_m": "hall_width_m",
        "hall_depth_m": "hall_depth_m",
        "workpiece_edge_m": "workpiece_edge_m",
    },
    "radio": {
        "carrier_freq_ghz": "carrier_freq_ghz",
        "bandwidth_mhz": "bandwidth_mhz",
        "tx_power_dbm": "tx_power_dbm",
        "antenna_gain_tx_dbi": "antenna_gain_tx_dbi",
        "antenna_gain_rx_dbi": "antenna_gain_rx_dbi",
        "noise_figure_db": "noise_figure_db",
    },
    "group": {
        "n_agvs": "n_group_agvs",
        "speed_kmh": "group_speed_kmh",
    },
    "a2i": {
        "n_links": "n_a2i_links",
        "speed_kmh": "a2i_speed_kmh",
    },
    "traffic": {
        "packet_period_ms": "packet_period_ms",
        "packet_size_a2a_bits": "packet_size_a2a_bits",
        "packet_size_a2i_bits": "packet_size_a2i_bits",
    },
    "allocation": {
        "mode": "alloc_mode",
        "harq": "harq_enabled",
        "harq_feedback": "harq_feedback",
        "harq_min_range_m": "harq_min_range_m",
        "duplex": "duplex",
        "residual_si_db": "residual_si_db",
        "sensing_window_ms": "sensing_window_ms",
    },
    "sim": {
        "duration_s": "sim_duration_s",
        "seed": "seed",
        "position_update_s": "position_update_s",
    },
}


def load_config(path: str) -> ScenarioConfig:
    """Load a scenario from a YAML file.

    Every ScenarioConfig field is addressable through the sectioned schema;
    unknown sections or keys are rejected.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    overrides = {}
    for section, entries in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section {section!r}")
        if not isinstance(entries, dict):
            raise ConfigError(f"{path}: section {section!r} must be a mapping")
        for key, value in entries.items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {section}.{key}")
            overrides[_SCHEMA[section][key]] = value
    cfg = ScenarioConfig(**overrides)
    cfg.validate()
    return cfg


def dump_config(cfg: ScenarioConfig, path: str) -> None:
    """Write a scenario back out in the sectioned YAML layout."""
    doc = {}
    for section, entries in _SCHEMA.items():
        doc[section] = {key: getattr(cfg, attr) for key, attr in entries.items()}
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
