"""Slot-based NR-sidelink resource allocation simulator for AGV groups."""

from .config import ScenarioConfig, ConfigError, load_config, dump_config
from .engine import RunReport, run
from .kpi import KpiRecord, export_csv, prr, read_csv, record_from_report, throughput_mbps

__version__ = "0.1.0"

__all__ = [
    "ScenarioConfig", "ConfigError", "load_config", "dump_config",
    "RunReport", "run",
    "KpiRecord", "export_csv", "read_csv", "record_from_report",
    "prr", "throughput_mbps",
    "__version__",
]
