"""Configuration, persistence, initial data, reports and the CLI."""

from .config import DataFamily, DataParams, RunConfig, VerifyParams, load_config, parse_config_text
from .data import make_initial_data, smallness_norm
from .report import DecayReport, build_report, emit_report, parse_report
from .runner import run, sweep, verify_linear

__all__ = [
    "DataFamily", "DataParams", "RunConfig", "VerifyParams", "load_config",
    "parse_config_text", "make_initial_data", "smallness_norm", "DecayReport",
    "build_report", "emit_report", "parse_report", "run", "sweep", "verify_linear",
]
