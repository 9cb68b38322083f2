"""Experiment orchestration: CLI, run directories, reports, trend harness."""
from .cli import cli_dispatch, main
from .report import report
from .trend import aoie_trend

__all__ = ["aoie_trend", "cli_dispatch", "main", "report"]
