"""Overlapped encrypt/transmit and transmit/decrypt pipelines, timing model and sweeps."""

from .bench import MONOLITHIC, PARTITIONED, BenchRow, SweepConfig, benchmark_sweep, column, rows_to_csv, write_csv
from .model import DEFAULT_CHANNEL, MIB, ChannelModel, CostModel, StageTimes
from .runs import (
    run_encrypt_transmit,
    run_monolithic_encrypt_transmit,
    run_monolithic_transmit_decrypt,
    run_transmit_decrypt,
)
from .schedule import (
    AnalyticTotals,
    PipelineTrace,
    ScheduleViolation,
    StageRecord,
    analytic_totals,
    approximate_makespan,
    check_records,
    simulate_two_stage,
    two_stage_makespan,
)

__all__ = [
    "DEFAULT_CHANNEL",
    "MIB",
    "MONOLITHIC",
    "PARTITIONED",
    "AnalyticTotals",
    "BenchRow",
    "ChannelModel",
    "CostModel",
    "PipelineTrace",
    "ScheduleViolation",
    "StageRecord",
    "StageTimes",
    "SweepConfig",
    "analytic_totals",
    "approximate_makespan",
    "benchmark_sweep",
    "check_records",
    "column",
    "rows_to_csv",
    "run_encrypt_transmit",
    "run_monolithic_encrypt_transmit",
    "run_monolithic_transmit_decrypt",
    "run_transmit_decrypt",
    "simulate_two_stage",
    "two_stage_makespan",
    "write_csv",
]
