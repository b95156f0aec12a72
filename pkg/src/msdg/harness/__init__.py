from .experiment import (
    CasePoint,
    ExperimentRecord,
    RatePair,
    SpikeRegion,
    SweepSpec,
    convergence_rates,
    group_records,
    resonance_report,
    run_case,
    run_sweep,
)
from .io import emit_plot_data, read_csv, write_csv

__all__ = [
    "CasePoint",
    "ExperimentRecord",
    "RatePair",
    "SpikeRegion",
    "SweepSpec",
    "convergence_rates",
    "emit_plot_data",
    "group_records",
    "read_csv",
    "resonance_report",
    "run_case",
    "run_sweep",
    "write_csv",
]
