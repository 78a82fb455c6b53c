"""ADER-DG elastic wave propagation with local time stepping."""

from ._aderlts import (
    AderError,
    ConfigError,
    MisfitError,
    ParameterError,
    RunConfig,
    VersionError,
    assign_clusters,
    basis_counts,
    compare_runs,
    load_config,
    misfit,
    optimize_lambda,
    parse_config,
    preprocess,
    read_seismogram,
    report,
    run,
    theoretical_speedup,
    write_box,
)

__all__ = [
    "AderError",
    "ConfigError",
    "MisfitError",
    "ParameterError",
    "RunConfig",
    "VersionError",
    "assign_clusters",
    "basis_counts",
    "compare_runs",
    "load_config",
    "misfit",
    "optimize_lambda",
    "parse_config",
    "preprocess",
    "read_seismogram",
    "report",
    "run",
    "theoretical_speedup",
    "write_box",
]
