"""Quality-diversity optimization with annealed archive thresholds.

Thin python surface over the C++ core: grid archives with per-cell
acceptance thresholds, the benchmark domains, and the experiment runner.
"""

from ._core import (  # noqa: F401
    Archive,
    ArchiveConfig,
    Domain,
    Evaluation,
    InsertOutcome,
    InsertStatus,
    Metrics,
    __version__,
    arm_optimal_coverage,
    convert_learning_rate,
    default_config_json,
    make_domain,
    run_experiment,
    run_property_suite,
    threshold_closed_form,
)

__all__ = [
    "Archive",
    "ArchiveConfig",
    "Domain",
    "Evaluation",
    "InsertOutcome",
    "InsertStatus",
    "Metrics",
    "arm_optimal_coverage",
    "convert_learning_rate",
    "default_config_json",
    "make_domain",
    "run_experiment",
    "run_property_suite",
    "threshold_closed_form",
    "__version__",
]
