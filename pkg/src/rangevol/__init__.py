"""Range-based volatility estimation under geometric Brownian motion.

Four estimators built from the high, low and close of a log-price window
(Parkinson, Garman-Klass, Rogers-Satchell, and the bridge-oscillation
estimator), their exact sampling densities, theoretical moments and
interval probabilities, and a deterministic Monte Carlo harness that
reproduces the comparative statistics of all four.
"""

__version__ = "0.1.0"

from .analytics import (
    IntervalReport,
    MomentReport,
    coverage_probability,
    garman_klass_mean,
    interval_probability,
    mean_range_squared_series,
    relative_bias,
    rogers_satchell_mean,
    theoretical_moments,
)
from .densities import (
    DEFAULT_SERIES_CONFIG,
    DensityValue,
    NonConvergenceError,
    SeriesConfig,
    bridge_estimator_pdf,
    bridge_hl_joint_pdf,
    bridge_range_pdf,
    close_pdf,
    high_close_joint_pdf,
    high_pdf,
    hlc_joint_pdf,
    parkinson_estimator_pdf,
    range_close_joint_pdf,
    range_pdf,
)
from .estimators import (
    BRIDGE_FACTOR,
    GK_K1,
    GK_K2,
    GK_K3,
    LN16,
    EstimatorKind,
    GarmanKlassVariant,
    VolatilityEstimate,
    bridge_estimator,
    garman_klass,
    parkinson,
    physical_estimate,
    rogers_satchell,
)
from .montecarlo import (
    CellStats,
    ExperimentConfig,
    ExperimentSummary,
    estimator_label,
    goodness_of_fit,
    histogram_vs_pdf,
    run_experiment,
    sample_dump,
)
from .paths import (
    BridgeExtremes,
    Extremes,
    Path,
    PhysicalBar,
    bar_from_samples,
    bridge_extremes,
    bridge_transform,
    extremes,
    simulate_path,
)

__all__ = [
    "__version__",
    # paths
    "Path", "Extremes", "BridgeExtremes", "PhysicalBar",
    "simulate_path", "bridge_transform", "extremes", "bridge_extremes", "bar_from_samples",
    # estimators
    "LN16", "BRIDGE_FACTOR", "GK_K1", "GK_K2", "GK_K3",
    "EstimatorKind", "GarmanKlassVariant", "VolatilityEstimate",
    "parkinson", "garman_klass", "rogers_satchell", "bridge_estimator", "physical_estimate",
    # densities
    "SeriesConfig", "DensityValue", "NonConvergenceError", "DEFAULT_SERIES_CONFIG",
    "close_pdf", "high_close_joint_pdf", "high_pdf", "hlc_joint_pdf",
    "range_close_joint_pdf", "range_pdf", "bridge_hl_joint_pdf", "bridge_range_pdf",
    "parkinson_estimator_pdf", "bridge_estimator_pdf",
    # analytics
    "MomentReport", "IntervalReport", "mean_range_squared_series", "theoretical_moments",
    "relative_bias", "interval_probability", "coverage_probability",
    "garman_klass_mean", "rogers_satchell_mean",
    # montecarlo
    "ExperimentConfig", "ExperimentSummary", "CellStats", "estimator_label",
    "run_experiment", "histogram_vs_pdf", "goodness_of_fit", "sample_dump",
]
