"""k-NN imputation of missing values in compositional data.

Distances are the Jensen-Shannon divergence (zero-friendly) and the
Aitchison distance (baseline); donors are aggregated with a power-transform
Fréchet mean whose exponent, together with ``k``, can be tuned by repeated
leave-N-out cross-validation, globally or per missingness pattern.
"""

from .distances import DistanceKind, aitchison_distance, contour_grid, distances_to_set, jsd, jsd_via_kld
from .frechet import frechet_mean, frechet_trajectory
from .imputer import ImputationResult, ImputerConfig, impute, impute_adaptive, impute_baseline_aitchison
from .simplex import CompositionalTable, MissingnessPattern, closure, decompose_row, partition
from .tuner import CvSettings, TuningReport, tune, tune_per_pattern

__all__ = [
    "CompositionalTable",
    "CvSettings",
    "DistanceKind",
    "ImputationResult",
    "ImputerConfig",
    "MissingnessPattern",
    "TuningReport",
    "aitchison_distance",
    "closure",
    "contour_grid",
    "decompose_row",
    "distances_to_set",
    "frechet_mean",
    "frechet_trajectory",
    "impute",
    "impute_adaptive",
    "impute_baseline_aitchison",
    "jsd",
    "jsd_via_kld",
    "partition",
    "tune",
    "tune_per_pattern",
]
