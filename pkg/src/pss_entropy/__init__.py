"""Partitioned sample-spacing (PSS) entropy, mutual information and total correlation.

The estimator partitions the data box into ``ell**d`` equal-width cells and
multiplies, inside each occupied cell, one-dimensional m-spacing densities.
Kozachenko-Leonenko and KSG k-nearest-neighbour estimators are included as
baselines, together with seeded synthetic benchmarks that have closed-form
entropies.
"""

from .errors import (
    ConfigError,
    DegenerateDataError,
    InvalidInputError,
    InvalidLabelsError,
    OutOfRangeError,
    ParseError,
    PssError,
    SelectionError,
)
from .knn import kl_entropy, ksg_entropy
from .modelsel import class_conditional_mi, cv_select_ell, greedy_forward_select
from .pss import (
    PssConfig,
    entropy,
    estimate_entropy,
    fit,
    log_density,
    mutual_information,
    total_correlation,
)
from .synthetic import gamma_spec, normal_spec, oracle_entropy, sample

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateDataError",
    "InvalidInputError",
    "InvalidLabelsError",
    "OutOfRangeError",
    "ParseError",
    "PssConfig",
    "PssError",
    "SelectionError",
    "class_conditional_mi",
    "cv_select_ell",
    "entropy",
    "estimate_entropy",
    "fit",
    "gamma_spec",
    "greedy_forward_select",
    "kl_entropy",
    "ksg_entropy",
    "log_density",
    "mutual_information",
    "normal_spec",
    "oracle_entropy",
    "sample",
    "total_correlation",
]
