"""Online parameter estimation for interacting particle systems."""

from ._core import (
    drift,
    figure_ids,
    figure_preset,
    finite_n_objective,
    mf_objective,
    pseudo_targets,
    rao_blackwell_error,
    replicate,
    run,
    stationary_moments,
    tangent_fd_error,
)

__all__ = [
    "drift",
    "figure_ids",
    "figure_preset",
    "finite_n_objective",
    "mf_objective",
    "pseudo_targets",
    "rao_blackwell_error",
    "replicate",
    "run",
    "stationary_moments",
    "tangent_fd_error",
]
