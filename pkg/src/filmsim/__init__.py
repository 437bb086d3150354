"""filmsim: wave-domain beamforming over flexible layered metasurfaces."""

__version__ = "0.1.0"

from .baselines import ArchitectureSpec, MimoZfResult, fit_architecture, mimo_zf_baseline
from .cascade import CascadeState, FitResult, Layer, beamformer, end_to_end, objective
from .geometry import LayerGeometry, SourceArray, build_layer_grid, project_offsets
from .metrics import LinkBudget, RateReport, ber_monte_carlo, nmse, sum_rate, water_filling
from .optimizer import OptimizerConfig, ao_fit, optimal_alpha
from .propagation import UserSet, diffraction_matrix, steering_vector, user_channel
from .scenario import Scenario

__all__ = [
    "ArchitectureSpec",
    "CascadeState",
    "FitResult",
    "Layer",
    "LayerGeometry",
    "LinkBudget",
    "MimoZfResult",
    "OptimizerConfig",
    "RateReport",
    "Scenario",
    "SourceArray",
    "UserSet",
    "__version__",
    "ao_fit",
    "beamformer",
    "ber_monte_carlo",
    "build_layer_grid",
    "diffraction_matrix",
    "end_to_end",
    "fit_architecture",
    "mimo_zf_baseline",
    "nmse",
    "objective",
    "optimal_alpha",
    "project_offsets",
    "steering_vector",
    "sum_rate",
    "user_channel",
    "water_filling",
]
