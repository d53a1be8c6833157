"""Bayes linear adjustment of the covariance matrices of a constant DLM."""

from .adjustment import (
    AdjustmentResult,
    GramSystem,
    ObservableBasis,
    adjust,
    assemble_gram,
    bind_data,
    build_design,
    project,
    repair_psd,
)
from .beliefs import (
    ExchangeablePatternSpec,
    FourthOrderBeliefs,
    expand_pattern,
    gaussian_fourth_moments,
    shampoo_beliefs,
)
from .estimators import CovarianceAdjuster, DLMForecaster
from .forecast import forecast_step, init_state, run_filter, size_ratio_summary, update_step
from .identification import combo_expectation, nu_identifier, omega_identifier
from .model import ModelSpec, NoTransferExists, compute_transfer, shampoo_model, validate_model
from .products import star_product, tensor_product
from .quadratic import (
    cov_target_quadratic,
    covariance_quadratic,
    difference_observables,
    expectation_quadratic,
    one_step,
    two_step,
)
from .simulate import ResidualGenerator, mixture_fourth_moments, monte_carlo_cov, simulate_series

__version__ = "0.1.0"
