"""scikit-learn style front ends for covariance adjustment and forecasting."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .adjustment import adjust, assemble_gram, bind_data, build_design
from .beliefs import FourthOrderBeliefs
from .forecast import run_filter, size_ratio_summary
from .model import ModelSpec, compute_transfer


def state_variance_from_identified(spec: ModelSpec, FtWF) -> np.ndarray:
    """Map an estimate of ``F^T V^omega F`` back to a ``p x p`` state variance.

    Needs ``r >= p`` with ``F`` of full rank; otherwise ``W`` is not identified
    and the prior ``W`` is returned.
    """
    F = spec.F
    if spec.r < spec.p or np.linalg.matrix_rank(F) < spec.p:
        return spec.W.copy()
    Ftp = np.linalg.pinv(F.T)
    W = Ftp @ np.asarray(FtWF) @ Ftp.T
    return (W + W.T) / 2


def _as_series(X, r):
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if r == 1 else X[None, :]
    if X.shape[1] != r:
        raise ValueError(f"X has {X.shape[1]} columns, model has r={r}")
    return X


class CovarianceAdjuster(BaseEstimator):
    """Bayes linear adjustment of the observational and state covariances.

    Parameters
    ----------
    model : ModelSpec
        Prior second-order specification.
    beliefs : FourthOrderBeliefs
        Fourth-order specification over the residual quadratic products.
    n_obs : int or None
        Number of time points used in the design; ``None`` uses every row.
    psd : {"report_only", "clip"}
        Whether adjusted matrices are clipped to the PSD cone.
    prior_only : bool
        Use the constants-only design (returns the prior expectations).
    solver_tolerance : float
        Relative eigenvalue cutoff of the Gram pseudo-inverse.

    Attributes
    ----------
    adjusted_V_, adjusted_FtWF_, adjusted_W_ : ndarray
    resolution_ : dict
    result_ : AdjustmentResult
    """

    def __init__(self, model=None, beliefs=None, n_obs=None, psd="report_only",
                 prior_only=False, solver_tolerance=1e-10):
        self.model = model
        self.beliefs = beliefs
        self.n_obs = n_obs
        self.psd = psd
        self.prior_only = prior_only
        self.solver_tolerance = solver_tolerance

    def fit(self, X, y=None):
        spec: ModelSpec = self.model
        beliefs: FourthOrderBeliefs = self.beliefs
        if spec is None or beliefs is None:
            raise ValueError("model and beliefs are required")
        X = _as_series(X, spec.r)
        n = X.shape[0] if self.n_obs is None else int(self.n_obs)
        transfer = compute_transfer(spec)
        basis = build_design(n, spec, transfer.H, prior_only=self.prior_only)
        gram = assemble_gram(basis, beliefs, spec, solver_tolerance=self.solver_tolerance)
        result = bind_data(adjust(gram), basis, X, transfer.H, psd=self.psd)
        self.transfer_ = transfer
        self.basis_ = basis
        self.gram_ = gram
        self.result_ = result
        self.adjusted_V_ = result.adjusted["Vnu"]
        self.adjusted_FtWF_ = result.adjusted["FtVomegaF"]
        self.adjusted_W_ = state_variance_from_identified(spec, self.adjusted_FtWF_)
        self.resolution_ = result.resolution
        return self

    def adjusted_model(self) -> ModelSpec:
        check_is_fitted(self, "result_")
        return self.model.with_covariances(V=self.adjusted_V_, W=self.adjusted_W_)


class DLMForecaster(BaseEstimator):
    """First-order DLM filter with one-step size diagnostics.

    ``V`` and ``W`` override the model's matrices when given.
    """

    def __init__(self, model=None, V=None, W=None):
        self.model = model
        self.V = V
        self.W = W

    def fit(self, X, y=None):
        X = _as_series(X, self.model.r)
        self.state_, self.diagnostics_ = run_filter(X, self.model, self.V, self.W)
        self.size_ratio_ = size_ratio_summary(self.diagnostics_)
        return self

    def predict(self, X):
        """One-step-ahead forecast means for each row of ``X``."""
        check_is_fitted(self, "state_")
        X = _as_series(X, self.model.r)
        _, diags = run_filter(X, self.model, self.V, self.W)
        return np.array([d.forecast_mean for d in diags])

    def size_ratio(self, X) -> float:
        X = _as_series(X, self.model.r)
        return size_ratio_summary(run_filter(X, self.model, self.V, self.W)[1])
