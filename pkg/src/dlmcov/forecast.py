"""First-order Bayes linear forecasting for the constant DLM."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import ModelSpec


class Empty(ValueError):
    pass


class SingularForecastVariance(UserWarning):
    pass


@dataclass(frozen=True)
class ForecastState:
    m: np.ndarray
    C: np.ndarray
    t: int = 0


@dataclass(frozen=True)
class StepDiagnostic:
    t: int
    forecast_mean: np.ndarray
    forecast_var: np.ndarray
    error: np.ndarray
    standardized_size: float

    @property
    def expected_size(self) -> int:
        return self.error.size

    @property
    def size_ratio(self) -> float:
        return self.standardized_size / self.expected_size


def init_state(spec: ModelSpec) -> ForecastState:
    return ForecastState(spec.mu0.copy(), spec.Sigma.copy(), 0)


def forecast_step(state: ForecastState, spec: ModelSpec, V=None, W=None):
    """Return ``(f, Q, a, R)`` for the next observation."""
    V = spec.V if V is None else np.asarray(V, dtype=float)
    W = spec.W if W is None else np.asarray(W, dtype=float)
    G, F = spec.G, spec.F
    a = G @ state.m
    R = G @ state.C @ G.T + W
    f = F.T @ a
    Q = F.T @ R @ F + V
    return f, Q, a, R


def _solve_psd(Q, rhs):
    try:
        c = np.linalg.cholesky((Q + Q.T) / 2)
    except np.linalg.LinAlgError:
        warnings.warn("forecast variance is singular; using pseudo-inverse",
                      SingularForecastVariance, stacklevel=3)
        return np.linalg.pinv(Q) @ rhs
    y = np.linalg.solve(c, rhs)
    return np.linalg.solve(c.T, y)


def update_step(state: ForecastState, x, spec: ModelSpec, V=None, W=None):
    """One predict/update cycle; returns ``(new_state, diagnostic)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    f, Q, a, R = forecast_step(state, spec, V, W)
    e = x - f
    Qinv_e = _solve_psd(Q, e)
    RF = R @ spec.F
    gain = _solve_psd(Q, RF.T).T  # R F Q^{-1}
    m = a + RF @ Qinv_e
    C = R - gain @ Q @ gain.T
    C = (C + C.T) / 2
    t = state.t + 1
    diag = StepDiagnostic(t, f, Q, e, float(e @ Qinv_e))
    return ForecastState(m, C, t), diag


def run_filter(series, spec: ModelSpec, V=None, W=None, state=None):
    """Filter a whole series; returns ``(final_state, diagnostics)``."""
    X = np.asarray(series, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    state = init_state(spec) if state is None else state
    diags = []
    for x in X:
        state, d = update_step(state, x, spec, V, W)
        diags.append(d)
    return state, diags


def size_ratio_summary(diagnostics) -> float:
    """Mean standardized one-step error divided by its expectation ``r``."""
    diagnostics = list(diagnostics)
    if not diagnostics:
        raise Empty("no diagnostics")
    return float(np.mean([d.size_ratio for d in diagnostics]))
