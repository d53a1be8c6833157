"""Seeded simulation of DLM series and Monte-Carlo moment estimates.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence``.
Replicates are generated in fixed-size blocks and block ``b`` draws from the
stream ``SeedSequence([seed, b])``, so results do not depend on how a run is
split up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beliefs import FourthOrderBeliefs, gaussian_fourth_moments
from .model import ModelSpec
from .products import vec
from .quadratic import QuadraticObservable

BLOCK = 4096


class WrongMode(ValueError):
    pass


def _sqrt_psd(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    lam, Q = np.linalg.eigh((A + A.T) / 2)
    if lam.min() < -1e-10 * max(1.0, abs(lam).max()):
        raise ValueError("covariance is not PSD")
    return Q * np.sqrt(np.clip(lam, 0, None))


@dataclass(frozen=True)
class ResidualGenerator:
    """Gaussian residuals with fixed or two-point-mixture covariances.

    In ``mixture`` mode each replicate series draws its observation
    covariance from ``(V1, V2)`` and, independently, its state covariance from
    ``(W1, W2)``, each with probability ``q`` on the first component. Drawing
    them independently keeps the shared matrices for the two residual kinds
    uncorrelated, as the moment engine assumes.
    """

    mode: str
    V: np.ndarray | None = None
    W: np.ndarray | None = None
    components: tuple | None = None  # ((V1, W1), (V2, W2))
    q: float = 0.5

    def __post_init__(self):
        if self.mode == "gaussian_fixed":
            if self.V is None or self.W is None:
                raise ValueError("gaussian_fixed needs V and W")
        elif self.mode == "mixture":
            if self.components is None or len(self.components) != 2:
                raise ValueError("mixture needs two (V, W) components")
            if not 0 < self.q < 1:
                raise ValueError("q must lie in (0, 1)")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")

    @classmethod
    def gaussian(cls, V, W) -> "ResidualGenerator":
        return cls("gaussian_fixed", V=np.asarray(V, float), W=np.asarray(W, float))

    @classmethod
    def mixture(cls, V1, W1, V2, W2, q=0.5) -> "ResidualGenerator":
        comps = ((np.asarray(V1, float), np.asarray(W1, float)),
                 (np.asarray(V2, float), np.asarray(W2, float)))
        return cls("mixture", components=comps, q=q)

    @property
    def mean_V(self) -> np.ndarray:
        if self.mode == "gaussian_fixed":
            return np.asarray(self.V, float)
        (V1, _), (V2, _) = self.components
        return self.q * V1 + (1 - self.q) * V2

    @property
    def mean_W(self) -> np.ndarray:
        if self.mode == "gaussian_fixed":
            return np.asarray(self.W, float)
        (_, W1), (_, W2) = self.components
        return self.q * W1 + (1 - self.q) * W2

    def _draw(self, rng, N, n, r, p):
        z_nu = rng.standard_normal((N, n, r))
        z_om = rng.standard_normal((N, n, p))
        if self.mode == "gaussian_fixed":
            nu = z_nu @ _sqrt_psd(self.V).T
            om = z_om @ _sqrt_psd(self.W).T
            return nu, om
        (V1, W1), (V2, W2) = self.components
        pick_v = rng.random(N) < self.q
        pick_w = rng.random(N) < self.q
        nu = np.where(pick_v[:, None, None], z_nu @ _sqrt_psd(V1).T, z_nu @ _sqrt_psd(V2).T)
        om = np.where(pick_w[:, None, None], z_om @ _sqrt_psd(W1).T, z_om @ _sqrt_psd(W2).T)
        return nu, om


def _simulate_block(spec: ModelSpec, gen: ResidualGenerator, n: int, N: int, rng):
    r, p = spec.r, spec.p
    theta = spec.mu0 + rng.standard_normal((N, p)) @ _sqrt_psd(spec.Sigma).T
    nu, om = gen._draw(rng, N, n, r, p)
    X = np.empty((N, n, r))
    G, Ft = spec.G, spec.F.T
    for t in range(n):
        theta = theta @ G.T + om[:, t]
        X[:, t] = theta @ Ft.T + nu[:, t]
    return X


def simulate_batch(spec: ModelSpec, gen: ResidualGenerator, n: int, N: int, seed: int) -> np.ndarray:
    """``N`` independent replicate series, shape ``(N, n, r)``."""
    if n < 1 or N < 1:
        raise ValueError("n and N must be positive")
    out = np.empty((N, n, spec.r))
    for b, start in enumerate(range(0, N, BLOCK)):
        size = min(BLOCK, N - start)
        rng = np.random.default_rng(np.random.SeedSequence([seed, b]))
        out[start:start + size] = _simulate_block(spec, gen, n, size, rng)
    return out


def simulate_series(spec: ModelSpec, gen: ResidualGenerator, n: int, seed: int) -> np.ndarray:
    """One series of length ``n`` as an ``(n, r)`` array."""
    if n < 3:
        raise ValueError("n must be >= 3")
    return simulate_batch(spec, gen, n, 1, seed)[0]


def mixture_fourth_moments(gen: ResidualGenerator) -> FourthOrderBeliefs:
    """Exact fourth-order beliefs implied by a mixture generator."""
    if gen.mode != "mixture":
        raise WrongMode("fourth moments are only defined for mixture mode")
    q = gen.q
    (V1, W1), (V2, W2) = gen.components
    dv, dw = vec(V1 - V2), vec(W1 - W2)
    return FourthOrderBeliefs(
        q * (1 - q) * np.outer(dw, dw),
        q * (1 - q) * np.outer(dv, dv),
        q * gaussian_fourth_moments(W1) + (1 - q) * gaussian_fourth_moments(W2),
        q * gaussian_fourth_moments(V1) + (1 - q) * gaussian_fourth_moments(V2),
    )


def generator_beliefs(gen: ResidualGenerator) -> FourthOrderBeliefs:
    """Ground-truth fourth-order beliefs for either generator mode."""
    if gen.mode == "mixture":
        return mixture_fourth_moments(gen)
    p, r = gen.mean_W.shape[0], gen.mean_V.shape[0]
    return FourthOrderBeliefs(
        np.zeros((p * p, p * p)), np.zeros((r * r, r * r)),
        gaussian_fourth_moments(gen.W), gaussian_fourth_moments(gen.V),
    )


def evaluate_batch(q: QuadraticObservable, batch: np.ndarray, H) -> np.ndarray:
    """vec(Y) for every replicate, shape ``(N, r^2)``."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    Hk = H if q.step == 1 else H @ H
    d = batch[:, q.t - 1] - batch[:, q.t - 1 - q.step] @ Hk.T
    if q.conj is not None:
        d = d @ q.conj.T
    # column-stacking vec: index i + r*j holds d_i d_j
    return (d[:, None, :] * d[:, :, None]).reshape(len(d), -1)


def empirical_cov(ya: np.ndarray, yb: np.ndarray):
    """Sample covariance of two vector samples with per-entry standard errors."""
    N = ya.shape[0]
    ca = ya - ya.mean(axis=0)
    cb = yb - yb.mean(axis=0)
    est = ca.T @ cb / (N - 1)
    second = (ca ** 2).T @ (cb ** 2) / N
    se = np.sqrt(np.clip(second - est ** 2, 0, None) / N)
    return est, se


def monte_carlo_cov(a: QuadraticObservable, b: QuadraticObservable, gen: ResidualGenerator,
                    N: int, seed: int, spec: ModelSpec, H, batch=None):
    """Empirical Cov(vec a, vec b) over ``N`` replicate series, with SEs.

    A pre-simulated ``batch`` of shape ``(N, n, r)`` may be passed to reuse
    replicates across several observable pairs.
    """
    if batch is None:
        if N < 1000:
            raise ValueError("N must be at least 1000")
        n = max(a.t, b.t)
        batch = simulate_batch(spec, gen, n, N, seed)
    return empirical_cov(evaluate_batch(a, batch, H), evaluate_batch(b, batch, H))
