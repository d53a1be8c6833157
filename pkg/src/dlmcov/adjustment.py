"""Bayes linear adjustment of V^nu and F^T V^omega F in the matrix space.

The space is spanned by the ``r^2`` canonical constant matrices and random
quadratic observables, with inner product ``(A, B) = E Tr[A B^T]``, i.e.
``sum_jk Cov(A_jk, B_jk) + E(A_jk) E(B_jk)``. Adjusted expectations are
orthogonal projections onto that span.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .beliefs import FourthOrderBeliefs
from .model import ModelSpec
from .quadratic import (
    TooShort,
    cov_target_quadratic,
    covariance_quadratic,
    difference_observables,
    expectation_quadratic,
    one_step,
    target_expectation,
    target_variance,
    two_step,
)

SOLVER_TOL = 1e-10
ADJUST_TARGETS = ("Vnu", "FtVomegaF")


class IllConditioned(UserWarning):
    """The Gram system is rank deficient; a pseudo-inverse was used."""


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Family:
    """A time-indexed family ``L X X^T L^T`` of one- or two-step products."""

    name: str
    step: int
    conj: np.ndarray | None

    def observable(self, t, spec, H):
        make = one_step if self.step == 1 else two_step
        return make(t, spec, H, conj=self.conj, label=f"{self.name}[{t}]")

    def first_time(self) -> int:
        return self.step + 1


def design_families(H) -> list[Family]:
    """Distinct families of the observable sets, in a fixed order.

    A conjugated family is dropped when its conjugator equals the identity or
    an earlier family's conjugator for the same difference step. Families
    needing ``H^{-1}`` are omitted when ``H`` is singular.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    r = H.shape[0]
    eye = np.eye(r)
    s = np.linalg.svd(H, compute_uv=False)
    Hinv = np.linalg.inv(H) if s[-1] > 1e-10 * s[0] else None
    candidates = [("X1", 1, None), ("X2", 2, None), ("HX1H", 1, H)]
    if Hinv is not None:
        candidates += [("HiX1Hi", 1, Hinv), ("HiX2Hi", 2, Hinv)]
    seen: dict[int, list[np.ndarray]] = {1: [], 2: []}
    out = []
    for name, step, conj in candidates:
        L = eye if conj is None else conj
        if any(np.allclose(L, M, rtol=0, atol=1e-12) for M in seen[step]):
            continue
        seen[step].append(L)
        out.append(Family(name, step, None if conj is None else np.asarray(conj)))
    return out


@dataclass
class ObservableBasis:
    """Constants ``C_1..C_{r^2}`` plus the random observables of D_n.

    ``C_{r(i-1)+j}`` has a one in position ``(i, j)`` (row-major order).
    """

    r: int
    n: int
    families: list[Family]
    members: list[tuple[int, int]]  # (family index, time)
    spec: ModelSpec
    H: np.ndarray

    @property
    def n_constants(self) -> int:
        return self.r * self.r

    @property
    def n_random(self) -> int:
        return len(self.members)

    @property
    def size(self) -> int:
        return self.n_constants + self.n_random

    def observable(self, idx: int):
        f, t = self.members[idx]
        return self.families[f].observable(t, self.spec, self.H)

    @property
    def randoms(self):
        return [self.observable(i) for i in range(self.n_random)]

    def labels(self) -> list[str]:
        return [f"{self.families[f].name}[{t}]" for f, t in self.members]


def build_design(n: int, spec: ModelSpec, H, prior_only: bool = False) -> ObservableBasis:
    """Basis for ``D_n``; ``prior_only`` keeps the constants alone."""
    if n < 3 and not prior_only:
        raise TooShort(f"need n >= 3, got {n}")
    H = np.atleast_2d(np.asarray(H, dtype=float))
    fams = design_families(H)
    members = []
    if not prior_only:
        for t in range(2, n + 1):
            for i, fam in enumerate(fams):
                if t >= fam.first_time():
                    members.append((i, t))
    return ObservableBasis(spec.r, n, fams, members, spec, H)


@dataclass
class GramSystem:
    """Full Gram matrix and right-hand sides over constants + randoms.

    ``cov_gram`` is the covariance part over the randoms alone and ``means``
    holds ``vec_rowmajor(E(Y_i))`` per random element; the full Gram is
    ``[[I, means^T], [means, cov_gram + means means^T]]``.
    """

    basis: ObservableBasis
    cov_gram: np.ndarray
    means: np.ndarray
    target_cov_rhs: dict
    target_mean: dict
    target_var_trace: dict
    solver_tolerance: float = SOLVER_TOL

    @property
    def gram(self) -> np.ndarray:
        k = self.basis.n_constants
        m = self.basis.n_random
        G = np.empty((k + m, k + m))
        G[:k, :k] = np.eye(k)
        G[k:, :k] = self.means
        G[:k, k:] = self.means.T
        G[k:, k:] = self.cov_gram + self.means @ self.means.T
        return G

    def target_rhs(self, target: str) -> np.ndarray:
        E = self.target_mean[target].reshape(-1)
        return np.concatenate([E, self.target_cov_rhs[target] + self.means @ E])

    def target_norm2(self, target: str) -> float:
        """(target, target)."""
        E = self.target_mean[target]
        return float(self.target_var_trace[target] + np.sum(E * E))

    @property
    def rank(self) -> int:
        return self.basis.n_constants + _rank(self.cov_gram, self.solver_tolerance)


def _rank(K, tol) -> int:
    if K.size == 0:
        return 0
    lam = np.linalg.eigvalsh(K)
    return int(np.sum(lam > tol * max(lam.max(), 0.0))) if lam.max() > 0 else 0


def _pinv_sym(K, tol):
    lam, Q = np.linalg.eigh((K + K.T) / 2)
    top = lam.max() if lam.size else 0.0
    keep = lam > tol * top if top > 0 else np.zeros_like(lam, dtype=bool)
    inv = np.zeros_like(lam)
    inv[keep] = 1.0 / lam[keep]
    return (Q * inv) @ Q.T, int(keep.sum())


def _lag_tables(basis: ObservableBasis, beliefs, spec):
    """Covariance inner products by (family, family, lag), lags clipped to +-3.

    Every observable involves residuals at times ``t-2..t`` at most, so for
    ``|lag| >= 3`` no residual is shared and the value no longer depends on
    the lag.
    """
    fams = basis.families
    t0 = 10
    H = basis.H
    table = {}
    for i, fi in enumerate(fams):
        qi = fi.observable(t0, spec, H)
        for j, fj in enumerate(fams):
            for lag in range(-3, 4):
                qj = fj.observable(t0 - lag, spec, H)
                table[i, j, lag] = float(np.trace(covariance_quadratic(qi, qj, beliefs, spec)))
    return table


def assemble_gram(basis: ObservableBasis, beliefs: FourthOrderBeliefs, spec: ModelSpec,
                  targets=ADJUST_TARGETS, solver_tolerance: float = SOLVER_TOL) -> GramSystem:
    m = basis.n_random
    fams = basis.families
    fam_idx = np.array([f for f, _ in basis.members], dtype=int)
    times = np.array([t for _, t in basis.members], dtype=int)

    table = _lag_tables(basis, beliefs, spec) if m else {}
    nf = len(fams)
    lookup = np.zeros((nf, nf, 7))
    for (i, j, lag), v in table.items():
        lookup[i, j, lag + 3] = v
    if m:
        lag = np.clip(times[:, None] - times[None, :], -3, 3) + 3
        K = lookup[fam_idx[:, None], fam_idx[None, :], lag]
        K = (K + K.T) / 2
    else:
        K = np.zeros((0, 0))

    # means and target cross-covariances are time invariant within a family
    t0 = 10
    fam_mean = [expectation_quadratic(f.observable(t0, spec, basis.H), spec) for f in fams]
    means = np.array([fam_mean[f].reshape(-1) for f in fam_idx]).reshape(m, basis.n_constants)

    cov_rhs, tmean, tvar = {}, {}, {}
    for target in targets:
        per_fam = [float(np.trace(cov_target_quadratic(target, f.observable(t0, spec, basis.H), beliefs, spec)))
                   for f in fams]
        cov_rhs[target] = np.array([per_fam[f] for f in fam_idx], dtype=float)
        tmean[target] = target_expectation(target, spec)
        tvar[target] = float(np.trace(target_variance(target, beliefs, spec)))
    return GramSystem(basis, K, means, cov_rhs, tmean, tvar, solver_tolerance)


def gram_entry_direct(basis: ObservableBasis, i: int, j: int, beliefs, spec) -> float:
    """(Y_i, Y_j) computed straight from the engine, for cross-checking."""
    qi, qj = basis.observable(i), basis.observable(j)
    cov = float(np.trace(covariance_quadratic(qi, qj, beliefs, spec)))
    return cov + float(np.sum(expectation_quadratic(qi, spec) * expectation_quadratic(qj, spec)))


@dataclass
class Projection:
    target: str
    constant_coef: np.ndarray  # r x r, coefficient on C_{r(i-1)+j} at [i, j]
    random_coef: np.ndarray
    resolution: float
    adjusted_variance: float
    prior_variance: float

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([self.constant_coef.reshape(-1), self.random_coef])


def project(gramsys: GramSystem, target: str, method: str = "schur") -> Projection:
    """Orthogonal projection of ``target`` onto the design span.

    ``method="schur"`` eliminates the identity constant block and solves the
    covariance Gram with an eigen pseudo-inverse; ``method="full"`` applies
    the pseudo-inverse to the whole Gram. Both solve ``gram @ a = rhs``.
    """
    tol = gramsys.solver_tolerance
    k = gramsys.basis.n_constants
    m = gramsys.basis.n_random
    if method == "schur":
        K = gramsys.cov_gram
        if m:
            Kinv, rank = _pinv_sym(K, tol)
            if rank < m:
                warnings.warn(f"covariance Gram rank {rank} < {m}", IllConditioned, stacklevel=2)
            beta = Kinv @ gramsys.target_cov_rhs[target]
        else:
            beta = np.zeros(0)
        const = gramsys.target_mean[target].reshape(-1) - gramsys.means.T @ beta
    elif method == "full":
        G = gramsys.gram
        Ginv, rank = _pinv_sym(G, tol)
        if rank < k + m:
            warnings.warn(f"Gram rank {rank} < {k + m}", IllConditioned, stacklevel=2)
        a = Ginv @ gramsys.target_rhs(target)
        const, beta = a[:k], a[k:]
    else:
        raise ValueError(f"unknown method {method!r}")

    prior = gramsys.target_var_trace[target]
    explained = float(gramsys.target_cov_rhs[target] @ beta) if m else 0.0
    adjusted = prior - explained
    resolution = explained / prior if prior > 0 else 0.0
    r = gramsys.basis.r
    return Projection(target, const.reshape(r, r), beta, resolution, adjusted, prior)


def residual_inner_products(gramsys: GramSystem, proj: Projection) -> np.ndarray:
    """(target - E_D(target), D_i) for every basis element, from the Gram alone."""
    return gramsys.target_rhs(proj.target) - gramsys.gram @ proj.coefficients


def repair_psd(matrix, policy: str = "report_only"):
    """Return ``(matrix, report)``; ``policy="clip"`` zeroes negative eigenvalues."""
    A = np.asarray(matrix, dtype=float)
    A = (A + A.T) / 2
    lam, Q = np.linalg.eigh(A)
    report = {
        "eigenvalues": lam.tolist(),
        "negative": [float(x) for x in lam if x < 0],
        "policy": policy,
        "clipped": False,
    }
    if policy in ("report_only", "report"):
        return np.asarray(matrix, dtype=float).copy(), report
    if policy != "clip":
        raise ValueError(f"unknown policy {policy!r}")
    if lam.min() >= 0:
        return np.asarray(matrix, dtype=float).copy(), report
    report["clipped"] = True
    return (Q * np.clip(lam, 0, None)) @ Q.T, report


@dataclass
class AdjustmentResult:
    projections: dict
    basis_labels: list
    adjusted: dict = field(default_factory=dict)
    psd_report: dict = field(default_factory=dict)

    @property
    def resolution(self) -> dict:
        return {k: p.resolution for k, p in self.projections.items()}

    def to_dict(self) -> dict:
        return {
            "targets": list(self.projections),
            "basis": ["C"] + list(self.basis_labels),
            "coefficients": {
                k: {"constants": p.constant_coef.tolist(), "random": p.random_coef.tolist()}
                for k, p in self.projections.items()
            },
            "adjusted": {k: np.asarray(v).tolist() for k, v in self.adjusted.items()},
            "resolution": self.resolution,
            "adjusted_variance": {k: p.adjusted_variance for k, p in self.projections.items()},
            "prior_variance": {k: p.prior_variance for k, p in self.projections.items()},
            "psd_report": self.psd_report,
        }


def adjust(gramsys: GramSystem, targets=ADJUST_TARGETS) -> AdjustmentResult:
    projs = {t: project(gramsys, t) for t in targets}
    return AdjustmentResult(projs, gramsys.basis.labels())


def bind_data(result: AdjustmentResult, basis: ObservableBasis, series, H=None,
              psd: str = "report_only") -> AdjustmentResult:
    """Evaluate adjusted expectations on observed data (first ``n`` rows used)."""
    X = np.asarray(series, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != basis.r:
        raise LengthMismatch(f"series has {X.shape[1]} columns, model has r={basis.r}")
    if basis.n_random and X.shape[0] < basis.n:
        raise LengthMismatch(f"series has {X.shape[0]} rows, design needs n={basis.n}")
    H = basis.H if H is None else np.atleast_2d(np.asarray(H, dtype=float))

    stacks = _family_stacks(basis, X, H) if basis.n_random else None
    adjusted, report = {}, {}
    for target, proj in result.projections.items():
        A = proj.constant_coef.copy()
        if stacks is not None:
            A = A + _weighted_sum(basis, stacks, proj.random_coef)
        A = (A + A.T) / 2
        A, report[target] = repair_psd(A, psd)
        adjusted[target] = A
    return AdjustmentResult(result.projections, result.basis_labels, adjusted, report)


def _family_stacks(basis, X, H):
    if basis.n_random:
        d1, d2 = difference_observables(X[: basis.n], H)
    out = []
    for fam in basis.families:
        d = d1 if fam.step == 1 else d2
        out.append(d if fam.conj is None else d @ fam.conj.T)
    return out


def _weighted_sum(basis, stacks, beta):
    r = basis.r
    total = np.zeros((r, r))
    for (f, t), b in zip(basis.members, beta):
        fam = basis.families[f]
        v = stacks[f][t - 1 - fam.step]
        total += b * np.outer(v, v)
    return total
