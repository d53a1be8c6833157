"""Differenced observables, their quadratic products, and moment algebra.

An observable difference such as ``X'_t = X_t - H X_{t-1}`` is a linear form
in residuals, ``sum_k A_k eps_k`` with ``eps_k`` one of ``omega_s`` or
``nu_s``. Moments of ``Y = (sum A_k eps_k)(sum A_k eps_k)^T`` follow from
expanding the product and pairing residual identities.

Beyond the orthogonalities A1-A4 listed in :mod:`dlmcov.beliefs`, the engine
assumes every fourth-order product whose residual identities do not pair up
(e.g. ``eps_a eps_a eps_a eps_b`` or ``eps_a eps_a eps_b eps_c``) has zero
expectation, and that ``Cov(U, eps_a eps_b^T) = 0`` for ``a != b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .beliefs import FourthOrderBeliefs
from .model import ModelSpec
from .products import as_matrix, conjugate

OMEGA, NU = "omega", "nu"


class TooShort(ValueError):
    pass


class ResidualId(NamedTuple):
    kind: str
    t: int


@dataclass(frozen=True, eq=False)
class LinearResidualForm:
    """``sum_k coef_k @ eps_k`` over distinct residuals."""

    terms: tuple

    def __post_init__(self):
        clean = []
        seen = set()
        for rid, coef in self.terms:
            rid = ResidualId(*rid)
            if rid.kind not in (OMEGA, NU):
                raise ValueError(f"unknown residual kind {rid.kind!r}")
            if rid in seen:
                raise ValueError(f"duplicate residual {rid}")
            seen.add(rid)
            coef = np.atleast_2d(np.asarray(coef, dtype=float))
            coef.setflags(write=False)
            clean.append((rid, coef))
        object.__setattr__(self, "terms", tuple(clean))

    @property
    def dim(self) -> int:
        return self.terms[0][1].shape[0]

    @property
    def ids(self):
        return [rid for rid, _ in self.terms]

    def conjugated(self, L) -> "LinearResidualForm":
        L = np.asarray(L, dtype=float)
        return LinearResidualForm(tuple((rid, L @ A) for rid, A in self.terms))

    def shifted(self, dt: int) -> "LinearResidualForm":
        return LinearResidualForm(tuple((ResidualId(rid.kind, rid.t + dt), A)
                                        for rid, A in self.terms))

    def same_as(self, other: "LinearResidualForm", atol=1e-12) -> bool:
        if len(self.terms) != len(other.terms):
            return False
        mine = dict(self.terms)
        for rid, A in other.terms:
            B = mine.get(rid)
            if B is None or B.shape != A.shape or not np.allclose(A, B, rtol=0, atol=atol):
                return False
        return True


@dataclass(frozen=True, eq=False)
class QuadraticObservable:
    """The random matrix ``L X X^T L^T`` for a one- or two-step difference ``X``.

    ``step`` is 1 for ``X_t - H X_{t-1}`` and 2 for ``X_t - H^2 X_{t-2}``;
    ``conj`` is the conjugating matrix ``L`` (``None`` means identity).
    Observables built by hand from a form alone have ``step = 0`` and cannot
    be evaluated on data.
    """

    form: LinearResidualForm
    step: int = 0
    t: int = 0
    conj: np.ndarray | None = None
    label: str = ""

    @property
    def dim(self) -> int:
        return self.form.dim

    def same_as(self, other: "QuadraticObservable") -> bool:
        return self.form.same_as(other.form)

    def evaluate(self, series, H) -> np.ndarray:
        """Value on an observed series (row ``t-1`` holds ``X_t``)."""
        if self.step not in (1, 2):
            raise ValueError("observable has no data recipe")
        X = np.asarray(series, dtype=float)
        H = np.atleast_2d(np.asarray(H, dtype=float))
        Hk = H if self.step == 1 else H @ H
        d = X[self.t - 1] - Hk @ X[self.t - 1 - self.step]
        if self.conj is not None:
            d = self.conj @ d
        return np.outer(d, d)


def one_step_form(t: int, spec: ModelSpec, H) -> LinearResidualForm:
    """``X'_t = F^T omega_t + nu_t - H nu_{t-1}``."""
    r = spec.r
    return LinearResidualForm((
        ((OMEGA, t), spec.F.T),
        ((NU, t), np.eye(r)),
        ((NU, t - 1), -np.asarray(H)),
    ))


def two_step_form(t: int, spec: ModelSpec, H) -> LinearResidualForm:
    """``X''_t = F^T omega_t + F^T G omega_{t-1} + nu_t - H^2 nu_{t-2}``."""
    H = np.asarray(H)
    return LinearResidualForm((
        ((OMEGA, t), spec.F.T),
        ((OMEGA, t - 1), spec.F.T @ spec.G),
        ((NU, t), np.eye(spec.r)),
        ((NU, t - 2), -(H @ H)),
    ))


def one_step(t: int, spec: ModelSpec, H, conj=None, label=None) -> QuadraticObservable:
    if t < 2:
        raise ValueError("one-step differences start at t = 2")
    form = one_step_form(t, spec, H)
    if conj is not None:
        conj = np.asarray(conj, dtype=float)
        form = form.conjugated(conj)
    return QuadraticObservable(form, 1, t, conj, label or f"X1[{t}]")


def two_step(t: int, spec: ModelSpec, H, conj=None, label=None) -> QuadraticObservable:
    if t < 3:
        raise ValueError("two-step differences start at t = 3")
    form = two_step_form(t, spec, H)
    if conj is not None:
        conj = np.asarray(conj, dtype=float)
        form = form.conjugated(conj)
    return QuadraticObservable(form, 2, t, conj, label or f"X2[{t}]")


def difference_observables(series, H):
    """One- and two-step differences of an observed series.

    Returns ``(d1, d2)`` with ``d1[k] = X_{k+2} - H X_{k+1}`` (times
    ``2..n``) and ``d2[k] = X_{k+3} - H^2 X_{k+1}`` (times ``3..n``).
    """
    X = np.asarray(series, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 3:
        raise TooShort(f"need at least 3 observations, got {X.shape[0]}")
    H = np.atleast_2d(np.asarray(H, dtype=float))
    d1 = X[1:] - X[:-1] @ H.T
    d2 = X[2:] - X[:-2] @ (H @ H).T
    return d1, d2


# --- moments -----------------------------------------------------------------

def _means(spec: ModelSpec) -> dict:
    return {OMEGA: spec.W, NU: spec.V}


def expectation_quadratic(q: QuadraticObservable | LinearResidualForm, spec: ModelSpec) -> np.ndarray:
    """E(Y Y^T) = sum_k A_k E(eps_k eps_k^T) A_k^T."""
    form = q.form if isinstance(q, QuadraticObservable) else q
    means = _means(spec)
    return sum(A @ means[rid.kind] @ A.T for rid, A in form.terms)


class _Moments:
    """Pairwise fourth moments of residual outer products as 4-tensors."""

    def __init__(self, beliefs: FourthOrderBeliefs, spec: ModelSpec):
        tens = beliefs.tensors()
        self.U = {OMEGA: tens[(OMEGA, "U")], NU: tens[(NU, "U")]}
        self.S = {OMEGA: tens[(OMEGA, "S")], NU: tens[(NU, "S")]}
        self.E = _means(spec)

    def pair(self, u: ResidualId, w: ResidualId) -> np.ndarray:
        """E[(eps_u eps_u^T)_ab (eps_w eps_w^T)_cd] as ``T[a, b, c, d]``."""
        T = np.multiply.outer(self.E[u.kind], self.E[w.kind])
        if u.kind == w.kind:
            T = T + self.U[u.kind]
        if u == w:
            T = T + self.S[u.kind]
        return T


def _fourth_moment_terms(fa: LinearResidualForm, fb: LinearResidualForm, mom: _Moments):
    """Yield ``(A_k, A_l, B_k', B_l', T)`` for every non-vanishing pairing."""
    for k, A1 in fa.terms:
        for l, A2 in fa.terms:
            for k2, B1 in fb.terms:
                for l2, B2 in fb.terms:
                    if k == l and k2 == l2:
                        T = mom.pair(k, k2)
                    elif k == k2 and l == l2:
                        T = np.einsum("acbd->abcd", mom.pair(k, l))
                    elif k == l2 and l == k2:
                        T = np.einsum("adbc->abcd", mom.pair(k, l))
                    else:
                        continue
                    yield A1, A2, B1, B2, T


def covariance_quadratic(
    a: QuadraticObservable | LinearResidualForm,
    b: QuadraticObservable | LinearResidualForm,
    beliefs: FourthOrderBeliefs,
    spec: ModelSpec,
) -> np.ndarray:
    """Cov(vec(Y_a Y_a^T), vec(Y_b Y_b^T)) as an ``r^2 x r^2`` matrix."""
    fa = a.form if isinstance(a, QuadraticObservable) else a
    fb = b.form if isinstance(b, QuadraticObservable) else b
    mom = _Moments(beliefs, spec)
    r1, r2 = fa.dim, fb.dim
    acc = np.zeros((r1, r1, r2, r2))
    for A1, A2, B1, B2, T in _fourth_moment_terms(fa, fb, mom):
        acc += conjugate(T, A1, A2, B1, B2)
    acc -= np.multiply.outer(expectation_quadratic(fa, spec), expectation_quadratic(fb, spec))
    return as_matrix(acc)


TARGETS = ("Vomega", "Vnu", "FtVomegaF")


def _target_parts(target: str, spec: ModelSpec):
    """(kind, left coefficient) describing the target as ``L U^kind L^T``."""
    if target == "Vnu":
        return NU, np.eye(spec.r)
    if target == "Vomega":
        return OMEGA, np.eye(spec.p)
    if target == "FtVomegaF":
        return OMEGA, spec.F.T
    raise ValueError(f"unknown target {target!r}; expected one of {TARGETS}")


def target_expectation(target: str, spec: ModelSpec) -> np.ndarray:
    kind, L = _target_parts(target, spec)
    return L @ _means(spec)[kind] @ L.T


def target_variance(target: str, beliefs: FourthOrderBeliefs, spec: ModelSpec) -> np.ndarray:
    kind, L = _target_parts(target, spec)
    return as_matrix(conjugate(_Moments(beliefs, spec).U[kind], L))


def target_covariance(t1: str, t2: str, beliefs: FourthOrderBeliefs, spec: ModelSpec) -> np.ndarray:
    """Cov between two targets; zero across kinds by A1."""
    k1, L1 = _target_parts(t1, spec)
    k2, L2 = _target_parts(t2, spec)
    if k1 != k2:
        return np.zeros((L1.shape[0] ** 2, L2.shape[0] ** 2))
    U = _Moments(beliefs, spec).U[k1]
    return as_matrix(conjugate(U, L1, L1, L2, L2))


def cov_target_quadratic(
    target: str,
    q: QuadraticObservable | LinearResidualForm,
    beliefs: FourthOrderBeliefs,
    spec: ModelSpec,
) -> np.ndarray:
    """Cov(vec target, vec(Y Y^T)).

    Only diagonal terms ``A_u eps_u eps_u^T A_u^T`` of matching kind carry
    the shared matrix, so each contributes ``Var(vec U)`` conjugated by
    ``A_u`` on the observable side.
    """
    form = q.form if isinstance(q, QuadraticObservable) else q
    kind, L = _target_parts(target, spec)
    U = _Moments(beliefs, spec).U[kind]
    acc = np.zeros((L.shape[0],) * 2 + (form.dim,) * 2)
    for rid, A in form.terms:
        if rid.kind == kind:
            acc += conjugate(U, L, L, A, A)
    return as_matrix(acc)
