"""Closed-form covariances for the locally constant model (F = G = H = I).

These are transcribed relation by relation, independently of the generic
engine in :mod:`dlmcov.quadratic`, and serve as its oracle. Three printed
coefficients disagree with both a first-principles expansion and simulation;
:data:`PRINTED_ERRATA` lists them and ``appendix_covariance(..., printed=True)``
reproduces the printed form so the discrepancy stays testable.
"""

from __future__ import annotations

import enum

import numpy as np

from .beliefs import FourthOrderBeliefs
from .model import ModelSpec
from .products import star_product, tensor_product, vec_index
from .quadratic import one_step, two_step


class NotIdentityModel(ValueError):
    pass


class Relation(enum.Enum):
    VOMEGA_X1 = "Cov(vec Vomega, vec X1_t X1_t')"
    VNU_X1 = "Cov(vec Vnu, vec X1_t X1_t')"
    X1_LAG0 = "Var(vec X1_t X1_t')"
    X1_LAG1 = "Cov(X1_t X1_t', X1_{t-1} X1_{t-1}')"
    X1_LAG2PLUS = "Cov(X1_t X1_t', X1_{t-s} X1_{t-s}'), s>=2"
    VOMEGA_X2 = "Cov(vec Vomega, vec X2_t X2_t')"
    VNU_X2 = "Cov(vec Vnu, vec X2_t X2_t')"
    X2_LAG0 = "Var(vec X2_t X2_t')"
    X2_LAG1 = "Cov(X2_t X2_t', X2_{t-1} X2_{t-1}')"
    X2_LAG2 = "Cov(X2_t X2_t', X2_{t-2} X2_{t-2}')"
    X2_LAG3PLUS = "Cov(X2_t X2_t', X2_{t-s} X2_{t-s}'), s>=3"
    X1_X2_LEAD3PLUS = "Cov(X1_t X1_t', X2_{t+s} X2_{t+s}'), s>=3"
    X1_X2_LEAD2 = "Cov(X1_t X1_t', X2_{t+2} X2_{t+2}')"
    X1_X2_LEAD1 = "Cov(X1_t X1_t', X2_{t+1} X2_{t+1}')"
    X1_X2_LAG0 = "Cov(X1_t X1_t', X2_t X2_t')"
    X1_X2_LAG1 = "Cov(X1_t X1_t', X2_{t-1} X2_{t-1}')"
    X1_X2_LAG2PLUS = "Cov(X1_t X1_t', X2_{t-s} X2_{t-s}'), s>=2"


# relation -> (printed text, corrected text)
PRINTED_ERRATA = {
    Relation.X1_LAG0: ("4[E(Vnu) x E(Vomega) + ...]", "2[E(Vnu) x E(Vomega) + ...]"),
    Relation.X1_LAG1: ("4(Var Vnu + Var Vomega) + Var Snu", "4 Var Vnu + Var Vomega + Var Snu"),
    Relation.X2_LAG3PLUS: ("4 Var Vnu + Var Vomega", "4 Var Vnu + 4 Var Vomega"),
}


def _is_identity_model(spec: ModelSpec) -> bool:
    r, p = spec.r, spec.p
    return r == p and np.allclose(spec.F, np.eye(r)) and np.allclose(spec.G, np.eye(p))


def expected_tensor(var_vec, mean) -> np.ndarray:
    """E(U (x) U) where ``U`` has vec-covariance ``var_vec`` and mean ``mean``.

    Entry at row ``vec(j, l)``, column ``vec(k, m)`` is E(U_jk U_lm).
    """
    r = mean.shape[0]
    out = np.empty((r * r, r * r))
    for j in range(r):
        for k in range(r):
            for l in range(r):
                for m in range(r):
                    cov = var_vec[vec_index(j, k, r), vec_index(l, m, r)]
                    out[vec_index(j, l, r), vec_index(k, m, r)] = cov + mean[j, k] * mean[l, m]
    return out


def expected_star(var_vec, mean) -> np.ndarray:
    """E(U * U): E(U_jk U_lm) at row ``vec(j, l)``, column ``vec(m, k)``."""
    r = mean.shape[0]
    out = np.empty((r * r, r * r))
    for j in range(r):
        for k in range(r):
            for l in range(r):
                for m in range(r):
                    cov = var_vec[vec_index(j, k, r), vec_index(l, m, r)]
                    out[vec_index(j, l, r), vec_index(m, k, r)] = cov + mean[j, k] * mean[l, m]
    return out


def appendix_covariance(
    case: Relation,
    beliefs: FourthOrderBeliefs,
    spec: ModelSpec,
    printed: bool = False,
) -> np.ndarray:
    if not _is_identity_model(spec):
        raise NotIdentityModel("closed forms hold only for F = G = I")
    case = Relation(case)
    VO, VN = beliefs.var_vec_Vomega, beliefs.var_vec_Vnu
    SO, SN = beliefs.var_vec_Somega, beliefs.var_vec_Snu
    Ew, Ev = spec.W, spec.V

    def gauss_nu():
        return expected_tensor(VN, Ev) + expected_star(VN, Ev)

    def gauss_omega():
        return expected_tensor(VO, Ew) + expected_star(VO, Ew)

    def cross():
        return (tensor_product(Ev, Ew) + star_product(Ev, Ew)
                + tensor_product(Ew, Ev) + star_product(Ew, Ev))

    R = Relation
    if case is R.VOMEGA_X1:
        return VO.copy()
    if case is R.VNU_X1:
        return 2 * VN
    if case is R.X1_LAG0:
        c = 4 if printed else 2
        return VO + 4 * VN + SN + SN + SO + 2 * gauss_nu() + c * cross()
    if case is R.X1_LAG1:
        return (4 * (VN + VO) if printed else 4 * VN + VO) + SN
    if case is R.X1_LAG2PLUS:
        return 4 * VN + VO
    if case is R.VOMEGA_X2:
        return 2 * VO
    if case is R.VNU_X2:
        return 2 * VN
    if case is R.X2_LAG0:
        return (4 * VO + 4 * VN + SN + SN + SO + SO
                + 2 * (gauss_nu() + gauss_omega()) + 4 * cross())
    if case is R.X2_LAG1:
        return 4 * (VN + VO) + SO
    if case is R.X2_LAG2:
        return 4 * (VN + VO) + SN
    if case is R.X2_LAG3PLUS:
        return 4 * VN + (1 if printed else 4) * VO
    if case is R.X1_X2_LEAD3PLUS:
        return 4 * VN + 2 * VO
    if case is R.X1_X2_LEAD2:
        # printed as an unlabelled "Var(vec S_{t-2})"; the shared residual is nu_t
        return 4 * VN + 2 * VO + SN
    if case in (R.X1_X2_LEAD1, R.X1_X2_LAG0):
        return 2 * VO + 4 * VN + SN + SO + cross()
    if case is R.X1_X2_LAG1:
        return 4 * VN + 2 * VO + SN
    if case is R.X1_X2_LAG2PLUS:
        return 4 * VN + 2 * VO
    raise AssertionError(case)


def relation_operands(case: Relation, spec: ModelSpec, t: int = 10, s: int = 3):
    """The (left, right) operands of a relation at anchor time ``t``.

    Targets are returned as strings (``"Vomega"``/``"Vnu"``); observables as
    :class:`~dlmcov.quadratic.QuadraticObservable`. ``s`` is the separation
    used for the open-ended "s >= k" relations.
    """
    case = Relation(case)
    H = np.eye(spec.r)
    x1 = lambda u: one_step(u, spec, H)  # noqa: E731
    x2 = lambda u: two_step(u, spec, H)  # noqa: E731
    R = Relation
    table = {
        R.VOMEGA_X1: ("Vomega", x1(t)),
        R.VNU_X1: ("Vnu", x1(t)),
        R.X1_LAG0: (x1(t), x1(t)),
        R.X1_LAG1: (x1(t), x1(t - 1)),
        R.X1_LAG2PLUS: (x1(t), x1(t - max(s, 2))),
        R.VOMEGA_X2: ("Vomega", x2(t)),
        R.VNU_X2: ("Vnu", x2(t)),
        R.X2_LAG0: (x2(t), x2(t)),
        R.X2_LAG1: (x2(t), x2(t - 1)),
        R.X2_LAG2: (x2(t), x2(t - 2)),
        R.X2_LAG3PLUS: (x2(t), x2(t - max(s, 3))),
        R.X1_X2_LEAD3PLUS: (x1(t), x2(t + max(s, 3))),
        R.X1_X2_LEAD2: (x1(t), x2(t + 2)),
        R.X1_X2_LEAD1: (x1(t), x2(t + 1)),
        R.X1_X2_LAG0: (x1(t), x2(t)),
        R.X1_X2_LAG1: (x1(t), x2(t - 1)),
        R.X1_X2_LAG2PLUS: (x1(t), x2(t - max(s, 2))),
    }
    return table[case]


def engine_covariance(case: Relation, beliefs: FourthOrderBeliefs, spec: ModelSpec, **kw) -> np.ndarray:
    """The same relation evaluated by the generic expansion engine."""
    from .quadratic import cov_target_quadratic, covariance_quadratic

    a, b = relation_operands(case, spec, **kw)
    if isinstance(a, str):
        return cov_target_quadratic(a, b, beliefs, spec)
    return covariance_quadratic(a, b, beliefs, spec)
