"""Observable combinations whose long-run means are V^nu and F^T V^omega F."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import ModelSpec
from .quadratic import expectation_quadratic, one_step, two_step


class SingularH(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class IdentifierCombo:
    """``sum coef * L @ Y(q) @ R`` over quadratic observables ``q``."""

    terms: tuple
    target_label: str

    def evaluate(self, series, H) -> np.ndarray:
        return sum(float(c) * L @ q.evaluate(series, H) @ R for c, L, q, R in self.terms)

    def merged(self):
        """Collapse terms with identical observable and conjugators.

        Returns a list of ``(coef, L, q, R)`` with coefficients as
        :class:`fractions.Fraction` when they were given exactly.
        """
        out = []
        for c, L, q, R in self.terms:
            for i, (c2, L2, q2, R2) in enumerate(out):
                if q2.same_as(q) and np.array_equal(L, L2) and np.array_equal(R, R2):
                    out[i] = (c2 + c, L2, q2, R2)
                    break
            else:
                out.append((c, L, q, R))
        return [t for t in out if t[0] != 0]


def _inverse(H) -> np.ndarray:
    H = np.atleast_2d(np.asarray(H, dtype=float))
    s = np.linalg.svd(H, compute_uv=False)
    if s[-1] <= 1e-10 * s[0]:
        raise SingularH("transfer matrix H is singular")
    return np.linalg.inv(H)


def _m_terms(t, spec, H, Hinv):
    eye = np.eye(spec.r)
    half = Fraction(1, 2)
    x1 = one_step(t, spec, H)
    x2 = two_step(t, spec, H)
    return [
        (half, eye, x1, eye),
        (-half, Hinv, x2, Hinv.T),
        (half, Hinv, x1, Hinv.T),
    ]


def nu_identifier(t: int, spec: ModelSpec, H) -> IdentifierCombo:
    """M_t = 1/2 [X'X'^T - H^-1 (X''X''^T - X'X'^T) H^-T]."""
    if t < 3:
        raise ValueError("identifiers need t >= 3")
    Hinv = _inverse(H)
    return IdentifierCombo(tuple(_m_terms(t, spec, H, Hinv)), "Vnu")


def omega_identifier(t: int, spec: ModelSpec, H) -> IdentifierCombo:
    """X'X'^T - M_t - H M_t H^T."""
    if t < 3:
        raise ValueError("identifiers need t >= 3")
    H = np.atleast_2d(np.asarray(H, dtype=float))
    Hinv = _inverse(H)
    eye = np.eye(spec.r)
    m = _m_terms(t, spec, H, Hinv)
    terms = [(Fraction(1), eye, one_step(t, spec, H), eye)]
    terms += [(-c, L, q, R) for c, L, q, R in m]
    terms += [(-c, H @ L, q, R @ H.T) for c, L, q, R in m]
    return IdentifierCombo(tuple(terms), "FtVomegaF")


def combo_expectation(combo: IdentifierCombo, spec: ModelSpec) -> np.ndarray:
    return sum(float(c) * L @ expectation_quadratic(q, spec) @ R for c, L, q, R in combo.terms)

