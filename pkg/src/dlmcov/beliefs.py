"""Fourth-order beliefs over the quadratic residual structure.

Each residual outer product is split as ``eps_t eps_t^T = U + S_t`` where the
random matrix ``U`` (``V^omega`` or ``V^nu``) is shared over time and ``S_t``
is a mean-zero innovation. The following orthogonalities are assumed
throughout the package and are never stored as data:

A1  Cov(vec U^omega, vec U^nu) = 0
A2  Cov(vec U, vec S_t) = 0
A3  Cov(vec S_s, vec S_t) = 0 for s != t, and Cov(vec S^omega_s, vec S^nu_t) = 0
A4  Var(vec S_t) does not depend on t
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .products import as_matrix, as_tensor, symmetric_basis

PSD_TOL = -1e-8
KEYS = ("Vomega", "Vnu", "Somega", "Snu")


class NotPositive(ValueError):
    """A vec-covariance is not PSD on the symmetric-matrix subspace."""


def symmetric_subspace_eigenvalues(M) -> np.ndarray:
    d = int(round(np.sqrt(np.asarray(M).shape[0])))
    B = symmetric_basis(d)
    P = B.T @ np.asarray(M, dtype=float) @ B
    return np.linalg.eigvalsh((P + P.T) / 2)


def index_symmetric(M, atol=1e-12) -> bool:
    """Entries agree under (i,j)<->(j,i) on either vec axis."""
    d = int(round(np.sqrt(np.asarray(M).shape[0])))
    T = as_tensor(M, d)
    return (
        np.allclose(T, T.transpose(1, 0, 2, 3), rtol=0, atol=atol)
        and np.allclose(T, T.transpose(0, 1, 3, 2), rtol=0, atol=atol)
        and np.allclose(T, T.transpose(2, 3, 0, 1), rtol=0, atol=atol)
    )


def check_vec_covariance(M, name="matrix", tol=PSD_TOL):
    lam = symmetric_subspace_eigenvalues(M)
    scale = max(1.0, float(np.abs(lam).max()))
    if lam.min() < tol * scale:
        raise NotPositive(f"{name}: min eigenvalue {lam.min():.6g} on symmetric subspace")


@dataclass(frozen=True)
class FourthOrderBeliefs:
    """Var(vec V^omega), Var(vec V^nu), Var(vec S^omega_t), Var(vec S^nu_t)."""

    var_vec_Vomega: np.ndarray
    var_vec_Vnu: np.ndarray
    var_vec_Somega: np.ndarray
    var_vec_Snu: np.ndarray

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            arr = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def p(self) -> int:
        return int(round(np.sqrt(self.var_vec_Vomega.shape[0])))

    @property
    def r(self) -> int:
        return int(round(np.sqrt(self.var_vec_Vnu.shape[0])))

    def tensors(self) -> dict:
        """4-index forms keyed by ``(kind, part)`` with part in {"U", "S"}."""
        p, r = self.p, self.r
        return {
            ("omega", "U"): as_tensor(self.var_vec_Vomega, p),
            ("nu", "U"): as_tensor(self.var_vec_Vnu, r),
            ("omega", "S"): as_tensor(self.var_vec_Somega, p),
            ("nu", "S"): as_tensor(self.var_vec_Snu, r),
        }

    def validate(self):
        """Raise :class:`NotPositive` on the first failing matrix."""
        for name, M in zip(KEYS, self.as_tuple()):
            d = int(round(np.sqrt(M.shape[0])))
            if M.shape != (d * d, d * d):
                raise ValueError(f"{name}: shape {M.shape} is not d^2 x d^2")
            check_vec_covariance(M, name)

    def as_tuple(self):
        return (self.var_vec_Vomega, self.var_vec_Vnu, self.var_vec_Somega, self.var_vec_Snu)

    def scaled(self, factor: float) -> "FourthOrderBeliefs":
        return FourthOrderBeliefs(*(factor * M for M in self.as_tuple()))

    @classmethod
    def zeros(cls, r: int, p: int | None = None) -> "FourthOrderBeliefs":
        p = r if p is None else p
        return cls(np.zeros((p * p,) * 2), np.zeros((r * r,) * 2),
                   np.zeros((p * p,) * 2), np.zeros((r * r,) * 2))

    def to_dict(self) -> dict:
        return {k: M.tolist() for k, M in zip(KEYS, self.as_tuple())}


@dataclass(frozen=True)
class ExchangeablePatternSpec:
    """Three exchangeable values for one ``d^2 x d^2`` vec-covariance.

    ``iiii`` is the variance of a diagonal entry, ``ijij`` the variance of an
    off-diagonal entry and ``iijj`` the covariance between distinct diagonal
    entries. Every other index pattern is zero.
    """

    iiii: float
    ijij: float
    iijj: float
    dimension: int


def expand_pattern(spec: ExchangeablePatternSpec, check: bool = True) -> np.ndarray:
    d = int(spec.dimension)
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if spec.iiii < 0:
        raise NotPositive("iiii must be non-negative")
    T = np.zeros((d, d, d, d))
    for i in range(d):
        for j in range(d):
            if i == j:
                T[i, i, i, i] = spec.iiii
                for k in range(d):
                    if k != i:
                        T[i, i, k, k] = spec.iijj
            else:
                T[i, j, i, j] = T[i, j, j, i] = spec.ijij
    M = as_matrix(T)
    if check:
        check_vec_covariance(M, "expanded pattern")
    return M


def gaussian_fourth_moments(V) -> np.ndarray:
    """Cov(vec xx^T) for zero-mean Gaussian ``x`` with ``Var(x) = V``.

    Entry ``((i,j),(k,l))`` is ``V_ik V_jl + V_il V_jk``.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    T = np.einsum("ik,jl->ijkl", V, V) + np.einsum("il,jk->ijkl", V, V)
    return as_matrix(T)


def beliefs_from_patterns(
    Vomega: ExchangeablePatternSpec,
    Vnu: ExchangeablePatternSpec,
    Somega: ExchangeablePatternSpec | None = None,
    Snu: ExchangeablePatternSpec | None = None,
    fill: str = "zero",
    W=None,
    V=None,
) -> FourthOrderBeliefs:
    """Build beliefs from exchangeable shorthand.

    ``fill="zero"`` expands the S patterns as given (unlisted patterns are 0).
    ``fill="gaussian"`` ignores the S patterns and uses the Gaussian fourth
    moments of the prior expectations ``W`` and ``V`` instead.
    """
    if fill == "zero":
        if Somega is None or Snu is None:
            raise ValueError("zero fill needs Somega and Snu patterns")
        S_om, S_nu = expand_pattern(Somega), expand_pattern(Snu)
    elif fill == "gaussian":
        if W is None or V is None:
            raise ValueError("gaussian fill needs W and V")
        S_om, S_nu = gaussian_fourth_moments(W), gaussian_fourth_moments(V)
    else:
        raise ValueError(f"unknown fill {fill!r}")
    return FourthOrderBeliefs(expand_pattern(Vomega), expand_pattern(Vnu), S_om, S_nu)


def shampoo_beliefs(fill: str = "zero") -> FourthOrderBeliefs:
    """Exchangeable fourth-order beliefs for the six-brand sales example."""
    from .model import shampoo_model

    m = shampoo_model()
    return beliefs_from_patterns(
        ExchangeablePatternSpec(9 / 4, 9 / 16, 1 / 5, 6),
        ExchangeablePatternSpec(25, 1, 4, 6),
        ExchangeablePatternSpec(30, 15, 0, 6),
        ExchangeablePatternSpec(2500, 1000, 0, 6),
        fill=fill, W=m.W, V=m.V,
    )


def beliefs_from_dict(doc: dict, r: int, p: int, W=None, V=None) -> FourthOrderBeliefs:
    """Parse the ``fourth_order`` section of a model document.

    Each of ``Vomega``, ``Vnu``, ``Somega``, ``Snu`` is either a full
    row-major matrix or an object ``{"iiii": .., "ijij": .., "iijj": ..}``.
    An optional ``"fill": "gaussian"`` replaces both S entries.
    """
    dims = {"Vomega": p, "Vnu": r, "Somega": p, "Snu": r}
    fill = doc.get("fill", "zero")
    out = {}
    for key in KEYS:
        if fill == "gaussian" and key in ("Somega", "Snu"):
            continue
        val = doc[key]
        if isinstance(val, dict):
            out[key] = expand_pattern(ExchangeablePatternSpec(
                float(val["iiii"]), float(val.get("ijij", 0.0)),
                float(val.get("iijj", 0.0)), dims[key]))
        else:
            M = np.asarray(val, dtype=float)
            if M.shape != (dims[key] ** 2,) * 2:
                raise ValueError(f"{key}: shape {M.shape}, expected {(dims[key] ** 2,) * 2}")
            out[key] = M
    if fill == "gaussian":
        out["Somega"] = gaussian_fourth_moments(W)
        out["Snu"] = gaussian_fourth_moments(V)
    elif fill != "zero":
        raise ValueError(f"unknown fill {fill!r}")
    b = FourthOrderBeliefs(out["Vomega"], out["Vnu"], out["Somega"], out["Snu"])
    b.validate()
    return b


__all__ = [
    "FourthOrderBeliefs", "ExchangeablePatternSpec", "NotPositive",
    "expand_pattern", "gaussian_fourth_moments", "beliefs_from_patterns",
    "shampoo_beliefs", "beliefs_from_dict", "index_symmetric",
    "symmetric_subspace_eigenvalues", "check_vec_covariance",
]
