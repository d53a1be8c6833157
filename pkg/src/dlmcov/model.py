"""Constant multivariate DLM specification and the two-step transfer matrix.

The model is

    X_t     = F^T theta_t + nu_t,       Var(nu_t)    = V
    theta_t = G theta_{t-1} + omega_t,  Var(omega_t) = W

with ``X_t`` of length ``r`` and ``theta_t`` of length ``p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PSD_TOL = -1e-10
PINV_RCOND = 1e-12
RANK_TOL = 1e-10


class NoTransferExists(ValueError):
    """The model is not two-step invertible."""


@dataclass(frozen=True)
class ModelSpec:
    """Second-order specification of a constant DLM.

    ``F`` is ``p x r``, ``G`` is ``p x p``, ``V`` is ``r x r`` and ``W`` and
    ``Sigma`` are ``p x p``.
    """

    F: np.ndarray
    G: np.ndarray
    mu0: np.ndarray
    Sigma: np.ndarray
    V: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        for name in ("F", "G", "Sigma", "V", "W"):
            arr = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        mu0 = np.atleast_1d(np.asarray(self.mu0, dtype=float)).ravel()
        mu0.setflags(write=False)
        object.__setattr__(self, "mu0", mu0)

    @property
    def p(self) -> int:
        return self.F.shape[0]

    @property
    def r(self) -> int:
        return self.F.shape[1]

    def with_covariances(self, V=None, W=None) -> "ModelSpec":
        return ModelSpec(
            F=self.F,
            G=self.G,
            mu0=self.mu0,
            Sigma=self.Sigma,
            V=self.V if V is None else V,
            W=self.W if W is None else W,
        )

    @classmethod
    def local_level(cls, mu0, Sigma, V, W) -> "ModelSpec":
        """Model with ``F = G = I`` (locally constant, one state per series)."""
        mu0 = np.atleast_1d(np.asarray(mu0, dtype=float))
        eye = np.eye(mu0.size)
        return cls(F=eye, G=eye, mu0=mu0, Sigma=Sigma, V=V, W=W)

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelSpec":
        spec = cls(
            F=doc["F"], G=doc["G"], mu0=doc["mu0"],
            Sigma=doc["Sigma"], V=doc["V"], W=doc["W"],
        )
        for key, val in (("r", spec.r), ("p", spec.p)):
            if key in doc and int(doc[key]) != val:
                raise ValueError(f"declared {key}={doc[key]} but matrices imply {val}")
        return spec

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "p": self.p,
            "F": self.F.tolist(),
            "G": self.G.tolist(),
            "mu0": self.mu0.tolist(),
            "Sigma": self.Sigma.tolist(),
            "V": self.V.tolist(),
            "W": self.W.tolist(),
        }


def shampoo_model() -> ModelSpec:
    """Six-brand locally constant sales model with exchangeable priors."""
    r = 6
    ones = np.ones((r, r))
    eye = np.eye(r)
    return ModelSpec.local_level(
        mu0=[10, 9, 9, 8, 8, 7],
        Sigma=3 * ones + 6 * eye,
        W=ones + 3 * eye,
        V=-4 * ones + 40 * eye,
    )


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return not self.violations

    @property
    def admissible(self) -> bool:
        return not self.violations


def is_symmetric(A, atol=1e-12) -> bool:
    A = np.asarray(A)
    return A.shape[0] == A.shape[1] and np.allclose(A, A.T, rtol=0, atol=atol)


def min_eigenvalue(A) -> float:
    A = np.asarray(A, dtype=float)
    return float(np.linalg.eigvalsh((A + A.T) / 2).min())


def validate_model(spec: ModelSpec) -> ValidationReport:
    """Collect every violated invariant; never raises."""
    report = ValidationReport()
    p, r = spec.p, spec.r
    shapes = {"G": (p, p), "Sigma": (p, p), "W": (p, p), "V": (r, r)}
    for name, shape in shapes.items():
        if getattr(spec, name).shape != shape:
            report.violations.append(
                f"{name}: shape {getattr(spec, name).shape}, expected {shape}"
            )
    if spec.mu0.shape != (p,):
        report.violations.append(f"mu0: length {spec.mu0.size}, expected {p}")
    if report.violations:
        return report

    for name in ("Sigma", "V", "W"):
        A = getattr(spec, name)
        if not np.all(np.isfinite(A)):
            report.violations.append(f"{name}: non-finite entries")
            continue
        if not is_symmetric(A):
            report.violations.append(f"{name}: not symmetric")
        lam = min_eigenvalue(A)
        if lam < PSD_TOL:
            report.violations.append(f"{name}: not PSD (min eigenvalue {lam:.6g})")
    for name in ("F", "G", "mu0"):
        if not np.all(np.isfinite(getattr(spec, name))):
            report.violations.append(f"{name}: non-finite entries")
    return report


@dataclass(frozen=True)
class TransferMatrix:
    H: np.ndarray
    invertible: bool
    condition_estimate: float

    def residual(self, spec: ModelSpec) -> float:
        """max |H F^T - F^T G|."""
        return float(np.abs(self.H @ spec.F.T - spec.F.T @ spec.G).max())


def compute_transfer(spec: ModelSpec, completion: str = "complement") -> TransferMatrix:
    """Find ``H`` with ``H F^T = F^T G``.

    For ``r >= p`` the generalised-inverse solution ``F^T G (F^T)^+`` is used.
    When ``r > p`` that matrix has rank at most ``p``; with
    ``completion="complement"`` the projector onto the orthogonal complement
    of ``col(F^T)`` is added, which leaves ``H F^T`` unchanged and makes ``H``
    invertible whenever ``G`` is. ``completion="pinv"`` returns the bare
    generalised-inverse solution.

    For ``r < p`` the unique candidate ``F^T G F (F^T F)^{-1}`` is checked and
    :class:`NoTransferExists` is raised if it fails.
    """
    if completion not in ("complement", "pinv"):
        raise ValueError(f"unknown completion {completion!r}")
    F, G = spec.F, spec.G
    p, r = spec.p, spec.r
    Ft = F.T
    target = Ft @ G
    if r >= p:
        Ft_pinv = np.linalg.pinv(Ft, rcond=PINV_RCOND)
        H = target @ Ft_pinv
        if completion == "complement":
            H = H + (np.eye(r) - Ft @ Ft_pinv)
    else:
        FtF = Ft @ F
        if np.linalg.matrix_rank(FtF) < r:
            raise NoTransferExists("F is rank deficient")
        H = target @ F @ np.linalg.inv(FtF)
    scale = 1.0 + np.abs(target).max()
    if np.abs(H @ Ft - target).max() > 1e-10 * scale:
        raise NoTransferExists("no H with H F^T = F^T G")

    s = np.linalg.svd(H, compute_uv=False)
    invertible = bool(s.size and s[-1] > RANK_TOL * s[0])
    cond = float(s[0] / s[-1]) if invertible else float("inf")
    return TransferMatrix(H=H, invertible=invertible, condition_estimate=cond)
