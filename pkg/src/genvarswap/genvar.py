"""Instantaneous covariance matrices and their determinants.

The portfolio return covariance factorizes as Sigma_1 = D C D with
D = diag(sigma_i), so |Sigma_1| = |C| prod sigma_i^2. The BNS covariance
adds a rank-one jump term, Sigma_2 = Sigma_1 + lambda Var[Z_1*] rho rho^T,
whose determinant follows from the matrix determinant lemma:

    |Sigma_2| = |Sigma_1| (1 + lambda Var[Z_1*] rho^T Sigma_1^-1 rho).

For n = 3 the lemma expands into the six delta_ij cross terms used by the
pricing formulas; that expansion is a polynomial identity in the vols, so it
extends by continuity to paths where an instantaneous vol touches zero. Both
paths are implemented and cross-checked in the tests.

All functions are pure and safe for concurrent invocation. The ``*_values``
variants evaluate determinants along whole ensembles of variance paths at
once and are the kernels used by the Monte Carlo module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CorrelationMatrix
from .errors import DimensionMismatch, ValidationError

__all__ = [
    "InstantaneousVols",
    "build_sigma1",
    "det_sigma1",
    "build_sigma2",
    "det_sigma2",
    "det_sigma1_values",
    "det_sigma2_values",
]


@dataclass(frozen=True, eq=False)
class InstantaneousVols:
    """Length-n vector of instantaneous volatilities, all strictly positive."""

    sigma: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.sigma, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError(f"sigma must be a nonempty vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise ValidationError("all instantaneous vols must be finite and > 0")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "sigma", arr)

    @property
    def n(self) -> int:
        return self.sigma.size


def _check_dims(vols: InstantaneousVols, corr: CorrelationMatrix) -> None:
    if vols.n != corr.n:
        raise DimensionMismatch(f"{vols.n} vols vs {corr.n}x{corr.n} correlation")


def _check_rho(rho, n: int) -> np.ndarray:
    arr = np.asarray(rho, dtype=float)
    if arr.shape != (n,):
        raise DimensionMismatch(f"rho must have shape ({n},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("rho entries must be finite")
    return arr


def _check_jump_scale(lambda_: float, var_z1: float) -> tuple[float, float]:
    lambda_ = float(lambda_)
    var_z1 = float(var_z1)
    if lambda_ <= 0.0:
        raise ValidationError(f"lambda must be > 0, got {lambda_}")
    if var_z1 < 0.0:
        raise ValidationError(f"var_z1 must be >= 0, got {var_z1}")
    return lambda_, var_z1


def build_sigma1(vols: InstantaneousVols, corr: CorrelationMatrix) -> np.ndarray:
    """Covariance matrix with entries c_lm sigma_l sigma_m (Sigma_1 = DCD)."""
    _check_dims(vols, corr)
    s = vols.sigma
    return np.outer(s, s) * corr.c


def det_sigma1(vols: InstantaneousVols, corr: CorrelationMatrix) -> float:
    """|Sigma_1| = |C| prod sigma_i^2."""
    _check_dims(vols, corr)
    return corr.det_c * float(np.prod(vols.sigma**2))


def build_sigma2(
    vols: InstantaneousVols,
    corr: CorrelationMatrix,
    rho,
    lambda_: float,
    var_z1: float,
) -> np.ndarray:
    """Sigma_2 = Sigma_1 + lambda Var[Z_1*] rho rho^T."""
    rho = _check_rho(rho, vols.n)
    lambda_, var_z1 = _check_jump_scale(lambda_, var_z1)
    return build_sigma1(vols, corr) + lambda_ * var_z1 * np.outer(rho, rho)


def det_sigma2(
    vols: InstantaneousVols,
    corr: CorrelationMatrix,
    rho,
    lambda_: float,
    var_z1: float,
) -> float:
    """|Sigma_2| via the matrix determinant lemma.

    For n = 3 uses the expanded delta_ij form; for general n the lemma with
    Sigma_1^-1 = D^-1 C^-1 D^-1. Requires an invertible correlation matrix.
    """
    _check_dims(vols, corr)
    rho = _check_rho(rho, vols.n)
    lambda_, var_z1 = _check_jump_scale(lambda_, var_z1)
    delta = corr.inverse()
    s = vols.sigma
    if vols.n == 3:
        return float(
            det_sigma2_values(
                (s**2)[np.newaxis, :], corr, rho, lambda_, var_z1
            )[0]
        )
    quad_form = float((rho / s) @ delta @ (rho / s))
    return corr.det_c * float(np.prod(s**2)) * (1.0 + lambda_ * var_z1 * quad_form)


def det_sigma1_values(variances: np.ndarray, corr: CorrelationMatrix) -> np.ndarray:
    """|Sigma_1| for an array of variance vectors (last axis = assets)."""
    variances = np.asarray(variances, dtype=float)
    if variances.shape[-1] != corr.n:
        raise DimensionMismatch(
            f"last axis has {variances.shape[-1]} assets, correlation has {corr.n}"
        )
    return corr.det_c * np.prod(variances, axis=-1)


def det_sigma2_values(
    variances: np.ndarray,
    corr: CorrelationMatrix,
    rho,
    lambda_: float,
    var_z1: float,
) -> np.ndarray:
    """|Sigma_2| for an array of variance vectors (last axis = assets).

    Evaluates the expanded determinant-lemma polynomial

        |C| [ prod_l v_l
              + lambda Var[Z_1*] sum_{i,j} delta_ij rho_i rho_j
                sqrt(v_i v_j) prod_{l not in {i,j}} v_l ]

    which is continuous down to v_i = 0, so floored simulator variances are
    handled without special cases.
    """
    variances = np.asarray(variances, dtype=float)
    n = corr.n
    if variances.shape[-1] != n:
        raise DimensionMismatch(
            f"last axis has {variances.shape[-1]} assets, correlation has {n}"
        )
    rho = _check_rho(rho, n)
    lambda_, var_z1 = _check_jump_scale(lambda_, var_z1)
    delta = corr.inverse()

    v = variances
    s = np.sqrt(v)
    base = np.prod(v, axis=-1)
    if var_z1 == 0.0 or not np.any(rho):
        return corr.det_c * base

    bracket = np.zeros_like(base)
    for i in range(n):
        coeff = delta[i, i] * rho[i] * rho[i]
        if coeff != 0.0:
            others = [l for l in range(n) if l != i]
            bracket += coeff * np.prod(v[..., others], axis=-1)
        for j in range(i + 1, n):
            coeff = 2.0 * delta[i, j] * rho[i] * rho[j]
            if coeff == 0.0:
                continue
            others = [l for l in range(n) if l != i and l != j]
            term = s[..., i] * s[..., j]
            if others:
                term = term * np.prod(v[..., others], axis=-1)
            bracket += coeff * term
    return corr.det_c * (base + lambda_ * var_z1 * bracket)
