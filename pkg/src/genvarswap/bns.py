"""Semi-analytic multivariate variance-swap pricing under BNS dynamics.

Each asset's variance is a non-Gaussian OU process driven by an independent
Levy subordinator Z^i with shared decay rate lambda, so

    E[sigma_t^2]   = e^{-lambda t}(sigma_0^2 - kappa1) + kappa1
    Var[sigma_t^2] = (kappa2 / 2)(1 - e^{-2 lambda t})

with kappa1/kappa2 the first two cumulants of Z_1. Expected volatility has
no closed form; the second-order Taylor (Brockhaus-Long) approximation

    E[sigma_t] ~ sqrt(E[sigma_t^2]) - Var[sigma_t^2] / (8 E[sigma_t^2]^{3/2})

is used, with error bounded by mu3 / (16 E[sigma_t^2]^{5/2}) where mu3 is
the third central moment of sigma_t^2.

The expected realized generalized variance combines seven time integrals
E_0..E_6: E_0..E_3 integrate products of expected variances and have exact
exponential antiderivatives; E_4..E_6 involve expected volatilities and are
evaluated by adaptive quadrature (absolute tolerance 1e-12 by default) with
reported error estimates. The rank-one jump term contributes through the
inverse-correlation entries delta_ij:

    E[sigma_R^2] = (|C|/T) [ E_0 + lambda kappa2* (
        delta_11 rho_1^2 E_1 + delta_22 rho_2^2 E_2 + delta_33 rho_3^2 E_3
        + 2 delta_21 rho_2 rho_1 E_4 + 2 delta_31 rho_3 rho_1 E_5
        + 2 delta_32 rho_3 rho_2 E_6 ) ].

A note on the volatility correction: with Var[sigma_t^2] written out, the
correction kappa2 (1 - e^{-2 lambda t}) / (16 E^{3/2}) equals
Var / (8 E^{3/2}) identically, since (1/2)/8 = 1/16. ``var_i_coefficient``
is exposed for compatibility with the coefficient-16 reading of that
specialized formula (which halves the correction); the default 8 follows the
Brockhaus-Long expansion.

All functions are pure; quadrature is re-entrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad

from .core import BnsAssetParams, BnsPortfolioParams, CorrelationMatrix, SwapContract
from .errors import (
    DegenerateVariance,
    MissingSubordinatorSpec,
    NegativeTime,
    NonPositiveMaturity,
    QuadratureFailure,
    WrongAssetCount,
)
from .heston import price_swap

__all__ = [
    "BnsETerms",
    "VolApprox",
    "expected_variance_bns",
    "variance_of_variance_bns",
    "third_central_moment_bns",
    "expected_vol_bns",
    "compute_e_terms",
    "expected_realized_variance_bns",
    "price_swap_bns",
]

# Pairs of (squared asset, vol asset, vol asset), 0-based, for E_4..E_6.
_CROSS_LAYOUT = {4: (2, 1, 0), 5: (1, 2, 0), 6: (0, 2, 1)}


class VolApprox(NamedTuple):
    """Brockhaus-Long volatility approximation and its optional error bound."""

    value: float
    error_bound: float | None


@dataclass(frozen=True)
class BnsETerms:
    """The seven integrals E_0..E_6 over [0, T].

    E_0..E_3 are exact; E_4..E_6 are adaptive quadratures whose reported
    absolute error estimates are carried alongside.
    """

    e0: float
    e1: float
    e2: float
    e3: float
    e4: float
    e5: float
    e6: float
    e4_error: float
    e5_error: float
    e6_error: float

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise QuadratureFailure(f"E-term field {f.name} is not finite")


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise NegativeTime("t must be >= 0")
    return t


def expected_variance_bns(t, a: BnsAssetParams, lambda_: float):
    """E[sigma_t^2] = e^{-lambda t}(sigma_0^2 - kappa1) + kappa1."""
    t = _check_time(t)
    out = np.exp(-lambda_ * t) * (a.sigma0_2 - a.kappa1) + a.kappa1
    return out if out.ndim else float(out)


def variance_of_variance_bns(t, a: BnsAssetParams, lambda_: float):
    """Var[sigma_t^2] = (kappa2 / 2)(1 - e^{-2 lambda t})."""
    t = _check_time(t)
    out = 0.5 * a.kappa2 * (1.0 - np.exp(-2.0 * lambda_ * t))
    return out if out.ndim else float(out)


def third_central_moment_bns(t, a: BnsAssetParams, lambda_: float):
    """mu3 of sigma_t^2, from the subordinator's third cumulant.

    The m-th cumulant of the OU state at time t is
    kappa_m(Z_1) (1 - e^{-m lambda t}) / m. kappa3 comes from the asset's
    subordinator spec when present, otherwise from the moment-matched
    Gamma-OU law (kappa3 = 1.5 kappa2^2 / kappa1); kappa2 = 0 gives zero.
    """
    t = _check_time(t)
    if a.subordinator is not None:
        kappa3 = a.subordinator.kappa3
    elif a.kappa2 == 0.0:
        kappa3 = 0.0
    elif a.kappa1 > 0.0:
        kappa3 = 1.5 * a.kappa2**2 / a.kappa1
    else:
        raise MissingSubordinatorSpec(
            "kappa1 = 0 with kappa2 > 0: third cumulant is not derivable, "
            "provide an explicit subordinator spec"
        )
    out = kappa3 * (1.0 - np.exp(-3.0 * lambda_ * t)) / 3.0
    return out if out.ndim else float(out)


def expected_vol_bns(
    t,
    a: BnsAssetParams,
    lambda_: float,
    mu3: float | None = None,
    var_i_coefficient: float = 8.0,
):
    """Brockhaus-Long approximation of E[sigma_t].

    Returns ``VolApprox(value, error_bound)``. The error bound
    mu3 / (16 E[sigma_t^2]^{5/2}) is filled only when the caller supplies
    mu3 (the subordinator family is a simulation choice, not a pricing
    input); otherwise it is None. See the module docstring for the
    ``var_i_coefficient`` compatibility flag.
    """
    ev = expected_variance_bns(t, a, lambda_)
    if np.any(np.asarray(ev) <= 0.0):
        raise DegenerateVariance("E[sigma_t^2] <= 0 under the supplied parameters")
    var = variance_of_variance_bns(t, a, lambda_)
    value = np.sqrt(ev) - var / (var_i_coefficient * ev**1.5)
    bound = None
    if mu3 is not None:
        bound = mu3 / (16.0 * ev**2.5)
        bound = bound if np.ndim(bound) else float(bound)
    return VolApprox(value if np.ndim(value) else float(value), bound)


def _exp_integral(m: int, lambda_: float, T):
    """integral_0^T e^{-m lambda t} dt = (1 - e^{-m lambda T}) / (m lambda)."""
    rate = m * lambda_
    return (1.0 - np.exp(-rate * T)) / rate


def _check_three_assets(p: BnsPortfolioParams) -> None:
    if p.n != 3:
        raise WrongAssetCount(f"closed form needs exactly 3 assets, got {p.n}")


def _e0(T, p: BnsPortfolioParams):
    d = np.array([a.sigma0_2 - a.kappa1 for a in p.assets])
    kap = np.array([a.kappa1 for a in p.assets])
    lam = p.lambda_
    return (
        d[0] * d[1] * d[2] * _exp_integral(3, lam, T)
        + (d[0] * d[1] * kap[2] + d[0] * d[2] * kap[1] + d[1] * d[2] * kap[0])
        * _exp_integral(2, lam, T)
        + (d[0] * kap[1] * kap[2] + d[1] * kap[0] * kap[2] + d[2] * kap[0] * kap[1])
        * _exp_integral(1, lam, T)
        + kap[0] * kap[1] * kap[2] * T
    )


def _e_pair(T, p: BnsPortfolioParams, i: int, j: int):
    """integral_0^T E[(sigma^i)^2] E[(sigma^j)^2] dt in closed form."""
    ai, aj = p.assets[i], p.assets[j]
    di, dj = ai.sigma0_2 - ai.kappa1, aj.sigma0_2 - aj.kappa1
    lam = p.lambda_
    return (
        di * dj * _exp_integral(2, lam, T)
        + (di * aj.kappa1 + dj * ai.kappa1) * _exp_integral(1, lam, T)
        + ai.kappa1 * aj.kappa1 * T
    )


def _e_cross(
    T: float,
    p: BnsPortfolioParams,
    index: int,
    tol: float,
    var_i_coefficient: float,
) -> tuple[float, float]:
    """E_4, E_5 or E_6 by adaptive quadrature; returns (value, error estimate)."""
    sq, va, vb = _CROSS_LAYOUT[index]
    lam = p.lambda_
    a_sq, a_va, a_vb = p.assets[sq], p.assets[va], p.assets[vb]

    def integrand(t: float) -> float:
        ev = math.exp(-lam * t) * (a_sq.sigma0_2 - a_sq.kappa1) + a_sq.kappa1
        out = ev
        for a in (a_va, a_vb):
            e = math.exp(-lam * t) * (a.sigma0_2 - a.kappa1) + a.kappa1
            v = 0.5 * a.kappa2 * (1.0 - math.exp(-2.0 * lam * t))
            out *= math.sqrt(e) - v / (var_i_coefficient * e**1.5)
        return out

    result = quad(integrand, 0.0, T, epsabs=tol, epsrel=tol, limit=200, full_output=1)
    if len(result) > 3:
        raise QuadratureFailure(f"E_{index} quadrature failed: {result[3]}")
    return float(result[0]), float(result[1])


def compute_e_terms(
    T: float,
    p: BnsPortfolioParams,
    tol: float = 1e-12,
    var_i_coefficient: float = 8.0,
) -> BnsETerms:
    """All seven integrals E_0..E_6 over [0, T].

    E_0..E_3 use the exact exponential antiderivatives; E_4..E_6 use
    adaptive quadrature at absolute tolerance ``tol`` with reported error
    estimates.
    """
    _check_three_assets(p)
    T = float(T)
    if T <= 0.0:
        raise NonPositiveMaturity("T must be > 0")
    e4, e4_err = _e_cross(T, p, 4, tol, var_i_coefficient)
    e5, e5_err = _e_cross(T, p, 5, tol, var_i_coefficient)
    e6, e6_err = _e_cross(T, p, 6, tol, var_i_coefficient)
    return BnsETerms(
        e0=float(_e0(T, p)),
        e1=float(_e_pair(T, p, 2, 1)),
        e2=float(_e_pair(T, p, 2, 0)),
        e3=float(_e_pair(T, p, 1, 0)),
        e4=e4,
        e5=e5,
        e6=e6,
        e4_error=e4_err,
        e5_error=e5_err,
        e6_error=e6_err,
    )


def expected_realized_variance_bns(
    T,
    p: BnsPortfolioParams,
    corr: CorrelationMatrix,
    tol: float = 1e-12,
    var_i_coefficient: float = 8.0,
):
    """E[sigma_R^2] over [0, T] for the three-asset BNS portfolio.

    Accepts scalar or array T. Cross-term quadratures are skipped when their
    coefficients vanish exactly (kappa2* = 0 or the relevant rho product is
    zero), which makes the common rho = 0 calibration path fully closed-form.
    """
    _check_three_assets(p)
    if corr.n != 3:
        raise WrongAssetCount(f"correlation must be 3x3, got {corr.n}x{corr.n}")
    delta = corr.inverse()
    T_arr = np.asarray(T, dtype=float)
    if np.any(T_arr <= 0.0):
        raise NonPositiveMaturity("T must be > 0")

    rho = p.rho
    lam_k2 = p.lambda_ * p.kappa2_star
    diag_coef = np.array([delta[i, i] * rho[i] ** 2 for i in range(3)])
    cross_coef = {
        4: 2.0 * delta[1, 0] * rho[1] * rho[0],
        5: 2.0 * delta[2, 0] * rho[2] * rho[0],
        6: 2.0 * delta[2, 1] * rho[2] * rho[1],
    }

    def scalar(T_scalar: float) -> float:
        bracket = _e0(T_scalar, p)
        if lam_k2 != 0.0:
            pair_idx = {1: (2, 1), 2: (2, 0), 3: (1, 0)}
            inner = 0.0
            for m in (1, 2, 3):
                if diag_coef[m - 1] != 0.0:
                    inner += diag_coef[m - 1] * _e_pair(T_scalar, p, *pair_idx[m])
            for m in (4, 5, 6):
                if cross_coef[m] != 0.0:
                    value, _ = _e_cross(T_scalar, p, m, tol, var_i_coefficient)
                    inner += cross_coef[m] * value
            bracket += lam_k2 * inner
        return corr.det_c * bracket / T_scalar

    if T_arr.ndim == 0:
        return scalar(float(T_arr))
    if lam_k2 == 0.0 or (not np.any(diag_coef) and not any(cross_coef.values())):
        return corr.det_c * _e0(T_arr, p) / T_arr
    return np.array([scalar(float(t)) for t in T_arr])


def price_swap_bns(ev_realized: float, contract: SwapContract) -> float:
    """Discounted swap value; same contract arithmetic as the Heston pricer."""
    return price_swap(ev_realized, contract)
