"""Closed-form multivariate variance-swap pricing under Heston dynamics.

Each asset's variance follows an independent square-root process, so
E[sigma_t^2] = e^{-k t}(sigma_0^2 - theta^2) + theta^2 and the expected
generalized variance factorizes through |Sigma_1| = |C| prod (sigma_t^i)^2.
The expected realized generalized variance over [0, T] is

    E[sigma_R^2] = (|C| / T) * integral_0^T prod_i E[(sigma_t^i)^2] dt,

which for three assets expands into eight exponential terms: each transient
e^{-a t} integrates to (1 - e^{-a T})/a with a running over the seven
nonempty sums of mean-reversion speeds, and the constant term contributes
T theta_1^2 theta_2^2 theta_3^2.

Time arguments accept scalars or arrays (broadcast elementwise); all
functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.integrate import quad

from .core import CorrelationMatrix, HestonAssetParams, SwapContract
from .errors import (
    DimensionMismatch,
    NegativeTime,
    NonPositiveMaturity,
    QuadratureFailure,
    WrongAssetCount,
)

__all__ = [
    "HestonPortfolio",
    "expected_variance",
    "expected_product",
    "expected_realized_variance",
    "expected_realized_variance_quad",
    "price_swap",
]


@dataclass(frozen=True, eq=False)
class HestonPortfolio:
    """Per-asset square-root variance parameters plus the return correlation."""

    assets: tuple[HestonAssetParams, ...]
    corr: CorrelationMatrix

    def __post_init__(self):
        object.__setattr__(self, "assets", tuple(self.assets))
        if len(self.assets) != self.corr.n:
            raise DimensionMismatch(
                f"{len(self.assets)} assets vs {self.corr.n}x{self.corr.n} correlation"
            )

    @property
    def n(self) -> int:
        return len(self.assets)

    def to_dict(self) -> dict:
        return {
            "assets": [a.to_dict() for a in self.assets],
            "correlation": self.corr.to_dict()["c"],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HestonPortfolio":
        from .core import validate_correlation

        return cls(
            assets=tuple(HestonAssetParams.from_dict(a) for a in d["assets"]),
            corr=validate_correlation(np.asarray(d["correlation"], dtype=float)),
        )


def _check_time(t, name: str = "t"):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise NegativeTime(f"{name} must be >= 0")
    return t


def _check_maturity(T):
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0.0):
        raise NonPositiveMaturity("maturity must be > 0")
    return T


def expected_variance(t, p: HestonAssetParams):
    """E[sigma_t^2] = e^{-k t}(sigma_0^2 - theta^2) + theta^2 (gamma-free)."""
    t = _check_time(t)
    return np.exp(-p.k * t) * (p.sigma0_2 - p.theta2) + p.theta2


def expected_product(t, portfolio: HestonPortfolio):
    """prod_i E[(sigma_t^i)^2] as the eight-term exponential expansion.

    Equals the direct product of the three ``expected_variance`` values; the
    expansion is what the closed-form time integral is built from.
    """
    if portfolio.n != 3:
        raise WrongAssetCount(f"closed form needs exactly 3 assets, got {portfolio.n}")
    t = _check_time(t)
    k = np.array([a.k for a in portfolio.assets])
    theta2 = np.array([a.theta2 for a in portfolio.assets])
    d = np.array([a.sigma0_2 - a.theta2 for a in portfolio.assets])

    total = np.zeros_like(t, dtype=float)
    for size in range(4):
        for subset in combinations(range(3), size):
            rest = [i for i in range(3) if i not in subset]
            coeff = np.prod(d[list(subset)]) * np.prod(theta2[rest])
            rate = float(np.sum(k[list(subset)]))
            total = total + coeff * np.exp(-rate * t)
    return total if total.ndim else float(total)


def expected_realized_variance(T, portfolio: HestonPortfolio):
    """E[sigma_R^2] = (|C|/T) integral_0^T prod_i E[(sigma_t^i)^2] dt, in closed form.

    Three assets only; the general-n quadrature route is
    ``expected_realized_variance_quad``.
    """
    if portfolio.n != 3:
        raise WrongAssetCount(f"closed form needs exactly 3 assets, got {portfolio.n}")
    T = _check_maturity(T)
    k = np.array([a.k for a in portfolio.assets])
    theta2 = np.array([a.theta2 for a in portfolio.assets])
    d = np.array([a.sigma0_2 - a.theta2 for a in portfolio.assets])

    integral = T * float(np.prod(theta2))
    for size in range(1, 4):
        for subset in combinations(range(3), size):
            rest = [i for i in range(3) if i not in subset]
            coeff = np.prod(d[list(subset)]) * np.prod(theta2[rest])
            rate = float(np.sum(k[list(subset)]))
            integral = integral + coeff * (1.0 - np.exp(-rate * T)) / rate
    out = portfolio.corr.det_c * integral / T
    return out if out.ndim else float(out)


def expected_realized_variance_quad(
    T: float, portfolio: HestonPortfolio, tol: float = 1e-12
) -> float:
    """Quadrature route for E[sigma_R^2], valid for any asset count n.

    Integrates |C| prod_i E[(sigma_t^i)^2] over [0, T] adaptively and divides
    by T. Used as the general-n evaluation path; for n = 3 it agrees with the
    closed form to the quadrature tolerance.
    """
    T = float(_check_maturity(T))

    def integrand(t: float) -> float:
        out = 1.0
        for a in portfolio.assets:
            out *= math.exp(-a.k * t) * (a.sigma0_2 - a.theta2) + a.theta2
        return out

    result = quad(integrand, 0.0, T, epsabs=tol, epsrel=tol, limit=200, full_output=1)
    if len(result) > 3:
        raise QuadratureFailure(f"realized-variance quadrature failed: {result[3]}")
    value = result[0]
    return portfolio.corr.det_c * value / T


def price_swap(ev_realized: float, contract: SwapContract) -> float:
    """Discounted swap value: notional * e^{-r T} (E[sigma_R^2] - k_var)."""
    discount = math.exp(-contract.r * contract.maturity)
    return contract.notional * discount * (float(ev_realized) - contract.k_var)
