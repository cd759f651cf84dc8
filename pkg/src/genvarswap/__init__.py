"""Multivariate variance swaps on the generalized variance.

The library prices forward contracts on the realized generalized variance
(1/T) integral_0^T |Sigma_t| dt of a multi-asset portfolio, where Sigma_t is
the instantaneous return covariance matrix, under two stochastic volatility
models: Heston (square-root variances) and BNS (Levy-subordinator OU
variances with a common return jump). It ships closed-form/semi-analytic
prices, an independent Monte Carlo oracle, a market-data estimation
pipeline, nonlinear least-squares calibration and a batch CLI.
"""

from .core import (
    BnsAssetParams,
    BnsPortfolioParams,
    CorrelationMatrix,
    GammaOuSpec,
    HestonAssetParams,
    LeverageSignWarning,
    SwapContract,
    validate_correlation,
)
from .genvar import (
    InstantaneousVols,
    build_sigma1,
    build_sigma2,
    det_sigma1,
    det_sigma2,
)
from .heston import (
    HestonPortfolio,
    expected_product,
    expected_realized_variance,
    expected_variance,
    price_swap,
)
from .bns import (
    BnsETerms,
    compute_e_terms,
    expected_realized_variance_bns,
    expected_variance_bns,
    expected_vol_bns,
    price_swap_bns,
    variance_of_variance_bns,
)
from .montecarlo import (
    McEstimate,
    PathEnsemble,
    PricePaths,
    SimConfig,
    bns_realized_variance_mc,
    heston_realized_variance_mc,
    mc_realized_variance,
    simulate_bns,
    simulate_bns_prices,
    simulate_heston,
    simulate_heston_prices,
)
from .marketdata import (
    PriceSeries,
    RealizedVarianceSeries,
    estimate_correlation,
    load_prices,
    log_returns,
    rolling_determinants,
    summary_stats,
)
from .calibrate import (
    CalibrationProblem,
    CalibrationResult,
    ErrorMetrics,
    error_metrics,
    fit,
    model_curve,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BnsAssetParams",
    "BnsPortfolioParams",
    "CorrelationMatrix",
    "GammaOuSpec",
    "HestonAssetParams",
    "LeverageSignWarning",
    "SwapContract",
    "validate_correlation",
    "InstantaneousVols",
    "build_sigma1",
    "build_sigma2",
    "det_sigma1",
    "det_sigma2",
    "HestonPortfolio",
    "expected_product",
    "expected_realized_variance",
    "expected_variance",
    "price_swap",
    "BnsETerms",
    "compute_e_terms",
    "expected_realized_variance_bns",
    "expected_variance_bns",
    "expected_vol_bns",
    "price_swap_bns",
    "variance_of_variance_bns",
    "McEstimate",
    "PathEnsemble",
    "PricePaths",
    "SimConfig",
    "bns_realized_variance_mc",
    "heston_realized_variance_mc",
    "mc_realized_variance",
    "simulate_bns",
    "simulate_bns_prices",
    "simulate_heston",
    "simulate_heston_prices",
    "PriceSeries",
    "RealizedVarianceSeries",
    "estimate_correlation",
    "load_prices",
    "log_returns",
    "rolling_determinants",
    "summary_stats",
    "CalibrationProblem",
    "CalibrationResult",
    "ErrorMetrics",
    "error_metrics",
    "fit",
    "model_curve",
]
