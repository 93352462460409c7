"""Objective functions for minimum-score and likelihood estimation.

For a zero-mean Gaussian series with covariance sigma^2 * Gamma and
precision entries written G^{it} = (Gamma^{-1})_{it}, the gradient /
Laplacian scoring rule evaluated on one series y of length T is

    H = -(1/sigma^2) sum_i G^{ii}
        + 1/2 sum_i [ sum_t (1/sigma^2) G^{it} (y_t - mu) ]^2 ,

and the total score over an n x T panel of independent series is the sum
of the per-series values.  A second variant scores the sufficient
statistic S = Y^T Y directly through its Wishart density: with
s^{ij} = (S^{-1})_{ij} and c = (n - T - 1)/2,

    HW = -c sum_i (s^{ii})^2
         + 1/2 sum_{ij} [ c s^{ij} - G^{ij} / (2 sigma^2) ]^2 ,

whose derivative in the dependence parameter is

    HW' = -(1/(2 sigma^2)) sum_{ij}
          [ c s^{ij} - G^{ij} / (2 sigma^2) ] * d G^{ij} / d lam .

Both Hyvarinen-style scores are minimized; the Gaussian and consecutive
pairwise log-likelihoods here are maximized (callers negate them when
feeding a minimizer).  All functions are pure and safe to call
concurrently on shared bundles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import (
    DegreesOfFreedomError,
    DimensionMismatch,
    DomainError,
    ZeroDenominator,
)
from .models import (
    CovarianceBundle,
    ModelFamily,
    ModelSpec,
    Theta,
    autocovariance,
    bundle_for_lambda,
    parameter_domain,
    require_in_domain,
)

__all__ = [
    "SeriesPanel",
    "SspMatrix",
    "hyvarinen_single",
    "hyvarinen_total",
    "hyvarinen_contributions",
    "sufficient_statistic",
    "hyvarinen_wishart",
    "hyvarinen_wishart_gradient",
    "gaussian_loglik",
    "gaussian_contributions",
    "pairwise_loglik",
    "pairwise_contributions",
    "pairwise_ar1_closed_form",
    "precision_derivative",
]

_LOG_2PI = float(np.log(2.0 * np.pi))
_CBRT_EPS = float(np.finfo(float).eps) ** (1.0 / 3.0)


@dataclass(frozen=True)
class SeriesPanel:
    """n independent series of common length T, one series per row."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        if data.ndim != 2:
            raise DimensionMismatch(f"panel must be 2-D, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 2:
            raise DimensionMismatch(
                f"panel needs n >= 1 and T >= 2, got shape {data.shape}"
            )
        if not np.all(np.isfinite(data)):
            raise DomainError("panel contains non-finite values")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def T(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SspMatrix:
    """Sum-of-squares-and-products matrix S = Y^T Y with its degrees of
    freedom n (the number of series pooled into it)."""

    s: np.ndarray
    n: int

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise DimensionMismatch(f"ssp matrix must be square, got {s.shape}")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "s", s)

    @property
    def T(self) -> int:
        return self.s.shape[0]


def sufficient_statistic(panel: SeriesPanel) -> SspMatrix:
    """S = Y^T Y pooled over the panel's rows."""
    y = panel.data
    return SspMatrix(s=y.T @ y, n=panel.n)


def hyvarinen_single(theta: Theta, series, bundle: CovarianceBundle) -> float:
    """Gradient/Laplacian score of one series under (mu, sigma2) and the
    dependence structure baked into ``bundle``."""
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or y.size != bundle.T:
        raise DimensionMismatch(
            f"series has length {y.size}, bundle covers T={bundle.T}"
        )
    centered = y - theta.mu
    weighted = bundle.inverse @ centered
    trace = float(np.trace(bundle.inverse))
    return -trace / theta.sigma2 + 0.5 * float(weighted @ weighted) / theta.sigma2**2


def hyvarinen_contributions(
    panel: SeriesPanel, bundle: CovarianceBundle, sigma2: float
) -> np.ndarray:
    """Per-series score values (mu = 0), length n; their sum is the total
    score."""
    if panel.T != bundle.T:
        raise DimensionMismatch(f"panel T={panel.T} but bundle T={bundle.T}")
    weighted = panel.data @ bundle.inverse
    trace = float(np.trace(bundle.inverse))
    return -trace / sigma2 + 0.5 * np.einsum("ij,ij->i", weighted, weighted) / sigma2**2


def hyvarinen_total(lam: float, panel: SeriesPanel, sigma2: float, spec: ModelSpec) -> float:
    """Sum of per-series scores over the panel, sharing one bundle per lam."""
    require_in_domain(spec, lam)
    bundle = bundle_for_lambda(spec, lam, panel.T)
    return float(np.sum(hyvarinen_contributions(panel, bundle, sigma2)))


def _wishart_core(ssp: SspMatrix, precision: np.ndarray, sigma2: float) -> float:
    coef = (ssp.n - ssp.T - 1) / 2.0
    s_inv = linalg.invert_spd(ssp.s)
    bracket = coef * s_inv - precision / (2.0 * sigma2)
    return -coef * float(np.sum(np.diag(s_inv) ** 2)) + 0.5 * float(np.sum(bracket**2))


def _check_wishart_dof(ssp: SspMatrix) -> None:
    if ssp.n < ssp.T + 2:
        raise DegreesOfFreedomError(
            f"wishart score needs n >= T + 2, got n={ssp.n}, T={ssp.T}"
        )


def hyvarinen_wishart(lam: float, ssp: SspMatrix, sigma2: float, spec: ModelSpec) -> float:
    """Score of the sufficient statistic under its Wishart density."""
    _check_wishart_dof(ssp)
    require_in_domain(spec, lam)
    bundle = bundle_for_lambda(spec, lam, ssp.T)
    return _wishart_core(ssp, bundle.inverse, sigma2)


def precision_derivative(spec: ModelSpec, lam: float, T: int) -> np.ndarray:
    """d(Gamma^{-1})/d lam by central differences on the assembled inverse.

    The step follows the first-order rule cbrt(eps) * max(|lam|, 1),
    shrunk if necessary so both probe points stay inside the clipped
    domain.
    """
    lo, hi = parameter_domain(spec)
    h = _CBRT_EPS * max(abs(lam), 1.0)
    h = min(h, (hi - lam) / 2.0 if hi > lam else h, (lam - lo) / 2.0 if lam > lo else h)
    if h <= 0:
        raise DomainError(f"parameter {lam} too close to the domain boundary")
    upper = bundle_for_lambda(spec, lam + h, T).inverse
    lower = bundle_for_lambda(spec, lam - h, T).inverse
    return (upper - lower) / (2.0 * h)


def hyvarinen_wishart_gradient(
    lam: float, ssp: SspMatrix, sigma2: float, spec: ModelSpec
) -> float:
    """Derivative of the Wishart score in the dependence parameter."""
    _check_wishart_dof(ssp)
    require_in_domain(spec, lam)
    coef = (ssp.n - ssp.T - 1) / 2.0
    s_inv = linalg.invert_spd(ssp.s)
    precision = bundle_for_lambda(spec, lam, ssp.T).inverse
    bracket = coef * s_inv - precision / (2.0 * sigma2)
    deriv = precision_derivative(spec, lam, ssp.T)
    return -float(np.sum(bracket * deriv)) / (2.0 * sigma2)


def gaussian_contributions(
    panel: SeriesPanel, bundle: CovarianceBundle, sigma2: float
) -> np.ndarray:
    """Per-series Gaussian log-density values (mu = 0)."""
    if panel.T != bundle.T:
        raise DimensionMismatch(f"panel T={panel.T} but bundle T={bundle.T}")
    y = panel.data
    quad = np.einsum("ij,ij->i", y @ bundle.inverse, y)
    const = -0.5 * panel.T * (_LOG_2PI + np.log(sigma2)) - 0.5 * bundle.logdet
    return const - 0.5 * quad / sigma2


def gaussian_loglik(lam: float, panel: SeriesPanel, sigma2: float, spec: ModelSpec) -> float:
    """Exact log-likelihood of the panel under covariance sigma^2 * Gamma."""
    require_in_domain(spec, lam)
    bundle = bundle_for_lambda(spec, lam, panel.T)
    return float(np.sum(gaussian_contributions(panel, bundle, sigma2)))


def _pair_moments(spec: ModelSpec, lam: float, sigma2: float) -> tuple[float, float]:
    theta = Theta(mu=0.0, sigma2=sigma2, lam=lam)
    return autocovariance(spec, theta, 0), autocovariance(spec, theta, 1)


def pairwise_contributions(
    panel: SeriesPanel, spec: ModelSpec, lam: float, sigma2: float
) -> np.ndarray:
    """Per-series sums of consecutive-pair bivariate normal log-densities."""
    var, cov = _pair_moments(spec, lam, sigma2)
    det = var * var - cov * cov
    if det <= 0 or var <= 0:
        raise DomainError(f"pair covariance not positive definite at lam={lam}")
    a = panel.data[:, :-1]
    b = panel.data[:, 1:]
    quad = var * (a * a + b * b) - 2.0 * cov * a * b
    n_pairs = panel.T - 1
    const = -n_pairs * (_LOG_2PI + 0.5 * np.log(det))
    return const - 0.5 * np.sum(quad, axis=1) / det


def pairwise_loglik(lam: float, panel: SeriesPanel, sigma2: float, spec: ModelSpec) -> float:
    """First-order consecutive pairwise log-likelihood pooled over series."""
    require_in_domain(spec, lam)
    return float(np.sum(pairwise_contributions(panel, spec, lam, sigma2)))


def pairwise_ar1_closed_form(panel: SeriesPanel) -> float:
    """Closed-form AR(1) pairwise/Yule-Walker estimate
    2 sum y_t y_{t-1} / sum (y_t^2 + y_{t-1}^2), pooled over series and
    clipped to the AR(1) domain."""
    a = panel.data[:, :-1]
    b = panel.data[:, 1:]
    denominator = float(np.sum(a * a + b * b))
    if denominator == 0.0:
        raise ZeroDenominator("panel is identically zero")
    estimate = 2.0 * float(np.sum(a * b)) / denominator
    lo, hi = parameter_domain(ModelSpec(family=ModelFamily.AR1))
    return float(np.clip(estimate, lo, hi))
