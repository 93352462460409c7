"""Model families, parameter domains and covariance construction.

Three stationary Gaussian families are supported, each with a scalar
dependence parameter on top of the mean ``mu`` and innovation variance
``sigma2``:

* ``AR1``     — first-order autoregression, parameter phi, |phi| < 1.
  Unit-variance autocovariance gamma(k) = phi^k / (1 - phi^2).
* ``MA1``     — first-order moving average, parameter alpha, |alpha| < 1.
  gamma(0) = 1 + alpha^2, gamma(1) = alpha, zero beyond lag 1.
* ``ARFIMA``  — fractionally differenced white noise ARFIMA(0, d, 0),
  d in (0, 0.5), with gamma-function autocovariances
  gamma(k) = (-1)^k G(1 - 2d) / (G(k - d + 1) G(-k - d + 1)).

The stored covariance matrix is always the unit-sigma^2 Toeplitz matrix;
sigma^2 is applied by the scoring functions.  Parameter domains are the
open theoretical intervals clipped to closed, numerically safe ones so
that bounded optimizers work on compact sets.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import gammaln, gammasgn

from . import linalg
from .errors import DomainError

__all__ = [
    "ModelFamily",
    "ModelSpec",
    "Theta",
    "CovarianceBundle",
    "parameter_domain",
    "autocovariance",
    "build_covariance",
    "covariance_from_autocovariances",
]


class ModelFamily(str, enum.Enum):
    AR1 = "ar1"
    MA1 = "ma1"
    ARFIMA = "arfima"  # fractionally differenced white noise, ARFIMA(0,d,0)


# (lower, upper) bounds after clipping the open theoretical intervals.
_DOMAINS = {
    ModelFamily.AR1: (-0.99, 0.99),
    ModelFamily.MA1: (-0.99, 0.99),
    ModelFamily.ARFIMA: (0.001, 0.499),
}


@dataclass(frozen=True)
class ModelSpec:
    """Which process family is being fitted, plus optional known parameters."""

    family: ModelFamily
    known_sigma2: float | None = None
    known_mu: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", ModelFamily(self.family))
        if self.known_sigma2 is not None and not self.known_sigma2 > 0:
            raise DomainError(f"known_sigma2 must be > 0, got {self.known_sigma2}")


@dataclass(frozen=True)
class Theta:
    """Parameter vector (mu, sigma2, lam) of the linear process.

    ``lam`` is the family's dependence parameter: phi for AR1, alpha for
    MA1, d for ARFIMA.
    """

    mu: float
    sigma2: float
    lam: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise DomainError(f"sigma2 must be > 0, got {self.sigma2}")


@dataclass(frozen=True)
class CovarianceBundle:
    """Unit-variance Toeplitz covariance with its derived factorizations.

    ``gamma`` is the T x T autocovariance matrix at sigma^2 = 1,
    ``factor`` its lower Cholesky factor, ``inverse`` its inverse and
    ``logdet`` its log-determinant.  Arrays are marked read-only so a
    bundle can be shared across concurrent workers.
    """

    T: int
    gamma: np.ndarray
    factor: np.ndarray
    inverse: np.ndarray
    logdet: float

    def __post_init__(self):
        for arr in (self.gamma, self.factor, self.inverse):
            arr.setflags(write=False)


def parameter_domain(spec: ModelSpec) -> tuple[float, float]:
    """Clipped (lower, upper) bounds of the dependence parameter."""
    return _DOMAINS[ModelFamily(spec.family)]


def require_in_domain(spec: ModelSpec, lam: float) -> None:
    lo, hi = parameter_domain(spec)
    if not (lo <= lam <= hi):
        raise DomainError(
            f"{ModelFamily(spec.family).value} parameter {lam} outside [{lo}, {hi}]"
        )


def _unit_autocovariances(family: ModelFamily, lam: float, length: int) -> np.ndarray:
    """gamma_lam(0..length-1) at sigma^2 = 1."""
    lags = np.arange(length)
    if family is ModelFamily.AR1:
        return lam**lags / (1.0 - lam * lam)
    if family is ModelFamily.MA1:
        acv = np.zeros(length)
        acv[0] = 1.0 + lam * lam
        if length > 1:
            acv[1] = lam
        return acv
    # ARFIMA: evaluate the gamma-function ratio in log space.  The sign of
    # G(-k - d + 1) alternates with k and must be combined with the (-1)^k
    # prefactor analytically; gammasgn tracks it without cancellation.
    d = lam
    log_abs = gammaln(1.0 - 2.0 * d) - gammaln(lags - d + 1.0) - gammaln(1.0 - lags - d)
    sign = (-1.0) ** lags * gammasgn(1.0 - 2.0 * d) * gammasgn(1.0 - lags - d)
    return sign * np.exp(log_abs)


def autocovariance(spec: ModelSpec, theta: Theta, lag: int) -> float:
    """sigma^2 * gamma_lam(lag) for the given family."""
    if lag < 0:
        raise DomainError(f"lag must be >= 0, got {lag}")
    require_in_domain(spec, theta.lam)
    unit = _unit_autocovariances(ModelFamily(spec.family), theta.lam, lag + 1)[lag]
    return theta.sigma2 * float(unit)


def covariance_from_autocovariances(acv) -> CovarianceBundle:
    """Bundle built from a caller-supplied autocovariance sequence.

    ``acv`` holds gamma(0), gamma(1), ... gamma(T-1).  This is the
    extension point for families beyond the three built-in ones; the
    caller is responsible for supplying a positive definite sequence.
    """
    acv = np.asarray(acv, dtype=float)
    if acv.ndim != 1 or acv.size < 1:
        raise DomainError("autocovariance sequence must be a non-empty 1-D array")
    gamma = scipy.linalg.toeplitz(acv)
    factor = linalg.cholesky(gamma)
    inverse = linalg.invert_from_factor(factor)
    return CovarianceBundle(
        T=acv.size,
        gamma=gamma,
        factor=factor,
        inverse=inverse,
        logdet=linalg.log_det(factor),
    )


def build_covariance(spec: ModelSpec, theta: Theta, T: int) -> CovarianceBundle:
    """Unit-sigma^2 covariance bundle of length T at theta's dependence
    parameter."""
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")
    require_in_domain(spec, theta.lam)
    acv = _unit_autocovariances(ModelFamily(spec.family), theta.lam, T)
    return covariance_from_autocovariances(acv)


def bundle_for_lambda(spec: ModelSpec, lam: float, T: int) -> CovarianceBundle:
    """Shorthand used by the scoring functions, which carry sigma^2
    separately from the dependence parameter."""
    return build_covariance(spec, Theta(mu=0.0, sigma2=1.0, lam=lam), T)
