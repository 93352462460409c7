"""Minimum-score estimation and sandwich (Godambe) standard deviations.

Every panel estimator reduces to a bounded scalar minimization of one of
the objectives in :mod:`tscore.scoring` over the clipped parameter
domain; log-likelihoods are negated.  Asymptotic standard deviations come
from the sandwich information G = K^2 / J built from per-series numeric
derivatives of the objective contributions (J = variability, K =
sensitivity), except

* maximum likelihood, where J = K and the observed information is used;
* the Wishart score, which has a single observation (the sufficient
  statistic), so its variability is estimated by a parametric bootstrap
  and its sensitivity by the expectation identity
  K = sum_ij (d Gamma^{ij} / d lam)^2 / (4 sigma^4).

The single-series fit is a joint Nelder-Mead minimization over
(log sigma^2, rescaled lam); its lam standard deviation uses a
Newey-West long-run variance of per-index score contributions, since the
per-series decomposition does not exist for one series.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.stats
from scipy.special import expit, logit

from . import scoring
from .errors import (
    DomainError,
    NonFinite,
    NotConverged,
    SingularInformation,
)
from .models import (
    ModelFamily,
    ModelSpec,
    Theta,
    bundle_for_lambda,
    parameter_domain,
)
from .scoring import SeriesPanel

__all__ = [
    "EstimatorKind",
    "FitResult",
    "GodambeInfo",
    "minimize_scalar",
    "numeric_derivative",
    "fit",
    "fit_single_series",
    "godambe_sd",
    "are",
]

_EPS = float(np.finfo(float).eps)
_H1_SCALE = _EPS ** (1.0 / 3.0)  # first-derivative central-difference step
_H2_SCALE = _EPS**0.25  # second-derivative step, refined by Richardson

DEFAULT_TOL = 1e-6
DEFAULT_BUDGET = 200
DEFAULT_BOOTSTRAP_DRAWS = 200
_SIMPLEX_MAX_ITER = 500


class EstimatorKind(str, enum.Enum):
    MLE = "mle"  # full Gaussian likelihood
    PL = "pl"  # first-order consecutive pairwise likelihood
    HT = "ht"  # total score over series
    HW = "hw"  # score of the Wishart sufficient statistic
    H_SINGLE = "h"  # joint (sigma2, lam) single-series score fit


@dataclass(frozen=True)
class GodambeInfo:
    """Per-series variability J, sensitivity K and information G = K^2/J."""

    J: float
    K: float
    G: float


@dataclass(frozen=True)
class FitResult:
    estimator: EstimatorKind
    estimate: float | Theta
    sd: float
    evaluations: int
    converged: bool
    info: GodambeInfo | None = None

    @property
    def lam(self) -> float:
        """The dependence-parameter component of the estimate."""
        if isinstance(self.estimate, Theta):
            return self.estimate.lam
        return self.estimate


class _CountingObjective:
    """Wraps a scalar objective: counts calls, rejects non-finite values."""

    def __init__(self, objective):
        self._objective = objective
        self.evaluations = 0

    def __call__(self, x: float) -> float:
        self.evaluations += 1
        value = self._objective(float(x))
        if not math.isfinite(value):
            raise NonFinite(f"objective returned {value!r} at x={x}")
        return value


def minimize_scalar(objective, lower: float, upper: float, tol: float = DEFAULT_TOL,
                    max_evaluations: int = DEFAULT_BUDGET) -> tuple[float, int]:
    """Bounded scalar minimization (Brent's golden-section/parabolic
    method).  Returns (argmin, evaluations); the argmin is snapped to a
    bound when the minimum sits there."""
    if not lower < upper:
        raise DomainError(f"need lower < upper, got [{lower}, {upper}]")
    wrapped = _CountingObjective(objective)
    result = scipy.optimize.minimize_scalar(
        wrapped,
        bounds=(lower, upper),
        method="bounded",
        options={"xatol": tol, "maxiter": max_evaluations},
    )
    if result.status == 1:
        raise NotConverged(
            f"bounded minimizer exhausted {max_evaluations} evaluations"
        )
    x = float(result.x)
    for bound in (lower, upper):
        if abs(x - bound) <= 2.0 * tol and wrapped(bound) <= result.fun:
            return bound, wrapped.evaluations
    return x, wrapped.evaluations


def numeric_derivative(objective, x: float, order: int) -> float:
    """Central-difference derivative of a smooth scalar function.

    Order 1 uses step cbrt(eps) * max(|x|, 1); order 2 uses
    eps^(1/4) * max(|x|, 1) with one Richardson extrapolation level.
    """
    if order == 1:
        h = _H1_SCALE * max(abs(x), 1.0)
        value = (objective(x + h) - objective(x - h)) / (2.0 * h)
    elif order == 2:
        h = _H2_SCALE * max(abs(x), 1.0)
        coarse = (objective(x + h) - 2.0 * objective(x) + objective(x - h)) / h**2
        half = h / 2.0
        fine = (objective(x + half) - 2.0 * objective(x) + objective(x - half)) / half**2
        value = (4.0 * fine - coarse) / 3.0
    else:
        raise DomainError(f"order must be 1 or 2, got {order}")
    if not math.isfinite(value):
        raise NonFinite(f"non-finite derivative at x={x}")
    return float(value)


def _fd_step(lam: float, lower: float, upper: float, scale: float) -> float:
    """Step size for differencing at lam, kept inside (lower, upper)."""
    h = scale * max(abs(lam), 1.0)
    room = min(upper - lam, lam - lower)
    if room <= 0:
        raise DomainError(f"lam={lam} is on the domain boundary, cannot difference")
    return min(h, room / 2.0)


def _contribution_derivatives(contribs, lam, lower, upper):
    """First and second per-series derivatives of a vector-valued
    objective-contribution function, by the same stencils as
    numeric_derivative."""
    h1 = _fd_step(lam, lower, upper, _H1_SCALE)
    grad = (contribs(lam + h1) - contribs(lam - h1)) / (2.0 * h1)
    h2 = _fd_step(lam, lower, upper, _H2_SCALE)
    center = contribs(lam)
    coarse = (contribs(lam + h2) - 2.0 * center + contribs(lam - h2)) / h2**2
    half = h2 / 2.0
    fine = (contribs(lam + half) - 2.0 * center + contribs(lam - half)) / half**2
    hess = (4.0 * fine - coarse) / 3.0
    return grad, hess


def _minimized_contributions(kind, spec, panel, sigma2):
    """Per-series contribution function of the *minimized* objective."""
    if kind is EstimatorKind.HT:
        def contribs(lam):
            bundle = bundle_for_lambda(spec, lam, panel.T)
            return scoring.hyvarinen_contributions(panel, bundle, sigma2)
    elif kind is EstimatorKind.MLE:
        def contribs(lam):
            bundle = bundle_for_lambda(spec, lam, panel.T)
            return -scoring.gaussian_contributions(panel, bundle, sigma2)
    elif kind is EstimatorKind.PL:
        def contribs(lam):
            return -scoring.pairwise_contributions(panel, spec, lam, sigma2)
    else:
        raise DomainError(f"no per-series contributions for {kind}")
    return contribs


def _wishart_bootstrap_variability(spec, T, n, sigma2, lam_hat, deriv, draws, rng):
    """Variance of the Wishart score gradient under the fitted model,
    over parametric-bootstrap draws of the sufficient statistic."""
    bundle = bundle_for_lambda(spec, lam_hat, T)
    scale = sigma2 * bundle.gamma
    samples = scipy.stats.wishart(df=n, scale=scale).rvs(size=draws, random_state=rng)
    samples = samples.reshape(draws, T, T)
    inverses = np.linalg.inv(samples)
    coef = (n - T - 1) / 2.0
    brackets = coef * inverses - bundle.inverse / (2.0 * sigma2)
    gradients = -np.einsum("bij,ij->b", brackets, deriv) / (2.0 * sigma2)
    return float(np.var(gradients, ddof=1))


def godambe_sd(
    kind: EstimatorKind,
    spec: ModelSpec,
    panel: SeriesPanel,
    sigma2: float,
    lambda_hat: float,
    *,
    bootstrap_draws: int = DEFAULT_BOOTSTRAP_DRAWS,
    rng: np.random.Generator | None = None,
) -> tuple[float, GodambeInfo]:
    """Sandwich standard deviation of the dependence-parameter estimate.

    J and K are per-series averages, so sd = sqrt(J / (n K^2)).  For the
    Wishart estimator the per-series decomposition does not exist; J and
    K are total quantities normalized by n, which leaves the sd formula
    unchanged.
    """
    kind = EstimatorKind(kind)
    lower, upper = parameter_domain(spec)
    n = panel.n

    if kind is EstimatorKind.HW:
        if rng is None:
            rng = np.random.default_rng(0x5EED)
        deriv = scoring.precision_derivative(spec, lambda_hat, panel.T)
        sensitivity = float(np.sum(deriv**2)) / (4.0 * sigma2**2)
        variability = _wishart_bootstrap_variability(
            spec, panel.T, n, sigma2, lambda_hat, deriv, bootstrap_draws, rng
        )
        J = variability / n
        K = sensitivity / n
    else:
        contribs = _minimized_contributions(kind, spec, panel, sigma2)
        grad, hess = _contribution_derivatives(contribs, lambda_hat, lower, upper)
        K = float(np.mean(hess))
        if kind is EstimatorKind.MLE:
            J = K  # observed information: variability equals sensitivity
        else:
            J = float(np.mean(grad**2))

    if abs(K) < 1e-10:
        raise SingularInformation(f"sensitivity {K} too small at lam={lambda_hat}")
    sd = math.sqrt(J / (n * K * K))
    return sd, GodambeInfo(J=J, K=K, G=K * K / J)


def are(sd_mle: float, sd_est: float) -> float:
    """Asymptotic relative efficiency (sd_mle / sd_est)^2."""
    if not (sd_mle > 0 and sd_est > 0):
        raise DomainError(f"sds must be positive, got {sd_mle}, {sd_est}")
    return (sd_mle / sd_est) ** 2


def _scalar_objective(kind, spec, panel, sigma2):
    """The minimized scalar objective for one panel estimator."""
    if kind is EstimatorKind.MLE:
        return lambda lam: -scoring.gaussian_loglik(lam, panel, sigma2, spec)
    if kind is EstimatorKind.HT:
        return lambda lam: scoring.hyvarinen_total(lam, panel, sigma2, spec)
    if kind is EstimatorKind.PL:
        return lambda lam: -scoring.pairwise_loglik(lam, panel, sigma2, spec)
    if kind is EstimatorKind.HW:
        ssp = scoring.sufficient_statistic(panel)
        scoring._check_wishart_dof(ssp)
        s_inv = np.linalg.inv(ssp.s)
        s_inv = (s_inv + s_inv.T) / 2.0
        coef = (ssp.n - ssp.T - 1) / 2.0
        diag_term = -coef * float(np.sum(np.diag(s_inv) ** 2))

        def objective(lam):
            precision = bundle_for_lambda(spec, lam, panel.T).inverse
            bracket = coef * s_inv - precision / (2.0 * sigma2)
            return diag_term + 0.5 * float(np.sum(bracket**2))

        return objective
    raise DomainError(f"{kind} is not a panel estimator")


def fit(
    kind: EstimatorKind,
    spec: ModelSpec,
    panel: SeriesPanel,
    sigma2: float,
    tol: float = DEFAULT_TOL,
    *,
    bootstrap_draws: int = DEFAULT_BOOTSTRAP_DRAWS,
    rng: np.random.Generator | None = None,
) -> FitResult:
    """Scalar dependence-parameter fit with sigma^2 (and mu = 0) known.

    The AR(1) pairwise fit uses the closed-form Yule-Walker expression,
    which is exactly the maximizer of the sigma^2-profiled pairwise
    likelihood; all other fits run the bounded minimizer.
    """
    kind = EstimatorKind(kind)
    lower, upper = parameter_domain(spec)
    if kind is EstimatorKind.PL and ModelFamily(spec.family) is ModelFamily.AR1:
        lam_hat = scoring.pairwise_ar1_closed_form(panel)
        evaluations = 0
    else:
        objective = _scalar_objective(kind, spec, panel, sigma2)
        lam_hat, evaluations = minimize_scalar(objective, lower, upper, tol)
    sd, info = godambe_sd(
        kind, spec, panel, sigma2, lam_hat,
        bootstrap_draws=bootstrap_draws, rng=rng,
    )
    return FitResult(
        estimator=kind,
        estimate=lam_hat,
        sd=sd,
        evaluations=evaluations,
        converged=True,
        info=info,
    )


# ---------------------------------------------------------------------------
# Single-series joint (sigma^2, lam) fit
# ---------------------------------------------------------------------------


def _ar1_single_terms(y: np.ndarray, phi: float) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal of the AR(1) unit precision and the product precision @ y,
    both O(T) via the tridiagonal stencil."""
    T = y.size
    diag = np.full(T, 1.0 + phi * phi)
    diag[0] = diag[-1] = 1.0
    weighted = np.empty(T)
    weighted[0] = y[0] - phi * y[1]
    weighted[-1] = y[-1] - phi * y[-2]
    if T > 2:
        weighted[1:-1] = -phi * y[:-2] + (1.0 + phi * phi) * y[1:-1] - phi * y[2:]
    return diag, weighted


def _single_series_contributions(spec, y, sigma2, lam):
    """Per-index contributions of the single-series score (mu = 0); the
    AR(1) family avoids any dense T x T work."""
    if ModelFamily(spec.family) is ModelFamily.AR1:
        diag, weighted = _ar1_single_terms(y, lam)
    else:
        inverse = bundle_for_lambda(spec, lam, y.size).inverse
        diag = np.diag(inverse)
        weighted = inverse @ y
    return -diag / sigma2 + 0.5 * weighted**2 / sigma2**2


def _newey_west(vectors: np.ndarray, bandwidth: int) -> np.ndarray:
    """Long-run covariance of a (T, k) array of dependent contributions."""
    centered = vectors - vectors.mean(axis=0)
    T = centered.shape[0]
    cov = centered.T @ centered / T
    for lag in range(1, bandwidth + 1):
        weight = 1.0 - lag / (bandwidth + 1.0)
        cross = centered[lag:].T @ centered[:-lag] / T
        cov += weight * (cross + cross.T)
    return cov


def _single_series_sd(spec, y, theta_hat):
    """Newey-West sandwich sd of the lam component of a single-series fit."""
    T = y.size
    params = np.array([theta_hat.sigma2, theta_hat.lam])
    lower, upper = parameter_domain(spec)

    def contribs(p):
        return _single_series_contributions(spec, y, p[0], p[1])

    steps = np.array([
        _H1_SCALE * max(abs(params[0]), 1.0),
        _fd_step(params[1], lower, upper, _H1_SCALE),
    ])
    gradients = np.empty((T, 2))
    for j in range(2):
        shift = np.zeros(2)
        shift[j] = steps[j]
        gradients[:, j] = (contribs(params + shift) - contribs(params - shift)) / (
            2.0 * steps[j]
        )
    bandwidth = max(1, int(np.floor(T ** (1.0 / 3.0))))
    variability = _newey_west(gradients, bandwidth)

    def total(p):
        return float(np.sum(contribs(p)))

    h = np.array([
        _H2_SCALE * max(abs(params[0]), 1.0),
        _fd_step(params[1], lower, upper, _H2_SCALE),
    ])
    sensitivity = np.empty((2, 2))
    center = total(params)
    for j in range(2):
        ej = np.zeros(2)
        ej[j] = h[j]
        sensitivity[j, j] = (total(params + ej) - 2.0 * center + total(params - ej)) / h[j] ** 2
    ej = np.array([h[0], 0.0])
    ek = np.array([0.0, h[1]])
    sensitivity[0, 1] = sensitivity[1, 0] = (
        total(params + ej + ek)
        - total(params + ej - ek)
        - total(params - ej + ek)
        + total(params - ej - ek)
    ) / (4.0 * h[0] * h[1])
    sensitivity /= T

    try:
        inv_sens = np.linalg.inv(sensitivity)
    except np.linalg.LinAlgError as exc:
        raise SingularInformation(str(exc)) from exc
    covariance = inv_sens @ variability @ inv_sens / T
    lam_var = covariance[1, 1]
    if not (math.isfinite(lam_var) and lam_var >= 0):
        raise SingularInformation(f"negative or non-finite lam variance {lam_var}")
    return math.sqrt(lam_var)


def fit_single_series(
    spec: ModelSpec,
    series,
    tol: float = DEFAULT_TOL,
    *,
    compute_sd: bool = True,
) -> FitResult:
    """Joint (sigma^2, lam) minimum-score fit of one series with mu = 0.

    Nelder-Mead over (log sigma^2, rescaled lam); the rescaling maps the
    clipped domain to the real line through a logit, so the simplex never
    leaves the admissible region.  Starts from the log sample variance
    and the domain midpoint.
    """
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or y.size < 4:
        raise DomainError(f"expected one series with T >= 4, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise DomainError("series contains non-finite values")
    lower, upper = parameter_domain(spec)
    width = upper - lower

    def unpack(u):
        sigma2 = math.exp(u[0])
        lam = lower + width * float(expit(u[1]))
        return sigma2, lam

    def objective(u):
        sigma2, lam = unpack(u)
        return float(np.sum(_single_series_contributions(spec, y, sigma2, lam)))

    start_var = max(float(np.var(y)), 1e-8)
    start = np.array([math.log(start_var), 0.0])
    result = scipy.optimize.minimize(
        objective,
        start,
        method="Nelder-Mead",
        options={
            "xatol": tol,
            "fatol": tol * max(1.0, abs(objective(start))),
            "maxiter": _SIMPLEX_MAX_ITER,
        },
    )
    if not result.success:
        raise NotConverged(f"simplex did not converge: {result.message}")
    sigma2_hat, lam_hat = unpack(result.x)
    # keep lam strictly inside the domain so derivative stencils fit
    lam_hat = float(np.clip(lam_hat, lower + 1e-9, upper - 1e-9))
    theta_hat = Theta(mu=0.0, sigma2=sigma2_hat, lam=lam_hat)
    sd = _single_series_sd(spec, y, theta_hat) if compute_sd else float("nan")
    return FitResult(
        estimator=EstimatorKind.H_SINGLE,
        estimate=theta_hat,
        sd=sd,
        evaluations=int(result.nfev),
        converged=True,
    )
