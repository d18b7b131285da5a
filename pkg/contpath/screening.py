"""
contpath - Screening
Gap-safe elimination of inactive features along the path
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from .config import settings
from .continuation import estimation_term
from .exceptions import InvalidArgumentError
from .models import PrimalDualState, Problem, SafeRegion, ScreeningReport
from .problem import gap_at_lambda

# Configure logging
logger = logging.getLogger(__name__)


def feature_distances(prob: Problem, theta: np.ndarray, xt_theta: Optional[np.ndarray] = None) -> np.ndarray:
    """d_j(theta) = (1 - |X_j^T theta|) / ||X_j||, +inf for zero columns."""
    if xt_theta is None:
        xt_theta = prob.X.rmatvec(theta)
    norms = prob.X.col_norms
    slack = 1.0 - np.abs(xt_theta)
    d = np.full(prob.p, np.inf)
    np.divide(slack, norms, out=d, where=norms > 0)
    return d


def safe_radius(gap: float, lam: float, prob: Problem) -> float:
    """sqrt(2 nu Gap) / lam"""
    return math.sqrt(2.0 * prob.nu * max(gap, 0.0)) / lam


def safe_region(state: PrimalDualState, lam: float, prob: Problem) -> SafeRegion:
    gap = state.gap_local if lam == state.lam else gap_at_lambda(prob, state, lam)
    return SafeRegion(center=state.theta, radius=safe_radius(gap, lam, prob), gap=gap, lam=lam)


def error_envelopes(state_t: PrimalDualState, lam: float) -> Tuple[float, float]:
    """Bounds E' <= E_t(lam')/lam'^2 <= E'' valid for every lam' in [lam, lam_t]."""
    if lam > state_t.lam:
        raise InvalidArgumentError(f"target lambda={lam} exceeds lambda_t={state_t.lam}")
    gap, delta, lam_t = state_t.gap_local, state_t.delta_t, state_t.lam
    spread = 1.0 / lam**2 - 1.0 / lam_t**2
    e_lo = gap / lam_t**2 + spread * min(0.0, delta)
    e_hi = gap / (lam * lam_t) + spread * max(0.0, delta)
    return e_lo, e_hi


def _report(
    distances: np.ndarray, radius: float, state: PrimalDualState, target_lambda: Optional[float]
) -> ScreeningReport:
    screened = distances > radius + settings.SCREENING_MARGIN
    e_lo, e_hi = error_envelopes(state, target_lambda if target_lambda is not None else state.lam)
    return ScreeningReport(
        distances=distances,
        screened=screened,
        active=np.flatnonzero(~screened),
        radius=radius,
        e_lo=e_lo,
        e_hi=e_hi,
    )


def gap_safe_screen(
    prob: Problem,
    state: PrimalDualState,
    lam: float,
    target_lambda: Optional[float] = None,
) -> ScreeningReport:
    """Screen every j with d_j(theta) > sqrt(2 nu Gap_lam(beta, theta)) / lam.

    The envelopes of the report are taken over [target_lambda, lam_t]; they
    collapse to Gap_t / lam_t^2 without a target.
    """
    region = safe_region(state, lam, prob)
    distances = feature_distances(prob, state.theta, state.xt_theta if state.verified_global else None)
    report = _report(distances, region.radius, state, target_lambda)
    logger.debug(
        f"Gap safe screening at lambda={lam:.6e}: radius={region.radius:.3e}, "
        f"{report.n_screened}/{prob.p} screened"
    )
    return report


def sequential_radius(state_t: PrimalDualState, lambda_next: float, prob: Problem) -> float:
    """r_t(lam_{t+1}) = sqrt(2 nu Gap_{lam_{t+1}}(beta_t, theta_t)) / lam_{t+1}"""
    if lambda_next > state_t.lam:
        raise InvalidArgumentError(
            f"lambda_next={lambda_next} exceeds lambda_t={state_t.lam}"
        )
    return safe_radius(gap_at_lambda(prob, state_t, lambda_next), lambda_next, prob)


def sequential_screen(
    prob: Problem, state_t: PrimalDualState, lambda_next: float, target_lambda: Optional[float] = None
) -> ScreeningReport:
    """Screening for lam_{t+1} with the accepted pair of step t."""
    radius = sequential_radius(state_t, lambda_next, prob)
    distances = feature_distances(prob, state_t.theta, state_t.xt_theta)
    return _report(distances, radius, state_t, target_lambda)


def safe_active_set(state_t: PrimalDualState, lambda_prime: float, prob: Problem) -> np.ndarray:
    """A_t(lam') = {j : d_j(theta_t) <= r_t(lam')}"""
    radius = sequential_radius(state_t, lambda_prime, prob)
    distances = feature_distances(prob, state_t.theta, state_t.xt_theta)
    return np.flatnonzero(distances <= radius + settings.SCREENING_MARGIN)


def support_path_threshold(state_t: PrimalDualState, lambda_next: float, prob: Problem) -> float:
    """Distance above which a feature stays eliminated at lam_{t+1}.

    sqrt(2 nu E_t(lam_{t+1}) / lam_{t+1}^2 + (nu/mu) ||zeta_t||^2 (1/lam_{t+1} - 1/lam_t)^2)
    """
    if lambda_next > state_t.lam:
        raise InvalidArgumentError(
            f"lambda_next={lambda_next} exceeds lambda_t={state_t.lam}"
        )
    e_t = max(estimation_term(state_t, lambda_next), 0.0)
    drift = (prob.nu / prob.mu) * state_t.zeta_norm_sq * (1.0 / lambda_next - 1.0 / state_t.lam) ** 2
    return math.sqrt(2.0 * prob.nu * e_t / lambda_next**2 + drift)


def screening_stop_criteria(
    report: ScreeningReport,
    state_t: PrimalDualState,
    lambda_next: float,
    prob: Problem,
    c: float = settings.SATURATION_C,
) -> Tuple[bool, bool]:
    """(keep_optimizing, screening_saturated) for the iterate behind ``report``.

    Optimization may stop once E'' < min over screened j of d_j^2 / 2nu
    (vacuous when nothing is screened). Screening is saturated once
    E_t(lam_{t+1}) <= c ||zeta_t||^2 (1 - lam_{t+1}/lam_t)^2 / 2mu.
    """
    screened = report.distances[report.screened]
    floor = float(np.min(screened)) ** 2 / (2.0 * prob.nu) if screened.size else math.inf
    keep_optimizing = not report.e_hi < floor

    e_next = estimation_term(state_t, lambda_next)
    drift = c * state_t.zeta_norm_sq * (1.0 - lambda_next / state_t.lam) ** 2 / (2.0 * prob.mu)
    return keep_optimizing, e_next <= drift


def strong_rule_screen(
    prob: Problem,
    theta_t: np.ndarray,
    lambda_t: float,
    lambda_next: float,
    xt_theta: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Heuristic discard set {j : |X_j^T theta_t| < (2 lam_{t+1} - lam_t) / lam_t}.

    Unsafe: features in the returned set can be active at the optimum.
    """
    if xt_theta is None:
        xt_theta = prob.X.rmatvec(theta_t)
    threshold = (2.0 * lambda_next - lambda_t) / lambda_t
    return np.flatnonzero(np.abs(xt_theta) < threshold)
