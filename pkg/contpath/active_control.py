"""
contpath - Active Set Control
Choosing the next lambda from a target safe active-set size, and working sets
"""

import logging
import math
from typing import Optional

import numpy as np

from .exceptions import InvalidArgumentError, SizeControlInfeasibleError
from .models import (
    MembershipBounds,
    PrimalDualState,
    Problem,
    SizeStep,
    WorkingSet,
    WorkingSetOrigin,
)
from .screening import error_envelopes, feature_distances

# Configure logging
logger = logging.getLogger(__name__)


def _entry_threshold(state_t: PrimalDualState, radicand: float) -> float:
    """lam_t ||theta_t|| / (||theta_t|| + sqrt(radicand))"""
    theta_norm = state_t.theta_norm
    denominator = theta_norm + math.sqrt(radicand)
    if denominator == 0.0:
        return state_t.lam
    return state_t.lam * theta_norm / denominator


def _distances(state_t: PrimalDualState, prob: Problem) -> np.ndarray:
    return feature_distances(prob, state_t.theta, state_t.xt_theta)


def lambda_bounds_for_membership(
    state_t: PrimalDualState, j: int, prob: Problem, lam: float
) -> MembershipBounds:
    """Thresholds on lam' in [lam, lam_t] for feature j to join A_t(lam').

    lo_rule: lam' <= lo_rule guarantees j in A_t(lam').
    hi_rule: j in A_t(lam') forces lam' <= hi_rule.
    A rule whose radicand is negative is reported as None.
    """
    if not 0 <= j < prob.p:
        raise InvalidArgumentError(f"feature index {j} out of range [0, {prob.p})")
    d_j = float(_distances(state_t, prob)[j])
    e_lo, e_hi = error_envelopes(state_t, lam)

    if math.isinf(d_j):
        return MembershipBounds(lo_rule=0.0, hi_rule=0.0)

    rad_lo = d_j**2 - 2.0 * prob.nu * e_lo
    rad_hi = (prob.mu / prob.nu) * (d_j**2 - 2.0 * prob.nu * e_hi)
    return MembershipBounds(
        lo_rule=_entry_threshold(state_t, rad_lo) if rad_lo >= 0 else None,
        hi_rule=_entry_threshold(state_t, rad_hi) if rad_hi >= 0 else None,
    )


def ordered_distances(state_t: PrimalDualState, prob: Problem):
    """Feature order by (distance, index) and the sorted distances."""
    distances = _distances(state_t, prob)
    order = np.lexsort((np.arange(prob.p), distances))
    return order, distances[order]


def next_lambda_for_size(
    state_t: PrimalDualState, p_t: int, prob: Problem, lam: float
) -> SizeStep:
    """Next lambda whose safe active set reaches p_t features.

    lambda_reach_at guarantees |A_t(lam_{t+1})| >= p_t; anything above
    lambda_keep_below keeps |A_t(lam_{t+1})| < p_t. Both are clamped into
    [lam, lam_t]; keep_below is None when its radicand is negative.
    """
    if not 1 <= p_t <= prob.p:
        raise InvalidArgumentError(f"size target p_t={p_t} outside [1, {prob.p}]")
    _, sorted_d = ordered_distances(state_t, prob)
    d_pt = float(sorted_d[p_t - 1])
    e_lo, e_hi = error_envelopes(state_t, lam)

    def clamp(value: float) -> float:
        return min(max(value, lam), state_t.lam)

    if math.isinf(d_pt):
        return SizeStep(lambda_keep_below=lam, lambda_reach_at=lam, target_size=p_t, distance=d_pt)

    rad_reach = d_pt**2 - 2.0 * prob.nu * e_lo
    if rad_reach < 0:
        raise SizeControlInfeasibleError(p_t, rad_reach)
    rad_keep = (prob.mu / prob.nu) * (d_pt**2 - 2.0 * prob.nu * e_hi)

    reach_at = clamp(_entry_threshold(state_t, rad_reach))
    keep_below = clamp(_entry_threshold(state_t, rad_keep)) if rad_keep >= 0 else None
    logger.debug(
        f"Size control p_t={p_t}: d_(p_t)={d_pt:.3e}, reach_at={reach_at:.6e}, keep_below={keep_below}"
    )
    return SizeStep(
        lambda_keep_below=keep_below,
        lambda_reach_at=reach_at,
        target_size=p_t,
        distance=d_pt,
    )


def working_set(
    prob: Problem, beta: np.ndarray, gamma: float, residual: Optional[np.ndarray] = None
) -> WorkingSet:
    """W(beta, gamma) = {j : |X_j^T grad f(X beta)| >= gamma}"""
    if not gamma > 0:
        raise InvalidArgumentError(f"gamma must be positive, got {gamma}")
    if residual is None:
        residual = prob.y - prob.X.matvec(beta)
    corr = np.abs(prob.X.rmatvec(residual))
    return WorkingSet(
        indices=np.flatnonzero(corr >= gamma),
        threshold=gamma,
        origin=WorkingSetOrigin.PATHWISE_UNSAFE,
    )


def distance_working_set(state_t: PrimalDualState, p_t: int, prob: Problem) -> WorkingSet:
    """The p_t closest constraints {j : d_j(theta_t) <= d_(p_t)(theta_t)}, ties included."""
    p_t = min(max(p_t, 1), prob.p)
    distances = _distances(state_t, prob)
    _, sorted_d = ordered_distances(state_t, prob)
    threshold = float(sorted_d[p_t - 1])
    return WorkingSet(
        indices=np.flatnonzero(distances <= threshold),
        threshold=threshold,
        origin=WorkingSetOrigin.DISTANCE_RANK,
    )


def sparsity_correction(prob: Problem, r: float, lambda_t: float, lam: float) -> float:
    """sqrt(mu/nu)(nu/mu - sqrt(1 - r nu/mu))(1/lam - 1/lam_t)

    Growth of the sequential safe radius over one exact FastPath step; larger
    r buys a faster rate with a larger active set.
    """
    kappa = prob.nu / prob.mu
    return math.sqrt(1.0 / kappa) * (kappa - math.sqrt(1.0 - r * kappa)) * (1.0 / lam - 1.0 / lambda_t)
