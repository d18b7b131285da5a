"""
contpath - Problem Core
Primal/dual objectives, duality gaps and dual points built by residual rescaling
"""

import logging
from typing import Optional

import numpy as np

from .config import settings
from .exceptions import DualInfeasibleError, InvalidArgumentError
from .models import PrimalDualState, Problem

# Configure logging
logger = logging.getLogger(__name__)


def _check_beta(prob: Problem, beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64)
    if beta.ndim != 1 or beta.shape[0] != prob.p:
        raise InvalidArgumentError(
            f"beta must have length p={prob.p}, got shape {beta.shape}"
        )
    return beta


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam > 0 or not np.isfinite(lam):
        raise InvalidArgumentError(f"lambda must be positive and finite, got {lam}")
    return lam


def clamp_gap(gap: float, scale: float = 1.0) -> float:
    """Clamp a duality gap at zero.

    Values within -GAP_CLAMP_TOL * scale are rounding noise. Anything more
    negative points at a broken dual point and is logged before clamping.
    """
    if gap >= 0.0:
        return float(gap)
    if gap < -settings.GAP_CLAMP_TOL * max(1.0, scale):
        logger.warning(f"Negative duality gap {gap:.3e} clamped to 0")
    return 0.0


def lambda_max(prob: Problem) -> float:
    """||X^T grad f(0)||_inf = ||X^T y||_inf; beta = 0 is optimal for any larger lambda."""
    return prob.lambda_max


def eval_primal(prob: Problem, beta, lam: float) -> float:
    """P_lam(beta) = 0.5 ||y - X beta||^2 + lam ||beta||_1"""
    beta = _check_beta(prob, beta)
    lam = _check_lambda(lam)
    return prob.loss(prob.X.matvec(beta)) + lam * float(np.abs(beta).sum())


def eval_dual(prob: Problem, theta, lam: float, xt_theta: Optional[np.ndarray] = None) -> float:
    """D_lam(theta) = 0.5 ||y||^2 - 0.5 ||y - lam theta||^2 for ||X^T theta||_inf <= 1.

    Raises DualInfeasibleError when the constraint is violated beyond
    DUAL_FEASIBILITY_TOL.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 1 or theta.shape[0] != prob.n:
        raise InvalidArgumentError(
            f"theta must have length n={prob.n}, got shape {theta.shape}"
        )
    lam = _check_lambda(lam)
    if xt_theta is None:
        xt_theta = prob.X.rmatvec(theta)
    violation = float(np.max(np.abs(xt_theta))) - 1.0
    if violation > settings.DUAL_FEASIBILITY_TOL:
        raise DualInfeasibleError(violation)
    u = prob.y - lam * theta
    return prob.f0 - 0.5 * float(u @ u)


def dual_point(
    prob: Problem,
    beta,
    lam: float,
    features: Optional[np.ndarray] = None,
    residual: Optional[np.ndarray] = None,
) -> PrimalDualState:
    """Build the primal/dual state at beta by rescaling the residual.

    theta = -grad f(X beta) / alpha with alpha = max(lam, ||X^T grad f(X beta)||_inf),
    which is feasible by construction. With ``features`` the rescaling only
    looks at those columns: theta is feasible for the restricted problem,
    ``xt_theta`` holds the restricted correlations and the state is flagged
    ``verified_global=False``.
    """
    beta = _check_beta(prob, beta)
    lam = _check_lambda(lam)
    if residual is None:
        residual = prob.y - prob.X.matvec(beta)

    if features is None:
        corr = prob.X.rmatvec(residual)
    else:
        features = np.asarray(features, dtype=np.intp)
        corr = prob.X.rmatvec(residual, features=features)

    corr_max = float(np.max(np.abs(corr))) if corr.size else 0.0
    alpha = max(lam, corr_max)
    theta = residual / alpha
    zeta = -lam * theta

    f_val = 0.5 * float(residual @ residual)
    primal = f_val + lam * float(np.abs(beta).sum())
    u = prob.y + zeta
    dual = prob.f0 - 0.5 * float(u @ u)
    gap = clamp_gap(primal - dual, scale=abs(primal))
    delta_t = f_val - 0.5 * float(zeta @ zeta)

    return PrimalDualState(
        beta=beta,
        theta=theta,
        alpha=alpha,
        zeta=zeta,
        lam=lam,
        gap_local=gap,
        delta_t=delta_t,
        f_val=f_val,
        primal=primal,
        dual=dual,
        residual=residual,
        xt_theta=corr / alpha,
        verified_global=features is None,
    )


def gap_at_lambda(prob: Problem, state: PrimalDualState, lam: float) -> float:
    """Gap_lam(beta_t, theta_t) for the pair of ``state`` at another lambda.

    Feasibility of theta does not depend on lambda, so only the two
    objective values change.
    """
    lam = _check_lambda(lam)
    primal = state.f_val + lam * state.l1_norm
    u = prob.y - lam * state.theta
    dual = prob.f0 - 0.5 * float(u @ u)
    return clamp_gap(primal - dual, scale=abs(primal))


def rescaling_bound(prob: Problem, state: PrimalDualState) -> float:
    """Upper bound ||grad f(X beta)|| * sqrt(2 Gap / mu) on Delta_t."""
    return float(np.linalg.norm(state.residual)) * np.sqrt(2.0 * state.gap_local / prob.mu)
