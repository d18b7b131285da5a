"""
contpath - Invariant Suites
Randomized checks of the gap bounds, path certificates, screening safety and size control
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .active_control import next_lambda_for_size, ordered_distances
from .continuation import warm_start_bound
from .models import DesignMatrix, Problem
from .path_runner import run_path
from .problem import dual_point, gap_at_lambda
from .schemas import InnerSolverConfig, PathPolicy
from .screening import gap_safe_screen, safe_active_set, sequential_screen
from .solver import solve_subproblem

# Configure logging
logger = logging.getLogger(__name__)

ORACLE_CONFIG = InnerSolverConfig(gap_check_every=1, max_epochs=200000, dynamic_screening=False)
SUPPORT_TOL = 1e-8


@dataclass
class Violation:
    suite: str
    seed: int
    detail: str


@dataclass
class SuiteResult:
    suite: str
    trials: int = 0
    violations: List[Violation] = field(default_factory=list)

    @property
    def passed(self) -> int:
        failed_seeds = {v.seed for v in self.violations}
        return self.trials - len(failed_seeds)


def random_problem(seed: int, n_max: int = 20, p_max: int = 30, n_min: int = 2, p_min: int = 2) -> Problem:
    """Gaussian instance with random sizes, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_min, n_max + 1))
    p = int(rng.integers(p_min, p_max + 1))
    X = rng.standard_normal((n, p))
    beta = rng.laplace(size=p) * (rng.random(p) < 0.3)
    y = X @ beta + 0.5 * rng.standard_normal(n)
    return Problem(X=DesignMatrix.from_array(X), y=y, name=f"random-{seed}")


def oracle_solve(prob: Problem, lam: float):
    """High-accuracy reference solution."""
    eps = 1e-14 * (1.0 + prob.f0)
    return solve_subproblem(prob, np.zeros(prob.p), lam, eps, ORACLE_CONFIG).state


# ===============================
# Suites
# ===============================


def check_warm_start(seed: int) -> List[str]:
    rng = np.random.default_rng(seed)
    prob = random_problem(seed, n_max=30, p_max=50)
    beta = rng.standard_normal(prob.p) * (rng.random(prob.p) < 0.5)
    lambda_t = prob.lambda_max * rng.uniform(0.05, 1.0)
    lam = lambda_t * rng.uniform(0.1, 1.0)
    state = dual_point(prob, beta, lambda_t)
    bound = warm_start_bound(state, lam, prob)
    slack = 1e-9 * (1.0 + abs(bound.gap_at_target))
    problems = []
    if not bound.v_nu - slack <= bound.deviation <= bound.v_mu + slack:
        problems.append(
            f"sandwich violated: V_nu={bound.v_nu:.6e}, Gap-E={bound.deviation:.6e}, V_mu={bound.v_mu:.6e}"
        )
    if abs(bound.gap_at_target - gap_at_lambda(prob, state, lam)) > slack:
        problems.append("direct gap disagrees with the cached re-evaluation")
    return problems


def check_progress(seed: int) -> List[str]:
    prob = random_problem(seed, n_max=30, p_max=50, n_min=10, p_min=10)
    r = 0.42
    policy = PathPolicy.fastpath(prob.lambda_max / 20.0, 1e-6 * (1.0 + prob.f0), r=r, early_stop=True)
    result = run_path(prob, policy)
    problems = []
    if not result.target_met:
        return [f"run ended with {result.terminated_by.value}"]
    gaps = [s.gap_at_target for s in result.trace.steps]
    for cert, g_prev, g_new in zip(result.certificates, gaps, gaps[1:]):
        if cert.progress_slack is None:
            problems.append(f"step {cert.t}: monotone f violated")
        elif cert.progress_slack < -1e-9 * (1.0 + gaps[0]):
            problems.append(f"step {cert.t}: progress slack {cert.progress_slack:.3e}")
        if g_new > (1.0 - r) * g_prev + 1e-9 * gaps[0]:
            problems.append(f"step {cert.t}: contraction {g_new / g_prev:.4f} above {1 - r}")
    return problems


def _screening_breaches(screened: np.ndarray, beta_hat: np.ndarray) -> np.ndarray:
    return np.flatnonzero(screened & (np.abs(beta_hat) > SUPPORT_TOL))


def check_screening(seed: int) -> List[str]:
    rng = np.random.default_rng(seed)
    prob = random_problem(seed, n_max=20, p_max=30)
    lam = prob.lambda_max * rng.uniform(0.1, 0.9)
    lam_next = lam * rng.uniform(0.5, 1.0)
    oracle = oracle_solve(prob, lam)
    oracle_next = oracle_solve(prob, lam_next)
    loose = InnerSolverConfig(gap_check_every=1, dynamic_screening=False)
    problems = []
    for eps in (1e-2, 1e-6, 1e-12):
        state = solve_subproblem(prob, np.zeros(prob.p), lam, eps, loose).state
        breaches = _screening_breaches(gap_safe_screen(prob, state, lam).screened, oracle.beta)
        if breaches.size:
            problems.append(f"gap {eps:.0e}: static rule screened active features {breaches.tolist()}")
        breaches = _screening_breaches(sequential_screen(prob, state, lam_next).screened, oracle_next.beta)
        if breaches.size:
            problems.append(f"gap {eps:.0e}: sequential rule screened active features {breaches.tolist()}")
    return problems


def check_membership(seed: int) -> List[str]:
    rng = np.random.default_rng(seed)
    prob = random_problem(seed, n_max=20, p_max=30)
    lam_t = prob.lambda_max * rng.uniform(0.3, 0.9)
    lam = lam_t / 100.0
    state = oracle_solve(prob, lam_t)
    current = len(safe_active_set(state, lam_t, prob))
    p_t = current + 1
    if p_t > prob.p:
        return []
    _, sorted_d = ordered_distances(state, prob)
    if p_t < prob.p and sorted_d[p_t] - sorted_d[p_t - 1] <= 1e-6 * (1.0 + sorted_d[p_t - 1]):
        return []

    step = next_lambda_for_size(state, p_t, prob, lam)
    problems = []
    reached = len(safe_active_set(state, step.lambda_reach_at, prob))
    if reached < p_t:
        problems.append(f"|A_t| = {reached} < p_t = {p_t} at reach_at={step.lambda_reach_at:.6e}")
    if step.lambda_keep_below is not None:
        above = step.lambda_keep_below * (1.0 + 1e-6)
        if above < lam_t:
            kept = len(safe_active_set(state, above, prob))
            if kept >= p_t:
                problems.append(f"|A_t| = {kept} >= p_t = {p_t} above keep_below={step.lambda_keep_below:.6e}")
    return problems


def check_lambda_max(seed: int) -> List[str]:
    prob = random_problem(seed)
    problems = []
    tol = 1e-12 * (1.0 + 2.0 * prob.f0)
    for factor in (1.0, 1.5):
        state = dual_point(prob, np.zeros(prob.p), prob.lambda_max * factor)
        if state.gap_local > tol:
            problems.append(f"gap {state.gap_local:.3e} at {factor} lambda_max")
    return problems


def check_quadratic(seed: int) -> List[str]:
    rng = np.random.default_rng(seed)
    prob = random_problem(seed)
    z = prob.X.matvec(rng.standard_normal(prob.p))
    f = prob.loss(z)
    half_grad_sq = 0.5 * float(np.dot(prob.loss_gradient(z), prob.loss_gradient(z)))
    if abs(f - half_grad_sq) > 1e-10 * (1.0 + f):
        return [f"f={f:.12e} but half squared gradient norm={half_grad_sq:.12e}"]
    return []


SUITES: Dict[str, Callable[[int], List[str]]] = {
    "warm_start": check_warm_start,
    "progress": check_progress,
    "screening": check_screening,
    "membership": check_membership,
    "lambda_max": check_lambda_max,
    "quadratic": check_quadratic,
}


def run_suites(trials: int, seed: int = 0, suites: Optional[Sequence[str]] = None) -> List[SuiteResult]:
    """Run each suite on ``trials`` instances seeded seed, seed+1, ..."""
    results = []
    for name in suites or list(SUITES):
        check = SUITES[name]
        result = SuiteResult(suite=name)
        for trial in range(trials):
            trial_seed = seed + trial
            result.trials += 1
            try:
                details = check(trial_seed)
            except Exception as e:
                logger.error(f"Suite {name} crashed on seed {trial_seed}: {e}")
                details = [f"crashed: {e}"]
            for detail in details:
                result.violations.append(Violation(suite=name, seed=trial_seed, detail=detail))
        logger.info(f"Suite {name}: {result.passed}/{result.trials} passed")
        results.append(result)
    return results
