"""
contpath - Policy Steppers
Turn a PathPolicy into the per-step (lambda_{t+1}, tolerance, acceptance test) plans
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .active_control import next_lambda_for_size
from .config import settings
from .continuation import (
    adaptive_r,
    default_eps_fastpath,
    estimation_term,
    fastpath_radicand,
    geometric_grid,
    max_grid_size,
    next_lambda_fastpath,
    next_lambda_simplified,
    prescribed_grid_refine,
    simplified_tolerance,
    stopping_condition_fastpath,
)
from .models import PolicyVariant, PrimalDualState, Problem
from .problem import gap_at_lambda
from .schemas import GridSolution, PathPolicy, SizeSchedule
from .screening import safe_active_set

# Configure logging
logger = logging.getLogger(__name__)


@dataclass
class StepPlan:
    """What the runner solves next"""

    lambda_next: float
    eps_inner: float
    eps_t: Optional[float] = None
    accept: Optional[Callable[[PrimalDualState], bool]] = None
    r: Optional[float] = None
    e_prev: Optional[float] = None
    size_target: Optional[int] = None
    grid_point: bool = False


class PolicyStepper:
    """Base stepper: walks from lambda_max towards the target lambda."""

    variant: PolicyVariant

    def __init__(self, prob: Problem, policy: PathPolicy, lam: float, eps: float):
        self.prob = prob
        self.policy = policy
        self.lam = lam
        self.eps = eps
        self.grid_solutions: List[GridSolution] = []
        self.grid_coefficients: List[np.ndarray] = []

    def start(self, state0: PrimalDualState) -> None:
        pass

    def target_met(self, state: PrimalDualState) -> bool:
        return gap_at_lambda(self.prob, state, self.lam) <= self.eps

    def finished(self, state: PrimalDualState) -> bool:
        if state.lam <= self.lam:
            return True
        return self.policy.early_stop and self.target_met(state)

    def plan(self, state: PrimalDualState, t: int) -> Optional[StepPlan]:
        """Next step from ``state``; None once the path is complete."""
        if self.finished(state):
            return None
        return self._plan(state, t)

    def _plan(self, state: PrimalDualState, t: int) -> StepPlan:
        raise NotImplementedError

    def accepted(self, prev: PrimalDualState, new: PrimalDualState, plan: StepPlan, t: int) -> None:
        pass

    def final_plan(self) -> StepPlan:
        return StepPlan(lambda_next=self.lam, eps_inner=self.eps, eps_t=self.eps)

    def fallback(self, state: PrimalDualState, t: int) -> StepPlan:
        """Simplified step used when a policy cannot produce its own."""
        lam_next = next_lambda_simplified(state.lam, self.lam, self.policy.effective_r)
        if lam_next <= self.lam:
            return self.final_plan()
        return StepPlan(
            lambda_next=lam_next,
            eps_inner=simplified_tolerance(lam_next, self.lam, self.eps),
        )


# ===============================
# FastPath family
# ===============================


def _fastpath_final(prob: Problem, state: PrimalDualState, r: float, lam: float, eps: float) -> StepPlan:
    """Last step onto lam; it still contracts the target gap by (1 - r)."""
    gap = gap_at_lambda(prob, state, lam)
    eps_final = min(eps, (1.0 - r) * gap) if gap > eps else eps
    return StepPlan(lambda_next=lam, eps_inner=eps_final, eps_t=eps_final, r=r)


def fastpath_plan(
    prob: Problem,
    state: PrimalDualState,
    r: float,
    lam: float,
    eps: float,
    eps_step: Optional[float] = None,
) -> StepPlan:
    """One certified linear-rate step towards lam.

    eps_t defaults to the recipe that keeps D(eps_t) >= 0. A fixed eps_step
    that makes D negative is halved up to EPS_HALVING_MAX times before
    falling back to the default.
    """
    if state.zeta_norm_sq == 0.0:
        return _fastpath_final(prob, state, r, lam, eps)

    if eps_step is None:
        eps_t = default_eps_fastpath(state, r, prob, lam)
    else:
        eps_t = eps_step
        halvings = 0
        while fastpath_radicand(state, r, eps_t, prob, lam) < 0 and halvings < settings.EPS_HALVING_MAX:
            eps_t /= 2.0
            halvings += 1
        if fastpath_radicand(state, r, eps_t, prob, lam) < 0:
            logger.warning(
                f"eps_t still infeasible after {halvings} halvings at lambda_t={state.lam:.6e}, "
                f"using the default recipe"
            )
            eps_t = default_eps_fastpath(state, r, prob, lam)
        elif halvings:
            logger.debug(f"eps_t halved {halvings} times to {eps_t:.3e}")

    lam_next = next_lambda_fastpath(state, r, eps_t, prob, lam)
    if lam_next <= lam:
        return _fastpath_final(prob, state, r, lam, eps)

    e_prev = estimation_term(state, lam)

    def accept(candidate: PrimalDualState) -> bool:
        return stopping_condition_fastpath(e_prev, estimation_term(candidate, lam), eps_t, r)

    return StepPlan(
        lambda_next=lam_next,
        eps_inner=math.inf,
        eps_t=eps_t,
        accept=accept,
        r=r,
        e_prev=e_prev,
    )


def fastpath_rate(prob: Problem, policy: PathPolicy) -> float:
    """Explicit r, or the default 0.42 mu/nu."""
    if policy.r is not None:
        return policy.r
    return settings.DEFAULT_R_FACTOR * prob.mu / prob.nu


class FastPathStepper(PolicyStepper):
    variant = PolicyVariant.FASTPATH

    def rate(self, state: PrimalDualState) -> float:
        return fastpath_rate(self.prob, self.policy)

    def _plan(self, state: PrimalDualState, t: int) -> StepPlan:
        return fastpath_plan(
            self.prob, state, self.rate(state), self.lam, self.eps, self.policy.eps_step
        )


class AdaptiveRStepper(FastPathStepper):
    """FastPath with r_t = c (mu/nu)(lam/lam_t)"""

    variant = PolicyVariant.ADAPTIVE_R

    def rate(self, state: PrimalDualState) -> float:
        return self.policy.effective_c * adaptive_r(self.prob, state.lam, self.lam)


class SimplifiedStepper(PolicyStepper):
    variant = PolicyVariant.SIMPLIFIED

    def _plan(self, state: PrimalDualState, t: int) -> StepPlan:
        plan = self.fallback(state, t)
        plan.eps_t = plan.eps_inner
        plan.r = self.policy.effective_r
        return plan


# ===============================
# Grid policies
# ===============================


@dataclass
class _GridPoint:
    lam: float
    eps: float
    is_grid: bool


class GridStepper(PolicyStepper):
    """Geometric and prescribed grids.

    Every grid point ends with a recorded solution certified at that point.
    With early stopping, points already certified by the current iterate are
    recorded without a solve.
    """

    def __init__(self, prob: Problem, policy: PathPolicy, lam: float, eps: float):
        super().__init__(prob, policy, lam, eps)
        self.variant = policy.variant
        self.points: List[_GridPoint] = []

    def start(self, state0: PrimalDualState) -> None:
        if self.policy.variant == PolicyVariant.GEOMETRIC:
            T = self.policy.T
            if self.policy.auto_T:
                gap0 = gap_at_lambda(self.prob, state0, self.lam)
                T = max(max_grid_size(gap0, self.eps, self.policy.effective_r) + 1, 2)
                logger.info(f"Geometric grid size set to T={T} from the initial gap {gap0:.3e}")
            grid = geometric_grid(state0.lam, self.lam, T=T, ratio=self.policy.ratio)
            self.points = [_GridPoint(float(g), self.eps, True) for g in grid]
        else:
            refined = prescribed_grid_refine(self.policy.grid, self.policy)
            self.points = [_GridPoint(lam, eps, is_grid) for lam, eps, is_grid in refined]

        # points at or above lambda_0 are solved exactly by beta = 0
        while self.points and self.points[0].lam >= state0.lam:
            point = self.points.pop(0)
            if point.is_grid:
                self._record(point.lam, gap_at_lambda(self.prob, state0, point.lam), state0, 0)

    def _record(self, lam: float, gap: float, state: PrimalDualState, t: int) -> None:
        self.grid_solutions.append(
            GridSolution(lambda_grid=lam, gap=gap, nnz=int(np.count_nonzero(state.beta)), step=t)
        )
        self.grid_coefficients.append(state.beta.copy())

    def _pop_certified(self, state: PrimalDualState, t: int) -> None:
        """Drop leading points whose next grid point the current iterate already certifies."""
        while self.points:
            k = next((i for i, p in enumerate(self.points) if p.is_grid), None)
            if k is None:
                self.points.clear()
                return
            grid_lam = self.points[k].lam
            gap = gap_at_lambda(self.prob, state, grid_lam)
            if gap > self.eps:
                return
            logger.debug(f"Grid point lambda={grid_lam:.6e} certified early (gap {gap:.3e})")
            del self.points[: k + 1]
            self._record(grid_lam, gap, state, t)

    def finished(self, state: PrimalDualState) -> bool:
        return not self.points

    def plan(self, state: PrimalDualState, t: int) -> Optional[StepPlan]:
        # FastPath segments never land on their grid point exactly, they stop once it is certified
        if self.policy.early_stop or self.policy.refine == PolicyVariant.FASTPATH:
            self._pop_certified(state, t)
        if not self.points:
            return None
        head = self.points[0]
        if head.is_grid and self.policy.refine == PolicyVariant.FASTPATH:
            plan = fastpath_plan(
                self.prob,
                state,
                fastpath_rate(self.prob, self.policy),
                head.lam,
                head.eps,
                self.policy.eps_step,
            )
            plan.grid_point = plan.lambda_next == head.lam
            return plan
        return StepPlan(
            lambda_next=head.lam,
            eps_inner=head.eps,
            eps_t=head.eps,
            grid_point=head.is_grid,
        )

    def accepted(self, prev: PrimalDualState, new: PrimalDualState, plan: StepPlan, t: int) -> None:
        if self.points and new.lam == self.points[0].lam:
            point = self.points.pop(0)
            if point.is_grid:
                self._record(point.lam, new.gap_local, new, t)


# ===============================
# Active-set size control
# ===============================


class ActiveSetStepper(PolicyStepper):
    """Pick lam_{t+1} so the safe active set grows to the scheduled size."""

    variant = PolicyVariant.ACTIVE_SET

    def __init__(self, prob: Problem, policy: PathPolicy, lam: float, eps: float):
        super().__init__(prob, policy, lam, eps)
        self.schedule: SizeSchedule = policy.schedule or SizeSchedule()

    def _plan(self, state: PrimalDualState, t: int) -> StepPlan:
        p = self.prob.p
        current = len(safe_active_set(state, state.lam, self.prob))
        p_t = self.schedule.next_target(current, p)
        if p_t <= current or p_t >= p:
            logger.debug(f"Size schedule exhausted at |A_t|={current}, jumping to the target")
            return self.final_plan()

        step = next_lambda_for_size(state, p_t, self.prob, self.lam)
        # ties and zero distances can leave lam_{t+1} at lam_t
        while step.lambda_reach_at >= state.lam and step.target_size < p:
            step = next_lambda_for_size(state, step.target_size + 1, self.prob, self.lam)

        lam_next = step.lambda_reach_at
        if lam_next <= self.lam * (1.0 + settings.LAMBDA_SNAP_TOL) or lam_next >= state.lam:
            return self.final_plan()
        return StepPlan(
            lambda_next=lam_next,
            eps_inner=simplified_tolerance(lam_next, self.lam, self.eps),
            size_target=step.target_size,
        )

    def accepted(self, prev: PrimalDualState, new: PrimalDualState, plan: StepPlan, t: int) -> None:
        if plan.size_target is None:
            return
        realized = len(safe_active_set(prev, plan.lambda_next, self.prob))
        if realized < plan.size_target:
            logger.warning(
                f"Step {t}: |A_t(lambda_t+1)|={realized} below the target {plan.size_target}"
            )


def make_stepper(prob: Problem, policy: PathPolicy, lam: float, eps: float) -> PolicyStepper:
    steppers = {
        PolicyVariant.FASTPATH: FastPathStepper,
        PolicyVariant.ADAPTIVE_R: AdaptiveRStepper,
        PolicyVariant.SIMPLIFIED: SimplifiedStepper,
        PolicyVariant.GEOMETRIC: GridStepper,
        PolicyVariant.PRESCRIBED: GridStepper,
        PolicyVariant.ACTIVE_SET: ActiveSetStepper,
    }
    return steppers[policy.variant](prob, policy, lam, eps)
