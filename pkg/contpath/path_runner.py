"""
contpath - Path Runner
Approximate continuation path: working-set solve, safe correction, certified acceptance
"""

import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from .active_control import working_set
from .config import settings
from .continuation import (
    clip_targets,
    estimation_term,
    residual_decrease_holds,
    stepwise_progress_certificate,
    stopping_condition_fastpath,
)
from .exceptions import (
    BudgetExceededError,
    InvalidArgumentError,
    PolicyError,
    SizeControlInfeasibleError,
)
from .models import (
    PolicyVariant,
    PrimalDualState,
    Problem,
    TerminationReason,
    WorkingSetOrigin,
)
from .policies import PolicyStepper, StepPlan, fastpath_rate, make_stepper
from .problem import dual_point, gap_at_lambda
from .schemas import (
    GridSolution,
    InnerSolverConfig,
    PathPolicy,
    PathTrace,
    StepCertificate,
    StepRecord,
    TraceMeta,
)
from .screening import (
    feature_distances,
    safe_active_set,
    screening_stop_criteria,
    sequential_screen,
    strong_rule_screen,
)
from .solver import SubproblemResult, solve_subproblem

# Configure logging
logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    """Everything a path run produced"""

    final_state: PrimalDualState
    trace: PathTrace
    certificates: List[StepCertificate]
    meta: TraceMeta
    grid_solutions: List[GridSolution] = field(default_factory=list)
    grid_coefficients: List[np.ndarray] = field(default_factory=list)
    states: List[PrimalDualState] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def terminated_by(self) -> Optional[TerminationReason]:
        return self.trace.terminated_by

    @property
    def target_met(self) -> bool:
        return self.terminated_by in (
            TerminationReason.REACHED_LAMBDA,
            TerminationReason.TARGET_GAP_MET,
        )

    @property
    def final_gap(self) -> float:
        return self.trace.steps[-1].gap_at_target


@dataclass
class _StepOutcome:
    state: PrimalDualState
    epochs: int
    updates: int
    working_set_size: int
    active_set_size: int
    monotone: bool
    grow_working_set: bool


class PathRunner:
    """Runs continuation paths and keeps aggregate statistics"""

    def __init__(self):
        self._lock = threading.Lock()
        self.stats = {
            "runs": 0,
            "steps": 0,
            "epochs": 0,
            "coordinate_updates": 0,
            "budget_exceeded": 0,
            "size_control_retries": 0,
        }

    def _bump(self, **counts: int) -> None:
        with self._lock:
            for key, value in counts.items():
                self.stats[key] += value

    def get_stats(self) -> Dict[str, int]:
        with self._lock:
            return dict(self.stats)

    # ===============================
    # Targets
    # ===============================

    def resolve_targets(self, prob: Problem, policy: PathPolicy):
        """Clipped (lambda, eps) and whether clipping changed them.

        The eps floor only replaces a non-positive eps; a positive eps is always honored.
        """
        lam, eps = policy.target_lambda, policy.target_eps
        if policy.clip:
            lam_ratio = 0.0 if policy.variant == PolicyVariant.PRESCRIBED else policy.clip_lambda_floor
            lam_c, eps_floor = clip_targets(
                lam, eps, prob.lambda_max, prob.f0, lam_ratio, policy.clip_eps_floor
            )
            eps_c = eps if eps > 0.0 else eps_floor
        else:
            lam_c, eps_c = lam, eps
        if prob.lambda_max == 0.0 and lam_c <= 0.0:
            lam_c = 1.0
        if not lam_c > 0:
            raise InvalidArgumentError(f"target lambda must be positive after clipping, got {lam_c}")
        if not eps_c > 0:
            raise InvalidArgumentError(f"target eps must be positive after clipping, got {eps_c}")
        return lam_c, eps_c, (lam_c, eps_c) != (lam, eps)

    # ===============================
    # One step
    # ===============================

    def _working_set(
        self,
        prob: Problem,
        state: PrimalDualState,
        lam_next: float,
        screened: np.ndarray,
        cfg: InnerSolverConfig,
        floor: Optional[np.ndarray],
    ) -> np.ndarray:
        rule = cfg.working_set_rule
        if rule == WorkingSetOrigin.PATHWISE_UNSAFE:
            ws = working_set(prob, state.beta, lam_next, residual=state.residual).indices
        elif rule == WorkingSetOrigin.STRONG_RULE:
            keep = np.ones(prob.p, dtype=bool)
            keep[strong_rule_screen(prob, state.theta, state.lam, lam_next, state.xt_theta)] = False
            ws = np.flatnonzero(keep)
        else:
            ws = np.flatnonzero(~screened)

        ws = np.union1d(ws, np.flatnonzero(state.beta))
        if floor is not None:
            ws = np.union1d(ws, floor)
        return ws[~screened[ws]]

    def _advance(
        self,
        prob: Problem,
        state: PrimalDualState,
        plan: StepPlan,
        cfg: InnerSolverConfig,
        screened: np.ndarray,
        ws_floor: Optional[np.ndarray],
    ) -> _StepOutcome:
        """Working-set solve, then the safe full-problem correction."""
        lam_next = plan.lambda_next
        epochs, updates = 0, 0
        beta_start = state.beta
        ws_size = int(prob.p - screened.sum())
        ws = None
        if cfg.working_set:
            ws = self._working_set(prob, state, lam_next, screened, cfg, ws_floor)
            ws_size = int(len(ws))
            if 0 < ws_size < prob.p - screened.sum():
                try:
                    sub = solve_subproblem(
                        prob,
                        state.beta,
                        lam_next,
                        plan.eps_inner,
                        cfg,
                        restrict=ws,
                        screened=screened,
                        accept=plan.accept,
                    )
                    beta_start = sub.state.beta
                    epochs += sub.epochs
                    updates += sub.coordinate_updates
                except BudgetExceededError as e:
                    logger.warning(f"Working-set solve hit its budget at lambda={lam_next:.6e}, correcting from its best iterate")
                    beta_start = e.best_state.beta
                    epochs += e.epochs

        f_ceiling = state.f_val if cfg.enforce_monotone_f else None
        try:
            correction: SubproblemResult = solve_subproblem(
                prob,
                beta_start,
                lam_next,
                plan.eps_inner,
                cfg,
                screened=screened,
                accept=plan.accept,
                f_ceiling=f_ceiling,
            )
        except BudgetExceededError as e:
            e.epochs += epochs
            raise
        epochs += correction.epochs
        updates += correction.coordinate_updates

        grow = False
        if ws is not None:
            outside = np.ones(prob.p, dtype=bool)
            outside[ws] = False
            grow = bool(np.any(correction.state.beta[outside] != 0))

        return _StepOutcome(
            state=correction.state,
            epochs=epochs,
            updates=updates,
            working_set_size=ws_size,
            active_set_size=int(prob.p - correction.screened.sum()),
            monotone=correction.monotone,
            grow_working_set=grow,
        )

    def _tighten(
        self, prob: Problem, state: PrimalDualState, cfg: InnerSolverConfig
    ) -> SubproblemResult:
        """Re-solve at lambda_t with a tighter tolerance for size control."""
        eps = max(state.gap_local / settings.SIZE_CONTROL_TIGHTEN, 1e-15 * (1.0 + prob.f0))
        return solve_subproblem(prob, state.beta, state.lam, eps, cfg)

    def _plan(
        self, stepper: PolicyStepper, prob: Problem, state: PrimalDualState, cfg: InnerSolverConfig, t: int
    ):
        """Plan the next step; size control may refine the current state first."""
        extra_epochs, extra_updates = 0, 0
        for attempt in range(settings.SIZE_CONTROL_RETRIES + 1):
            try:
                return stepper.plan(state, t), state, extra_epochs, extra_updates
            except SizeControlInfeasibleError as e:
                if attempt == settings.SIZE_CONTROL_RETRIES:
                    logger.warning(
                        f"Size control infeasible after {attempt} retries ({e}), using a simplified step"
                    )
                    return stepper.fallback(state, t), state, extra_epochs, extra_updates
                logger.debug(f"Size control infeasible at lambda_t={state.lam:.6e}, tightening the inner solve")
                self._bump(size_control_retries=1)
                sub = self._tighten(prob, state, cfg)
                state = sub.state
                extra_epochs += sub.epochs
                extra_updates += sub.coordinate_updates

    # ===============================
    # Path
    # ===============================

    def run(
        self,
        prob: Problem,
        policy: PathPolicy,
        cfg: Optional[InnerSolverConfig] = None,
        on_step: Optional[Callable[[StepRecord], None]] = None,
        record_masks: bool = False,
        dataset: Optional[str] = None,
        seed: Optional[int] = None,
    ) -> RunResult:
        cfg = cfg or InnerSolverConfig()
        lam, eps, clipped = self.resolve_targets(prob, policy)
        if policy.variant in (PolicyVariant.FASTPATH, PolicyVariant.SIMPLIFIED) and policy.r is not None:
            limit = prob.mu / prob.nu if policy.variant == PolicyVariant.FASTPATH else 1.0
            if not policy.r < limit:
                raise PolicyError(f"r={policy.r} must be below {limit}")

        lambda0 = max(prob.lambda_max, lam)
        logger.info(
            f"Path '{prob.name}' ({prob.n}x{prob.p}): {policy.describe()}, "
            f"lambda={lam:.6e} ({lam / lambda0:.3g} lambda_max), eps={eps:.3e}"
        )

        stepper = make_stepper(prob, policy, lam, eps)
        trace = PathTrace()
        certificates: List[StepCertificate] = []
        started = time.perf_counter_ns()

        state = dual_point(prob, np.zeros(prob.p), lambda0)
        stepper.start(state)
        states = [state]
        record = self._record(
            prob,
            state,
            0,
            lam,
            eps_t=None,
            epochs=0,
            updates=0,
            ws_size=0,
            active_size=len(safe_active_set(state, state.lam, prob)),
            wall=time.perf_counter_ns() - started,
            record_masks=record_masks,
        )
        trace.steps.append(record)
        if on_step:
            on_step(record)

        ws_floor: Optional[np.ndarray] = None
        ws_growths = 0
        error: Optional[str] = None
        t = 0

        while True:
            step_started = time.perf_counter_ns()
            plan, refined, extra_epochs, extra_updates = self._plan(stepper, prob, state, cfg, t)
            if plan is None:
                break
            if refined is not state:
                state = refined
                states[-1] = state
            if plan.lambda_next >= state.lam:
                raise PolicyError(
                    f"Policy made no progress at lambda_t={state.lam:.6e} (lambda_next={plan.lambda_next:.6e})"
                )
            if t >= settings.MAX_PATH_STEPS:
                error = f"path exceeded {settings.MAX_PATH_STEPS} steps"
                logger.error(f"Path budget exhausted: {error}")
                trace.terminated_by = TerminationReason.BUDGET_EXCEEDED
                break

            saturated = None
            screened = np.zeros(prob.p, dtype=bool)
            if cfg.sequential_screening:
                report = sequential_screen(prob, state, plan.lambda_next, lam)
                screened = report.screened.copy()
                _, saturated = screening_stop_criteria(report, state, plan.lambda_next, prob)

            # a working set that keeps missing features is dropped for one step
            floor = ws_floor if ws_growths <= settings.WORKING_SET_MAX_RETRIES else None
            try:
                outcome = self._advance(prob, state, plan, cfg, screened, floor)
            except BudgetExceededError as e:
                error = str(e)
                logger.error(f"Step {t + 1} at lambda={plan.lambda_next:.6e} exceeded its budget: {e}")
                self._bump(budget_exceeded=1, epochs=e.epochs)
                trace.terminated_by = TerminationReason.BUDGET_EXCEEDED
                break

            new = outcome.state
            t += 1
            if outcome.grow_working_set:
                ws_growths += 1
                target = 2 * max(outcome.working_set_size, 1)
                distances = feature_distances(prob, new.theta, new.xt_theta)
                order = np.lexsort((np.arange(prob.p), distances))
                ws_floor = order[: min(target, prob.p)]
                logger.debug(f"Working set missed active features, next floor has {len(ws_floor)} features")
            else:
                ws_growths = 0

            record = self._record(
                prob,
                new,
                t,
                lam,
                eps_t=plan.eps_t,
                epochs=outcome.epochs + extra_epochs,
                updates=outcome.updates + extra_updates,
                ws_size=outcome.working_set_size,
                active_size=outcome.active_set_size,
                wall=time.perf_counter_ns() - step_started,
                record_masks=record_masks,
                monotone=outcome.monotone,
                size_target=plan.size_target,
                saturated=saturated,
                retries=ws_growths,
            )
            trace.steps.append(record)
            certificates.append(self._certificate(prob, state, new, plan, lam, t))
            stepper.accepted(state, new, plan, t)
            logger.info(
                f"Step {t}: lambda={new.lam:.6e} gap={new.gap_local:.3e} "
                f"target_gap={record.gap_at_target:.3e} |A|={record.active_set_size} "
                f"|W|={record.working_set_size} epochs={record.inner_iterations}"
            )
            if on_step:
                on_step(record)
            state = new
            states.append(state)

        if trace.terminated_by is None:
            if state.lam <= lam:
                trace.terminated_by = TerminationReason.REACHED_LAMBDA
            else:
                trace.terminated_by = TerminationReason.TARGET_GAP_MET

        self._bump(
            runs=1,
            steps=trace.accepted_steps,
            epochs=trace.total_epochs,
            coordinate_updates=trace.total_updates,
        )
        logger.info(
            f"Path finished ({trace.terminated_by.value}): {trace.accepted_steps} steps, "
            f"{trace.total_epochs} epochs, target gap {trace.steps[-1].gap_at_target:.3e}"
        )

        meta = TraceMeta(
            policy=policy.describe(),
            r=self._meta_rate(prob, policy),
            eps=eps,
            lambda_=lam,
            dataset=dataset or prob.name,
            seed=seed,
            version=settings.VERSION,
            lambda_max=prob.lambda_max,
            requested_lambda=policy.target_lambda,
            requested_eps=policy.target_eps,
            clipped=clipped,
            terminated_by=trace.terminated_by,
        )
        return RunResult(
            final_state=state,
            trace=trace,
            certificates=certificates,
            meta=meta,
            grid_solutions=stepper.grid_solutions,
            grid_coefficients=stepper.grid_coefficients,
            states=states,
            error=error,
        )

    @staticmethod
    def _meta_rate(prob: Problem, policy: PathPolicy) -> Optional[float]:
        if policy.variant == PolicyVariant.FASTPATH or policy.refine == PolicyVariant.FASTPATH:
            return fastpath_rate(prob, policy)
        if policy.variant == PolicyVariant.SIMPLIFIED or policy.refine == PolicyVariant.SIMPLIFIED:
            return policy.effective_r
        if policy.variant == PolicyVariant.ADAPTIVE_R:
            return policy.effective_c
        return None

    @staticmethod
    def _record(
        prob: Problem,
        state: PrimalDualState,
        t: int,
        lam: float,
        eps_t: Optional[float],
        epochs: int,
        updates: int,
        ws_size: int,
        active_size: int,
        wall: int,
        record_masks: bool,
        monotone: bool = True,
        size_target: Optional[int] = None,
        saturated: Optional[bool] = None,
        retries: int = 0,
    ) -> StepRecord:
        return StepRecord(
            t=t,
            lambda_t=state.lam,
            eps_t=eps_t,
            inner_iterations=epochs,
            coordinate_updates=updates,
            gap_local=state.gap_local,
            gap_at_target=gap_at_lambda(prob, state, lam),
            e_t=estimation_term(state, lam) if lam <= state.lam else state.gap_local,
            delta_t=state.delta_t,
            active_set_size=active_size,
            working_set_size=ws_size,
            f_val=state.f_val,
            wall_nanoseconds=wall,
            monotone=monotone,
            size_target=size_target,
            screening_saturated=saturated,
            working_set_retries=retries,
            active_indices=[int(j) for j in state.support] if record_masks else None,
        )

    @staticmethod
    def _certificate(
        prob: Problem, prev: PrimalDualState, new: PrimalDualState, plan: StepPlan, lam: float, t: int
    ) -> StepCertificate:
        g_prev = gap_at_lambda(prob, prev, lam)
        g_new = gap_at_lambda(prob, new, lam)
        stopping = None
        if plan.e_prev is not None and plan.r is not None and plan.eps_t is not None:
            stopping = stopping_condition_fastpath(
                plan.e_prev, estimation_term(new, lam), plan.eps_t, plan.r
            )
        monotone = new.f_val <= prev.f_val
        return StepCertificate(
            t=t,
            progress_slack=stepwise_progress_certificate(prev, new, prob, lam),
            contraction=g_new / g_prev if g_prev > 0 else None,
            stopping_condition=stopping,
            residual_decrease=residual_decrease_holds(prev, new, prob) if monotone else None,
        )


# Global runner instance
path_runner = PathRunner()


def run_path(
    prob: Problem,
    policy: PathPolicy,
    cfg: Optional[InnerSolverConfig] = None,
    on_step: Optional[Callable[[StepRecord], None]] = None,
    record_masks: bool = False,
    dataset: Optional[str] = None,
    seed: Optional[int] = None,
) -> RunResult:
    """Run a certified continuation path from lambda_max to the policy target."""
    return path_runner.run(prob, policy, cfg, on_step, record_masks, dataset, seed)
