import numpy as np
import pytest

from contpath.continuation import max_grid_size
from contpath.models import PolicyVariant, TerminationReason
from contpath.path_runner import PathRunner, run_path
from contpath.problem import eval_primal, gap_at_lambda
from contpath.schemas import InnerSolverConfig, PathPolicy, SizeSchedule
from contpath.validation import random_problem

EPS = 1e-6


@pytest.fixture
def fastpath_run(small_synthetic):
    lam = small_synthetic.lambda_max / 20.0
    policy = PathPolicy.fastpath(lam, EPS)
    return small_synthetic, policy, run_path(small_synthetic, policy)


def test_target_at_lambda_max_needs_no_steps(small_synthetic):
    result = run_path(small_synthetic, PathPolicy.fastpath(small_synthetic.lambda_max, EPS))
    assert result.trace.accepted_steps == 0
    assert result.terminated_by == TerminationReason.REACHED_LAMBDA
    assert not result.final_state.beta.any()
    assert result.final_gap == pytest.approx(0.0, abs=1e-12)


def test_fastpath_reaches_target(fastpath_run):
    prob, policy, result = fastpath_run
    assert result.target_met
    assert result.final_gap <= EPS
    assert result.error is None
    lambdas = [s.lambda_t for s in result.trace.steps]
    assert all(b < a for a, b in zip(lambdas, lambdas[1:]))
    assert lambdas[0] == pytest.approx(prob.lambda_max)
    assert lambdas[-1] >= policy.target_lambda


@pytest.mark.parametrize("rel_eps", [1e-2, 1e-4, 1e-7])
def test_fastpath_gap_contracts_at_every_step(small_synthetic, rel_eps):
    eps = rel_eps * small_synthetic.f0
    policy = PathPolicy.fastpath(small_synthetic.lambda_max / 20.0, eps, r=0.42)
    result = run_path(small_synthetic, policy)
    assert result.target_met
    gaps = [s.gap_at_target for s in result.trace.steps]
    for g_prev, g_new in zip(gaps, gaps[1:]):
        assert g_new <= (1.0 - 0.42) * g_prev + 1e-12 * gaps[0]


def test_fastpath_objective_is_monotone(fastpath_run):
    _, _, result = fastpath_run
    f_vals = [s.f_val for s in result.trace.steps]
    assert all(b <= a for a, b in zip(f_vals, f_vals[1:]))
    assert all(s.monotone for s in result.trace.steps)


def test_fastpath_step_count_bound(fastpath_run):
    _, _, result = fastpath_run
    gap0 = result.trace.steps[0].gap_at_target
    assert result.trace.accepted_steps <= max_grid_size(gap0, EPS, result.meta.r) + 1


def test_fastpath_certificates(fastpath_run):
    _, _, result = fastpath_run
    gap0 = result.trace.steps[0].gap_at_target
    assert len(result.certificates) == result.trace.accepted_steps
    for cert in result.certificates:
        assert cert.progress_slack is not None
        assert cert.progress_slack >= -1e-9 * (1.0 + gap0)


def test_trace_gap_matches_states(fastpath_run):
    prob, _, result = fastpath_run
    lam = result.meta.lambda_
    for record, state in zip(result.trace.steps, result.states):
        assert record.lambda_t == state.lam
        assert record.gap_at_target == pytest.approx(gap_at_lambda(prob, state, lam), rel=1e-9, abs=1e-12)


def test_meta(fastpath_run):
    prob, _, result = fastpath_run
    meta = result.meta
    assert meta.policy.startswith("fastpath(")
    assert meta.r == pytest.approx(0.42)
    assert meta.lambda_max == pytest.approx(prob.lambda_max)
    assert not meta.clipped
    assert meta.terminated_by == result.terminated_by


@pytest.mark.parametrize(
    "make_policy",
    [
        lambda lam: PathPolicy.fastpath(lam, EPS),
        lambda lam: PathPolicy.fastpath(lam, EPS, eps_step=1e-8),
        lambda lam: PathPolicy.simplified(lam, EPS),
        lambda lam: PathPolicy.adaptive(lam, EPS),
        lambda lam: PathPolicy.geometric(lam, EPS, T=10),
        lambda lam: PathPolicy.geometric(lam, EPS, auto_T=True),
        lambda lam: PathPolicy.geometric(lam, EPS, ratio=0.5),
    ],
    ids=["fastpath", "fastpath-fixed-eps", "simplified", "adaptive", "geometric", "geometric-auto", "geometric-ratio"],
)
def test_every_policy_reaches_its_target(small_synthetic, make_policy):
    policy = make_policy(small_synthetic.lambda_max / 20.0)
    result = run_path(small_synthetic, policy)
    assert result.target_met
    assert result.final_gap <= EPS


@pytest.mark.parametrize("schedule", ["lars", "fixed:2", "targets:2,4,6"])
def test_active_set_policy_reaches_its_target(schedule):
    prob = random_problem(7, n_min=20, n_max=20, p_min=8, p_max=8)
    policy = PathPolicy.active_set(prob.lambda_max / 20.0, EPS, schedule=SizeSchedule.parse(schedule))
    result = run_path(prob, policy)
    assert result.target_met
    assert result.final_gap <= EPS
    assert any(s.size_target is not None for s in result.trace.steps)


def test_geometric_grid_solutions(small_synthetic):
    lam = small_synthetic.lambda_max / 20.0
    result = run_path(small_synthetic, PathPolicy.geometric(lam, EPS, T=5))
    grid = [g.lambda_grid for g in result.grid_solutions]
    assert len(grid) == 5
    np.testing.assert_allclose(grid, np.geomspace(small_synthetic.lambda_max, lam, 5), rtol=1e-12)
    for solution, beta in zip(result.grid_solutions, result.grid_coefficients):
        assert solution.gap <= EPS
        assert eval_primal(small_synthetic, beta, solution.lambda_grid) >= 0.0


def test_geometric_without_early_stop_solves_every_point(small_synthetic):
    lam = small_synthetic.lambda_max / 20.0
    result = run_path(small_synthetic, PathPolicy.geometric(lam, EPS, T=5, early_stop=False))
    assert result.trace.accepted_steps == 4
    assert [s.lambda_t for s in result.trace.steps][-1] == pytest.approx(lam)


def test_prescribed_grid_with_refinement(small_synthetic):
    lmax = small_synthetic.lambda_max
    grid = [0.8 * lmax, 0.3 * lmax, 0.05 * lmax]
    plain = run_path(small_synthetic, PathPolicy.prescribed(grid, EPS, early_stop=False))
    refined = run_path(
        small_synthetic,
        PathPolicy.prescribed(grid, EPS, refine=PolicyVariant.SIMPLIFIED, early_stop=False),
    )
    fast = run_path(small_synthetic, PathPolicy.prescribed(grid, EPS, refine=PolicyVariant.FASTPATH))
    for result in (plain, refined, fast):
        assert result.target_met
        assert [g.lambda_grid for g in result.grid_solutions] == pytest.approx(grid)
        assert all(g.gap <= EPS for g in result.grid_solutions)
    assert refined.trace.accepted_steps > plain.trace.accepted_steps


def test_runs_are_deterministic(small_synthetic):
    policy = PathPolicy.fastpath(small_synthetic.lambda_max / 20.0, EPS)
    first, second = run_path(small_synthetic, policy), run_path(small_synthetic, policy)
    for a, b in zip(first.trace.steps, second.trace.steps):
        assert a.model_dump(exclude={"wall_nanoseconds"}) == b.model_dump(exclude={"wall_nanoseconds"})
    np.testing.assert_array_equal(first.final_state.beta, second.final_state.beta)


@pytest.mark.parametrize("rule", ["pathwise_unsafe", "strong_rule", "gap_safe"])
def test_working_set_does_not_change_the_answer(small_synthetic, rule):
    lam = small_synthetic.lambda_max / 20.0
    policy = PathPolicy.fastpath(lam, EPS)
    without = run_path(small_synthetic, policy, InnerSolverConfig(working_set=False))
    with_ws = run_path(small_synthetic, policy, InnerSolverConfig(working_set_rule=rule))
    assert without.target_met and with_ws.target_met
    p_without = eval_primal(small_synthetic, without.final_state.beta, lam)
    p_with = eval_primal(small_synthetic, with_ws.final_state.beta, lam)
    assert abs(p_without - p_with) <= EPS


def test_screening_off_reaches_target(small_synthetic):
    cfg = InnerSolverConfig(dynamic_screening=False, sequential_screening=False, working_set=False)
    result = run_path(small_synthetic, PathPolicy.simplified(small_synthetic.lambda_max / 20.0, EPS), cfg)
    assert result.target_met
    assert all(s.screening_saturated is None for s in result.trace.steps)


def test_budget_exceeded_stops_the_path(small_synthetic):
    policy = PathPolicy.simplified(small_synthetic.lambda_max / 20.0, 1e-10, clip=False)
    cfg = InnerSolverConfig(max_epochs=1, gap_check_every=1)
    result = run_path(small_synthetic, policy, cfg)
    assert result.terminated_by == TerminationReason.BUDGET_EXCEEDED
    assert not result.target_met
    assert result.error


def test_on_step_sees_every_record(small_synthetic):
    seen = []
    result = run_path(small_synthetic, PathPolicy.geometric(small_synthetic.lambda_max / 10.0, EPS, T=4), on_step=seen.append)
    assert seen == result.trace.steps


def test_record_masks(small_synthetic):
    result = run_path(
        small_synthetic, PathPolicy.simplified(small_synthetic.lambda_max / 10.0, EPS), record_masks=True
    )
    for record, state in zip(result.trace.steps, result.states):
        assert record.active_indices == [int(j) for j in np.flatnonzero(state.beta)]
    unmasked = run_path(small_synthetic, PathPolicy.simplified(small_synthetic.lambda_max / 10.0, EPS))
    assert all(s.active_indices is None for s in unmasked.trace.steps)


def test_zero_targets_are_clipped(small_synthetic):
    result = run_path(small_synthetic, PathPolicy.geometric(0.0, 0.0, T=10))
    assert result.meta.clipped
    assert result.meta.lambda_ == pytest.approx(1e-3 * small_synthetic.lambda_max)
    assert result.meta.eps == pytest.approx(1e-8 * small_synthetic.f0)
    assert result.meta.requested_eps == 0.0


def test_positive_eps_below_the_floor_is_honored(small_synthetic):
    eps = 1e-10 * small_synthetic.f0
    result = run_path(small_synthetic, PathPolicy.fastpath(small_synthetic.lambda_max / 5.0, eps))
    assert not result.meta.clipped
    assert result.meta.eps == eps
    assert result.target_met
    assert result.final_gap <= eps


def test_runner_statistics(small_synthetic):
    runner = PathRunner()
    result = runner.run(small_synthetic, PathPolicy.simplified(small_synthetic.lambda_max / 10.0, EPS))
    stats = runner.get_stats()
    assert stats["runs"] == 1
    assert stats["steps"] == result.trace.accepted_steps
    assert stats["epochs"] == result.trace.total_epochs
