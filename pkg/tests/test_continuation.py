import math

import numpy as np
import pytest

from contpath.continuation import (
    adaptive_r,
    check_grid,
    clip_targets,
    default_eps_fastpath,
    estimation_term,
    fastpath_radicand,
    geometric_grid,
    max_grid_size,
    next_lambda_fastpath,
    next_lambda_simplified,
    prescribed_grid_refine,
    residual_decrease_holds,
    simplified_tolerance,
    stepwise_progress_certificate,
    stopping_condition_fastpath,
    warm_start_bound,
)
from contpath.exceptions import GridOrderError, InvalidArgumentError, PolicyError
from contpath.models import DesignMatrix, PolicyVariant, Problem
from contpath.problem import dual_point
from contpath.schemas import PathPolicy
from contpath.validation import check_warm_start


@pytest.fixture
def unit_problem():
    return Problem(X=DesignMatrix.from_array(np.eye(1)), y=np.ones(1))


# ===============================
# Warm-start bounds
# ===============================


def test_warm_start_bound_collapses_at_lambda_t(toy):
    state = dual_point(toy, np.array([0.5, 0.0]), 1.0)
    bound = warm_start_bound(state, 1.0, toy)
    assert bound.e_t == pytest.approx(state.gap_local)
    assert bound.v_mu == 0.0 and bound.v_nu == 0.0
    assert bound.gap_at_target == pytest.approx(state.gap_local, abs=1e-12)


def test_warm_start_bound_is_exact_for_exact_solutions(toy, toy_exact):
    bound = warm_start_bound(toy_exact, 0.5, toy)
    expected = 0.5 * toy_exact.zeta_norm_sq * (1.0 - 0.5) ** 2
    assert bound.gap_at_target == pytest.approx(expected, rel=1e-12)
    assert bound.gap_at_target == pytest.approx(0.15625)
    assert bound.deviation == pytest.approx(bound.v_mu, abs=1e-12)


def test_warm_start_bound_rejects_increasing_lambda(toy, toy_exact):
    with pytest.raises(InvalidArgumentError):
        warm_start_bound(toy_exact, 1.5, toy)


@pytest.mark.parametrize("seed", range(30))
def test_warm_start_sandwich(seed):
    assert check_warm_start(seed) == []


def test_estimation_term(toy_exact):
    assert estimation_term(toy_exact, 1.0) == pytest.approx(toy_exact.gap_local)


# ===============================
# FastPath
# ===============================


def test_fastpath_step_arithmetic(unit_problem, make_state):
    state = make_state(lam=2.0, alpha=2.0, zeta=[1.0])
    assert next_lambda_fastpath(state, 0.75, 0.0, unit_problem, 1.0) == pytest.approx(4.0 / 3.0)


def test_fastpath_without_tolerance_makes_no_progress(unit_problem, make_state):
    state = make_state(lam=2.0, alpha=2.0, zeta=[1.0])
    assert next_lambda_fastpath(state, 0.0, 0.0, unit_problem, 1.0) == pytest.approx(2.0)


def test_fastpath_negative_radicand(unit_problem, make_state):
    state = make_state(lam=2.0, alpha=2.0, zeta=[1.0])
    assert fastpath_radicand(state, 0.42, 10.0, unit_problem, 1.0) < 0
    with pytest.raises(PolicyError):
        next_lambda_fastpath(state, 0.42, 10.0, unit_problem, 1.0)


def test_fastpath_rate_must_stay_below_mu_over_nu(unit_problem, make_state):
    state = make_state(lam=2.0, alpha=2.0, zeta=[1.0])
    with pytest.raises(PolicyError):
        next_lambda_fastpath(state, 1.0, 0.0, unit_problem, 1.0)


def test_fastpath_perfect_fit_jumps_to_target(unit_problem, make_state):
    state = make_state(lam=2.0, alpha=2.0, zeta=[0.0])
    assert next_lambda_fastpath(state, 0.42, 0.0, unit_problem, 1.0) == 1.0


def test_default_eps_fastpath(unit_problem, make_state):
    state = make_state(lam=2.0, alpha=2.0, zeta=[1.0, 1.0])
    assert default_eps_fastpath(state, 0.42, unit_problem, 1.0) == pytest.approx(0.42 * 1.0 * 0.58 * 0.25)
    assert default_eps_fastpath(state, 0.42, unit_problem, 2.0) == 0.0


@pytest.mark.parametrize("r", [0.0, 0.1, 0.42, 0.9])
@pytest.mark.parametrize("rho", [0.01, 0.3, 0.99])
def test_default_eps_keeps_radicand_nonnegative(unit_problem, make_state, r, rho):
    state = make_state(lam=1.0, alpha=1.7, zeta=[0.3, -2.0])
    eps_t = default_eps_fastpath(state, r, unit_problem, rho)
    assert fastpath_radicand(state, r, eps_t, unit_problem, rho) >= 0.0


def test_stopping_condition_boundary():
    assert stopping_condition_fastpath(1.0, 0.5, 0.0, 0.5)
    assert not stopping_condition_fastpath(1.0, 0.5 + 1e-9, 0.0, 0.5)


# ===============================
# Simplified policies
# ===============================


def test_next_lambda_simplified():
    assert next_lambda_simplified(2.0, 1.0, 0.75) == pytest.approx(4.0 / 3.0)
    assert next_lambda_simplified(2.0, 1.0, 0.0) == pytest.approx(2.0)
    assert next_lambda_simplified(1.0, 1.0, 0.5) == 1.0


def test_simplified_sequence_contracts_geometrically():
    lam, lam_t, r = 0.01, 1.0, 0.3
    previous = (1.0 - lam / lam_t) ** 2
    for _ in range(10):
        lam_t = next_lambda_simplified(lam_t, lam, r)
        current = (1.0 - lam / lam_t) ** 2
        assert current == pytest.approx((1.0 - r) * previous, rel=1e-9)
        previous = current


def test_simplified_tolerance():
    assert simplified_tolerance(1.0, 1.0, 1e-6) == 1e-6
    assert simplified_tolerance(10.0, 1.0, 1e-6) == pytest.approx(1e-5)
    with pytest.raises(InvalidArgumentError):
        simplified_tolerance(0.5, 1.0, 1e-6)


def test_adaptive_r(unit_problem):
    assert adaptive_r(unit_problem, 1.0, 1.0) == pytest.approx(1.0)
    assert adaptive_r(unit_problem, 2.0, 1.0) == pytest.approx(0.5)
    rates = [adaptive_r(unit_problem, lam_t, 0.1) for lam_t in (1.0, 0.5, 0.2, 0.1)]
    assert rates == sorted(rates)


def test_clip_targets():
    assert clip_targets(0.0, 1.0, 1.0, 1.0)[0] == pytest.approx(1e-3)
    assert clip_targets(0.5, 1.0, 1.0, 1.0) == (0.5, 1.0)
    assert clip_targets(0.5, 0.0, 1.0, 2.0)[1] == pytest.approx(2e-8)


def test_max_grid_size():
    assert max_grid_size(1.0, 1.0, 0.5) == 0
    assert max_grid_size(1.0, 1e-4, 0.5) == 14
    with pytest.raises(InvalidArgumentError):
        max_grid_size(1.0, 1e-4, 1.0)


# ===============================
# Certificates
# ===============================


def test_progress_certificate_identical_states(toy, toy_exact):
    slack = stepwise_progress_certificate(toy_exact, toy_exact, toy, 0.5)
    assert slack == pytest.approx(0.0, abs=1e-12)


def test_progress_certificate_inapplicable_when_f_increases(toy, toy_exact):
    worse = dual_point(toy, np.zeros(2), 0.9)
    assert worse.f_val > toy_exact.f_val
    assert stepwise_progress_certificate(toy_exact, worse, toy, 0.5) is None


def test_progress_certificate_between_exact_solutions(toy, toy_exact):
    # exact solution at 0.8 is soft-thresholding: beta = (1.2, 0)
    nxt = dual_point(toy, np.array([1.2, 0.0]), 0.8)
    assert stepwise_progress_certificate(toy_exact, nxt, toy, 0.5) >= -1e-12
    assert residual_decrease_holds(toy_exact, nxt, toy)


# ===============================
# Grids
# ===============================


def test_check_grid():
    assert check_grid([3, 2, 1]) == [3.0, 2.0, 1.0]
    with pytest.raises(GridOrderError):
        check_grid([1.0, 2.0])
    with pytest.raises(InvalidArgumentError):
        check_grid([])


def test_refine_singleton_and_dense_grids():
    single = PathPolicy.prescribed([1.0], 1e-6, refine=PolicyVariant.SIMPLIFIED, r=0.5)
    assert prescribed_grid_refine([1.0], single) == [(1.0, 1e-6, True)]

    grid = [1.0, 0.99, 0.98]
    dense = PathPolicy.prescribed(grid, 1e-6, refine=PolicyVariant.SIMPLIFIED, r=0.5)
    assert [p[0] for p in prescribed_grid_refine(grid, dense)] == grid


def test_refine_inserts_simplified_points():
    grid = [1.0, 0.01]
    policy = PathPolicy.prescribed(grid, 1e-6, refine=PolicyVariant.SIMPLIFIED, r=0.5)
    points = prescribed_grid_refine(grid, policy)
    inserted = [p for p in points if not p[2]]
    assert len(inserted) > 1
    assert points[0] == (1.0, 1e-6, True) and points[-1] == (0.01, 1e-6, True)

    lambdas = [p[0] for p in points[:-1]]
    for a, b in zip(lambdas, lambdas[1:]):
        assert (1.0 - 0.01 / b) ** 2 == pytest.approx(0.5 * (1.0 - 0.01 / a) ** 2, rel=1e-9)
    for lam, eps, _ in inserted:
        assert eps == pytest.approx(lam / 0.01 * 1e-6)


def test_refine_fastpath_keeps_grid():
    grid = [1.0, 0.1, 0.01]
    policy = PathPolicy.prescribed(grid, 1e-6, refine=PolicyVariant.FASTPATH)
    assert [p[0] for p in prescribed_grid_refine(grid, policy)] == grid


def test_geometric_grid():
    grid = geometric_grid(1.0, 0.01, T=5)
    assert grid[0] == 1.0 and grid[-1] == 0.01
    ratios = grid[1:] / grid[:-1]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)
    assert ratios[0] == pytest.approx(0.01 ** 0.25)

    by_ratio = geometric_grid(1.0, 0.01, ratio=0.5)
    assert by_ratio[-1] == 0.01
    assert np.all(np.diff(by_ratio) < 0)
    assert len(by_ratio) == int(math.floor(math.log(0.01) / math.log(0.5))) + 2
    assert list(geometric_grid(1.0, 2.0, T=5)) == [2.0]
