"""
Shared fixtures: the 2x2 identity problem, random instances and oracle solves
"""

import numpy as np
import pytest

from contpath.data_io import generate_synthetic
from contpath.models import DesignMatrix, PrimalDualState, Problem
from contpath.problem import dual_point
from contpath.validation import oracle_solve, random_problem


@pytest.fixture
def toy():
    """X = I_2, y = (2, 0.5); lambda_max = 2, beta_hat(1) = (1, 0)."""
    return Problem(X=DesignMatrix.from_array(np.eye(2)), y=np.array([2.0, 0.5]), name="toy")


@pytest.fixture
def toy_exact(toy):
    """Exact solution at lambda = 1: theta = (1, 0.5), gap 0, Delta 0."""
    return dual_point(toy, np.array([1.0, 0.0]), 1.0)


@pytest.fixture
def make_problem():
    return random_problem


@pytest.fixture
def oracle():
    return oracle_solve


def synthetic_state(lam, alpha, zeta, gap=0.0, delta=0.0):
    """Bare state carrying only what the step rules read."""
    zeta = np.asarray(zeta, dtype=np.float64)
    theta = -zeta / lam
    return PrimalDualState(
        beta=np.zeros(1),
        theta=theta,
        alpha=alpha,
        zeta=zeta,
        lam=lam,
        gap_local=gap,
        delta_t=delta,
        f_val=0.0,
        primal=0.0,
        dual=0.0,
        residual=theta * alpha,
        xt_theta=np.zeros(1),
    )


@pytest.fixture
def make_state():
    return synthetic_state


@pytest.fixture
def small_synthetic():
    return generate_synthetic(40, 60, zero_frac=0.8, noise_sd=1.0, seed=0)
