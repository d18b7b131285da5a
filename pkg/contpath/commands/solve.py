"""
contpath - Solve Command
Single certified solve at a target (lambda, eps)
"""

import logging

from ..config import EXIT_CODES
from ..data_io import load_dataset, write_trace
from ..models import Command
from ..path_runner import RunResult, run_path
from ..schemas import StepRecord
from .options import (
    add_common_args,
    add_dataset_args,
    add_output_args,
    add_policy_args,
    add_solver_args,
    add_target_args,
    build_config,
    dataset_spec,
)

# Configure logging
logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("solve", help="solve the Lasso at one target with a certified path")
    add_common_args(parser)
    add_dataset_args(parser)
    add_target_args(parser)
    add_policy_args(parser, default_policy="fastpath")
    add_solver_args(parser)
    add_output_args(parser, default_output="trace.json")
    parser.set_defaults(handler=handle)


class StepProgress:
    """on_step callback keeping running totals for debug output"""

    def __init__(self):
        self.epochs = 0
        self.updates = 0

    def __call__(self, record: StepRecord) -> None:
        self.epochs += record.inner_iterations
        self.updates += record.coordinate_updates
        logger.debug(
            f"[{record.t}] lambda={record.lambda_t:.4e} target_gap={record.gap_at_target:.3e} "
            f"total_epochs={self.epochs} total_updates={self.updates}"
        )


def summary_line(result: RunResult) -> str:
    trace = result.trace
    return (
        f"lambda={result.final_state.lam:.6g} gap={result.final_gap:.6g} "
        f"steps={trace.accepted_steps} epochs={trace.total_epochs} "
        f"time_ms={int(round(trace.wall_nanoseconds / 1e6))}"
    )


def finish(result: RunResult, output: str) -> int:
    """Print the summary; write the trace only when the target was certified."""
    print(summary_line(result))
    if not result.target_met:
        logger.error(f"Target not certified ({result.terminated_by.value}): {result.error}")
        return EXIT_CODES["budget"]
    write_trace(result, output)
    return EXIT_CODES["success"]


def handle(args) -> int:
    prob = load_dataset(dataset_spec(args))
    config = build_config(args, Command.SOLVE, lambda_max=prob.lambda_max)
    result = run_path(
        prob,
        config.policy,
        config.inner,
        on_step=StepProgress(),
        record_masks=config.record_masks,
        dataset=config.dataset.describe(),
        seed=config.seed,
    )
    return finish(result, config.output)
