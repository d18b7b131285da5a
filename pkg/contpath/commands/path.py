"""
contpath - Path Command
Certified solutions on every point of a geometric or prescribed grid
"""

import logging

from ..data_io import load_dataset, write_path_csv
from ..exceptions import UsageError
from ..models import Command
from ..path_runner import run_path
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
from .solve import StepProgress, finish

# Configure logging
logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("path", help="certify every point of a regularization grid")
    add_common_args(parser)
    add_dataset_args(parser)
    add_target_args(parser)
    add_policy_args(parser, default_policy="geometric")
    add_solver_args(parser)
    add_output_args(parser, default_output="trace.json", path_csv=True)
    parser.set_defaults(handler=handle)


def handle(args) -> int:
    if args.policy not in ("geometric", "prescribed"):
        raise UsageError("path needs a grid policy: --policy geometric or --policy prescribed")
    prob = load_dataset(dataset_spec(args))
    config = build_config(args, Command.PATH, lambda_max=prob.lambda_max)

    # grid points are only skipped when they are already certified
    result = run_path(
        prob,
        config.policy,
        config.inner,
        on_step=StepProgress(),
        record_masks=config.record_masks,
        dataset=config.dataset.describe(),
        seed=config.seed,
    )
    logger.info(f"{len(result.grid_solutions)} grid points certified")
    code = finish(result, config.output)
    if result.target_met:
        write_path_csv(result, config.path_csv)
    return code
