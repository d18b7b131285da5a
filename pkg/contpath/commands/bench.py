"""
contpath - Bench Command
Policies x screening on/off x grid sizes x accuracies, reported as CSV
"""

import logging
from typing import List, Optional

from ..config import EXIT_CODES, settings
from ..continuation import clip_targets, geometric_grid
from ..data_io import load_dataset, write_bench_report
from ..models import Command, PolicyVariant, Problem, TerminationReason
from ..schemas import CliConfig, PathPolicy
from ..worker import BenchTask, run_bench
from .options import (
    add_common_args,
    add_dataset_args,
    add_solver_args,
    add_target_args,
    build_config,
    dataset_spec,
    float_list_arg,
    int_list_arg,
    name_list_arg,
    target_lambda,
)

# Configure logging
logger = logging.getLogger(__name__)

COMPLETED = {TerminationReason.REACHED_LAMBDA.value, TerminationReason.TARGET_GAP_MET.value}


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("bench", help="compare policies and screening configurations")
    add_common_args(parser)
    add_dataset_args(parser)
    add_target_args(parser, with_eps=False)
    add_solver_args(parser)
    group = parser.add_argument_group("bench")
    group.add_argument("--policies", type=name_list_arg, help="comma-separated policies (default geometric)")
    group.add_argument("--bench-T", type=int_list_arg, help="grid sizes for grid policies (default 10,100)")
    group.add_argument("--bench-eps", type=float_list_arg, help="target gaps (default 1e-2,1e-4,1e-6,1e-8)")
    group.add_argument("--threads", type=int, help="parallel rows (default CONTPATH_THREADS)")
    group.add_argument("--output", default="bench.csv", help="CSV report (default bench.csv)")
    parser.set_defaults(handler=handle)


def bench_policy(name: str, prob: Problem, lam: float, eps: float, T: Optional[int]) -> PathPolicy:
    """Default-parameter policy for one bench row; prescribed rows use a geometric grid."""
    variant = PolicyVariant(name)
    if variant == PolicyVariant.GEOMETRIC:
        return PathPolicy.geometric(lam, eps, T=T)
    if variant == PolicyVariant.PRESCRIBED:
        lam, _ = clip_targets(lam, eps, prob.lambda_max, prob.f0, settings.LAMBDA_CLIP_RATIO, settings.EPS_CLIP_RATIO)
        grid = [float(g) for g in geometric_grid(prob.lambda_max, lam, T=T)]
        return PathPolicy.prescribed(grid, eps)
    if variant == PolicyVariant.ADAPTIVE_R:
        return PathPolicy.adaptive(lam, eps)
    if variant == PolicyVariant.SIMPLIFIED:
        return PathPolicy.simplified(lam, eps)
    if variant == PolicyVariant.ACTIVE_SET:
        return PathPolicy.active_set(lam, eps)
    return PathPolicy.fastpath(lam, eps)


def bench_tasks(config: CliConfig, prob: Problem, lam: float) -> List[BenchTask]:
    """Cross product in a fixed order: policy, T, eps, then screening on before off."""
    tasks = []
    for name in config.bench_policies:
        grid_sizes = config.bench_T if name in ("geometric", "prescribed") else [None]
        for T in grid_sizes:
            for eps in config.bench_eps:
                policy = bench_policy(name, prob, lam, eps, T)
                for screening in (True, False):
                    inner = config.inner.model_copy(
                        update={
                            "dynamic_screening": screening,
                            "sequential_screening": screening,
                            "working_set": screening,
                        }
                    )
                    tasks.append(BenchTask(label=name, policy=policy, inner=inner, T=T))
    return tasks


def handle(args) -> int:
    """Exit 0 when every row completes; otherwise the report is still written and the exit is 2."""
    prob = load_dataset(dataset_spec(args))
    config = build_config(args, Command.BENCH)
    tasks = bench_tasks(config, prob, target_lambda(args, prob.lambda_max))
    rows = run_bench(prob, tasks, threads=config.threads)

    frame = write_bench_report(rows, config.output)
    print(frame.to_string(index=False))

    failed = [row for row in rows if row.status not in COMPLETED]
    if failed:
        logger.error(f"{len(failed)} of {len(rows)} bench rows did not complete")
        return EXIT_CODES["budget"]
    return EXIT_CODES["success"]
