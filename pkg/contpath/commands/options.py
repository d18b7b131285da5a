"""
contpath - Shared CLI Options
Flag groups shared by the commands and their mapping onto CliConfig
"""

import argparse
import logging
import re
from pathlib import Path
from typing import List, Optional, Union

from ..config import settings
from ..exceptions import DataError, UsageError
from ..models import Command, DatasetSource, PolicyVariant, SolverMethod, WorkingSetOrigin
from ..schemas import CliConfig, DatasetSpec, InnerSolverConfig, PathPolicy, SizeSchedule

# Configure logging
logger = logging.getLogger(__name__)

DEFAULT_LAMBDA_RATIO = 0.01
DEFAULT_EPS = 1e-6

# Every flag and the CliConfig field it sets
FLAG_FIELDS = {
    "--verbose": "verbosity",
    "--quiet": "verbosity",
    "--synthetic": "dataset.n, dataset.p",
    "--zero-frac": "dataset.zero_frac",
    "--noise-sd": "dataset.noise_sd",
    "--seed": "seed",
    "--csv": "dataset.path",
    "--target-col": "dataset.target_column",
    "--no-header": "dataset.csv_header",
    "--svmlight": "dataset.path",
    "--n-features": "dataset.n_features",
    "--normalize": "dataset.normalize_columns",
    "--lambda-ratio": "policy.target_lambda",
    "--lambda": "policy.target_lambda",
    "--eps": "policy.target_eps",
    "--policy": "policy.variant",
    "--r": "policy.r",
    "--c": "policy.c",
    "--eps-step": "policy.eps_step",
    "--T": "policy.T",
    "--ratio": "policy.ratio",
    "--grid-file": "policy.grid",
    "--refine": "policy.refine",
    "--size-schedule": "policy.schedule",
    "--no-clip": "policy.clip",
    "--no-early-stop": "policy.early_stop",
    "--solver": "inner.method",
    "--gap-check-every": "inner.gap_check_every",
    "--max-epochs": "inner.max_epochs",
    "--no-screening": "inner.dynamic_screening, inner.sequential_screening",
    "--no-working-set": "inner.working_set",
    "--working-set-rule": "inner.working_set_rule",
    "--no-monotone": "inner.enforce_monotone_f",
    "--output": "output",
    "--path-csv": "path_csv",
    "--record-masks": "record_masks",
    "--truth-output": "truth_output",
    "--policies": "bench_policies",
    "--bench-T": "bench_T",
    "--bench-eps": "bench_eps",
    "--threads": "threads",
    "--trials": "trials",
}


class CliParser(argparse.ArgumentParser):
    """Argument parser whose usage errors map to exit code 1"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ===============================
# Argument types
# ===============================


def shape_arg(text: str):
    match = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
    if not match:
        raise argparse.ArgumentTypeError(f"expected NxP, got '{text}'")
    return int(match.group(1)), int(match.group(2))


def grid_size_arg(text: str) -> Union[int, str]:
    if text.strip().lower() == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got '{text}'")


def int_list_arg(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def float_list_arg(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def name_list_arg(text: str) -> List[str]:
    names = [v.strip().lower() for v in text.split(",") if v.strip()]
    known = {v.value for v in PolicyVariant}
    unknown = [n for n in names if n not in known]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown policies {unknown}, expected some of {sorted(known)}")
    return names


# ===============================
# Flag groups
# ===============================


def add_common_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (DEBUG)")
    parser.add_argument("-q", "--quiet", action="count", default=0, help="less logging (WARNING)")
    parser.add_argument("--seed", type=int, default=0, help="random seed for synthetic data and suites")


def add_dataset_args(parser: argparse.ArgumentParser, synthetic_only: bool = False) -> None:
    group = parser.add_argument_group("dataset")
    sources = group.add_mutually_exclusive_group(required=True)
    sources.add_argument("--synthetic", type=shape_arg, metavar="NxP", help="Gaussian synthetic design")
    if not synthetic_only:
        sources.add_argument("--csv", metavar="PATH", help="dense CSV file")
        sources.add_argument("--svmlight", metavar="PATH", help="svmlight / libsvm file")
        group.add_argument("--n-features", type=int, help="svmlight column count (default: file header or largest index)")
        group.add_argument("--target-col", help="CSV target column (name or 0-based index)")
        group.add_argument("--no-header", action="store_true", help="CSV file has no header row")
        group.add_argument("--normalize", action="store_true", help="scale columns to unit norm")
    group.add_argument("--zero-frac", type=float, default=0.8, help="fraction of zero true coefficients")
    group.add_argument("--noise-sd", type=float, default=1.0, help="noise standard deviation")


def add_target_args(parser: argparse.ArgumentParser, with_eps: bool = True) -> None:
    group = parser.add_argument_group("targets")
    targets = group.add_mutually_exclusive_group()
    targets.add_argument("--lambda-ratio", type=float, help=f"target lambda / lambda_max (default {DEFAULT_LAMBDA_RATIO})")
    targets.add_argument("--lambda", dest="lambda_abs", type=float, help="absolute target lambda")
    if with_eps:
        group.add_argument("--eps", type=float, default=DEFAULT_EPS, help="target duality gap")


def add_policy_args(parser: argparse.ArgumentParser, default_policy: str) -> None:
    group = parser.add_argument_group("policy")
    group.add_argument(
        "--policy",
        choices=[v.value for v in PolicyVariant],
        default=default_policy,
        help=f"continuation policy (default {default_policy})",
    )
    group.add_argument("--r", type=float, help="linear rate for fastpath / simplified")
    group.add_argument("--c", type=float, help="adaptive rate factor")
    group.add_argument("--eps-step", type=float, help="fixed per-step fastpath tolerance")
    group.add_argument("--T", type=grid_size_arg, help="geometric grid size, or 'auto'")
    group.add_argument("--ratio", type=float, help="geometric grid ratio")
    group.add_argument("--grid-file", metavar="PATH", help="prescribed decreasing lambda grid")
    group.add_argument("--refine", choices=["simplified", "fastpath"], help="refine a prescribed grid")
    group.add_argument("--size-schedule", help="fixed:k, targets:p1,p2,... or lars")
    group.add_argument("--no-clip", action="store_true", help="do not clip the lambda floor or a non-positive eps")
    group.add_argument("--no-early-stop", action="store_true", help="visit every grid point")


def add_solver_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("inner solver")
    group.add_argument("--solver", choices=[m.value for m in SolverMethod], default=SolverMethod.CD.value)
    group.add_argument("--gap-check-every", type=int, default=settings.GAP_CHECK_EVERY)
    group.add_argument("--max-epochs", type=int, default=settings.MAX_EPOCHS)
    group.add_argument("--no-screening", action="store_true", help="disable gap-safe screening")
    group.add_argument("--no-working-set", action="store_true", help="solve on all features")
    group.add_argument(
        "--working-set-rule",
        choices=[WorkingSetOrigin.PATHWISE_UNSAFE.value, WorkingSetOrigin.GAP_SAFE.value, WorkingSetOrigin.STRONG_RULE.value],
        default=WorkingSetOrigin.PATHWISE_UNSAFE.value,
    )
    group.add_argument("--no-monotone", action="store_true", help="do not enforce monotone objective values")


def add_output_args(parser: argparse.ArgumentParser, default_output: str, path_csv: bool = False) -> None:
    group = parser.add_argument_group("output")
    group.add_argument("--output", default=default_output, help=f"output file (default {default_output})")
    if path_csv:
        group.add_argument("--path-csv", default="path.csv", help="plot-ready path CSV (default path.csv)")
    group.add_argument("--record-masks", action="store_true", help="store active indices in the trace")


# ===============================
# Config building
# ===============================


def verbosity(args) -> int:
    return getattr(args, "verbose", 0) - getattr(args, "quiet", 0)


def dataset_spec(args) -> DatasetSpec:
    if getattr(args, "n_features", None) is not None and not getattr(args, "svmlight", None):
        raise UsageError("--n-features only applies to --svmlight")
    if getattr(args, "synthetic", None):
        n, p = args.synthetic
        return DatasetSpec(
            source=DatasetSource.SYNTHETIC,
            n=n,
            p=p,
            zero_frac=args.zero_frac,
            noise_sd=args.noise_sd,
            seed=args.seed,
            normalize_columns=getattr(args, "normalize", False),
        )
    if getattr(args, "csv", None):
        if args.target_col is None:
            raise UsageError("--csv needs --target-col")
        return DatasetSpec(
            source=DatasetSource.CSV,
            path=args.csv,
            target_column=args.target_col,
            csv_header=not args.no_header,
            normalize_columns=args.normalize,
        )
    if getattr(args, "target_col", None) is not None:
        raise UsageError("--target-col only applies to --csv")
    return DatasetSpec(
        source=DatasetSource.SVMLIGHT,
        path=args.svmlight,
        n_features=args.n_features,
        normalize_columns=args.normalize,
    )


def inner_config(args) -> InnerSolverConfig:
    return InnerSolverConfig(
        method=SolverMethod(args.solver),
        gap_check_every=args.gap_check_every,
        max_epochs=args.max_epochs,
        dynamic_screening=not args.no_screening,
        sequential_screening=not args.no_screening,
        enforce_monotone_f=not args.no_monotone,
        working_set=not args.no_working_set,
        working_set_rule=WorkingSetOrigin(args.working_set_rule),
    )


def read_grid_file(path: str) -> List[float]:
    """Lambda values separated by whitespace, commas or newlines; '#' starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read grid file {path}: {e}")
    values = []
    for line in text.splitlines():
        for token in line.split("#", 1)[0].replace(",", " ").split():
            try:
                values.append(float(token))
            except ValueError:
                raise DataError(f"grid file {path} contains a non-numeric value '{token}'")
    if not values:
        raise DataError(f"grid file {path} is empty")
    return values


def _check_policy_flags(args, variant: PolicyVariant) -> None:
    if args.grid_file and variant != PolicyVariant.PRESCRIBED:
        raise UsageError("--grid-file only applies to --policy prescribed")
    if variant == PolicyVariant.PRESCRIBED and not args.grid_file:
        raise UsageError("--policy prescribed needs --grid-file")
    if variant == PolicyVariant.PRESCRIBED and (args.lambda_ratio is not None or args.lambda_abs is not None):
        raise UsageError("the target of a prescribed grid is its last point; drop --lambda / --lambda-ratio")
    if args.refine and variant != PolicyVariant.PRESCRIBED:
        raise UsageError("--refine only applies to --policy prescribed")
    if args.size_schedule and variant != PolicyVariant.ACTIVE_SET:
        raise UsageError("--size-schedule only applies to --policy active")
    if (args.T is not None or args.ratio is not None) and variant != PolicyVariant.GEOMETRIC:
        raise UsageError("--T and --ratio only apply to --policy geometric")
    if args.r is not None and variant not in (PolicyVariant.FASTPATH, PolicyVariant.SIMPLIFIED):
        if not (variant == PolicyVariant.PRESCRIBED and args.refine):
            raise UsageError("--r only applies to fastpath, simplified or a refined prescribed grid")
    if args.c is not None and variant != PolicyVariant.ADAPTIVE_R:
        raise UsageError("--c only applies to --policy adaptive")
    if args.eps_step is not None and variant not in (PolicyVariant.FASTPATH, PolicyVariant.ADAPTIVE_R):
        raise UsageError("--eps-step only applies to fastpath or adaptive")


def target_lambda(args, lambda_max: float) -> float:
    if args.lambda_abs is not None:
        return args.lambda_abs
    ratio = args.lambda_ratio if args.lambda_ratio is not None else DEFAULT_LAMBDA_RATIO
    return ratio * lambda_max


def path_policy(args, lambda_max: float) -> PathPolicy:
    """PathPolicy from the policy and target flags."""
    variant = PolicyVariant(args.policy)
    _check_policy_flags(args, variant)
    eps = args.eps
    grid_size = args.T

    common = dict(
        target_eps=eps,
        clip=not args.no_clip,
        early_stop=not args.no_early_stop,
    )
    if variant == PolicyVariant.PRESCRIBED:
        return PathPolicy.prescribed(
            read_grid_file(args.grid_file),
            refine=PolicyVariant(args.refine) if args.refine else None,
            r=args.r,
            **common,
        )

    lam = target_lambda(args, lambda_max)
    if variant == PolicyVariant.GEOMETRIC:
        return PathPolicy.geometric(
            lam,
            T=None if grid_size in (None, "auto") else grid_size,
            auto_T=grid_size == "auto",
            ratio=args.ratio,
            **common,
        )
    if variant == PolicyVariant.ACTIVE_SET:
        try:
            schedule = SizeSchedule.parse(args.size_schedule) if args.size_schedule else SizeSchedule()
        except ValueError as e:
            raise UsageError(str(e))
        return PathPolicy.active_set(lam, schedule=schedule, **common)
    if variant == PolicyVariant.ADAPTIVE_R:
        return PathPolicy.adaptive(lam, c=args.c, eps_step=args.eps_step, **common)
    if variant == PolicyVariant.SIMPLIFIED:
        return PathPolicy.simplified(lam, r=args.r, **common)
    return PathPolicy.fastpath(lam, r=args.r, eps_step=args.eps_step, **common)


def build_config(args, command: Command, lambda_max: Optional[float] = None) -> CliConfig:
    """Validated CliConfig; the policy needs lambda_max since targets are ratios of it."""
    dataset = dataset_spec(args) if hasattr(args, "synthetic") else None
    policy = None
    if lambda_max is not None and hasattr(args, "policy"):
        policy = path_policy(args, lambda_max)
    fields = dict(
        command=command,
        dataset=dataset,
        policy=policy,
        verbosity=verbosity(args),
        seed=args.seed,
    )
    if hasattr(args, "solver"):
        fields["inner"] = inner_config(args)
    for name in ("output", "path_csv", "truth_output", "record_masks", "threads", "trials"):
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    for name, attr in (("bench_policies", "policies"), ("bench_T", "bench_T"), ("bench_eps", "bench_eps")):
        value = getattr(args, attr, None)
        if value is not None:
            fields[name] = value
    return CliConfig(**fields)
