"""
contpath - Synth Command
Writes a synthetic dataset as svmlight plus its ground truth
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from ..config import EXIT_CODES
from ..data_io import dump_svmlight, generate_synthetic
from ..models import Command
from .options import add_common_args, add_dataset_args, build_config

# Configure logging
logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("synth", help="write a synthetic svmlight dataset")
    add_common_args(parser)
    add_dataset_args(parser, synthetic_only=True)
    group = parser.add_argument_group("output")
    group.add_argument("--output", default="synthetic.svm", help="svmlight file (default synthetic.svm)")
    group.add_argument("--truth-output", help="ground-truth coefficients CSV (default <output>.truth.csv)")
    parser.set_defaults(handler=handle)


def handle(args) -> int:
    config = build_config(args, Command.SYNTH)
    spec = config.dataset
    prob, beta_star = generate_synthetic(
        spec.n, spec.p, spec.zero_frac, spec.noise_sd, spec.seed, return_truth=True
    )
    dump_svmlight(config.output, prob.X, prob.y)

    truth_path = config.truth_output or str(Path(config.output).with_suffix(".truth.csv"))
    pd.DataFrame({"beta": beta_star}).to_csv(truth_path, index_label="feature", float_format="%.17g")
    logger.info(f"Ground truth with {int(np.count_nonzero(beta_star))} nonzeros written to {truth_path}")

    print(
        f"n={prob.n} p={prob.p} nnz={int(np.count_nonzero(beta_star))} "
        f"lambda_max={prob.lambda_max:.6g} output={config.output} truth={truth_path}"
    )
    return EXIT_CODES["success"]
