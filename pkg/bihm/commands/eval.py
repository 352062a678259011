"""The ``eval`` command."""
import argparse
import logging

from bihm.commands.train import read_data
from bihm.estimators import ESTIMATORS, ZEstimateConfig, est_log_z2, sweep_sample_counts
from bihm.fileio.checkpoints import load_checkpoint
from bihm.utils import checks
from bihm.utils.streams import make_stream

# train draws toy rows from seed and its validation rows from seed + 1
EVAL_SEED_OFFSET = 2


class EvalCommand:
    """Average log-likelihood estimate of a dataset under a checkpoint."""
    name = "eval"

    def __init__(self, app):
        self.app = app

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--model", required=True, help="Checkpoint to evaluate")
        parser.add_argument("--data", required=True, help="Dataset (.amat/.txt/.csv/.bbm or toy:N)")
        parser.add_argument("--k", help="Samples per datapoint; a comma list prints one row each (default from config)")
        parser.add_argument("--estimator", choices=ESTIMATORS, default="pstar", help="Quantity to estimate")
        parser.add_argument("--z-outer", type=int, help="Outer samples for log Z^2")
        parser.add_argument("--z-inner", type=int, help="Inner samples per outer sample")
        parser.add_argument("--seed", type=int, help="Random seed (default from config)")

    def run(self, args: argparse.Namespace) -> int:
        config = self.app.config
        seed = config.seed if args.seed is None else args.seed
        ks = checks.count_list(args.k if args.k is not None else config.eval_k, "--k")
        model = load_checkpoint(args.model).model
        data = read_data(args.data, seed + EVAL_SEED_OFFSET)
        rng = make_stream(seed)
        log_z2 = None
        if args.estimator == "pstar":
            z_config = ZEstimateConfig(args.z_outer if args.z_outer is not None else config.z_outer,
                                       args.z_inner if args.z_inner is not None else config.z_inner)
            log_z2 = est_log_z2(model, z_config, rng)
            logging.info("log Z^2 = %s", log_z2)
            print(f"two_log_z {log_z2.value:.6f} +- {log_z2.std_error:.6f}")
        for result in sweep_sample_counts(model, data, ks, args.estimator, rng, log_z2):
            print(f"log_{args.estimator} {result.mean:.6f} +- {result.std_error:.6f} "
                  f"ess_pct {result.ess_pct:.2f} rows {result.num_rows} k {result.num_samples} "
                  f"log_p {result.log_p_mean:.6f} +- {result.log_p_std_error:.6f} p_ess_pct {result.p_ess_pct:.2f}")
        return 0


def setup(app):
    """Setup function to add the command to the app."""
    app.add_command(EvalCommand(app), "Estimate the average log-likelihood of a dataset.")
