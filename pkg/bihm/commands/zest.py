"""The ``zest`` command."""
import argparse

from bihm.estimators import sweep_log_z2
from bihm.fileio.checkpoints import load_checkpoint
from bihm.utils import checks
from bihm.utils.streams import make_stream


class ZestCommand:
    """Partition function estimate of a checkpoint."""
    name = "zest"

    def __init__(self, app):
        self.app = app

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--model", required=True, help="Checkpoint to evaluate")
        parser.add_argument("--k-outer", help="Samples (x, h) from p; a comma list sweeps them")
        parser.add_argument("--k-inner", help="Samples from q per outer sample; a comma list sweeps them")
        parser.add_argument("--seed", type=int, help="Random seed (default from config)")

    def run(self, args: argparse.Namespace) -> int:
        config = self.app.config
        outer = checks.count_list(args.k_outer if args.k_outer is not None else config.z_outer, "--k-outer")
        inner = checks.count_list(args.k_inner if args.k_inner is not None else config.z_inner, "--k-inner")
        model = load_checkpoint(args.model).model
        rng = make_stream(config.seed if args.seed is None else args.seed)
        for z_config, estimate in sweep_log_z2(model, outer, inner, rng):
            print(f"two_log_z {estimate.value:.6f} +- {estimate.std_error:.6f} "
                  f"bhattacharyya {-0.5 * estimate.value:.6f} k_outer {z_config.k_outer} k_inner {z_config.k_inner} "
                  f"samples {estimate.num_samples}")
        return 0


def setup(app):
    """Setup function to add the command to the app."""
    app.add_command(ZestCommand(app), "Estimate 2 log Z of a model.")
