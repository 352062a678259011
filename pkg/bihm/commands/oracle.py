"""The ``oracle`` command."""
import argparse
import csv
import sys

from bihm.errors import ArgumentError
from bihm.fileio.checkpoints import load_checkpoint
from bihm.model import random_model
from bihm.oracle import EnumLimit, build_report
from bihm.utils import checks
from bihm.utils.streams import make_stream
from bihm.verification import SUITES, run_checks

CHECKS = ("all",) + tuple(SUITES)


class OracleCommand:
    """Exact enumeration of a small model, or the oracle-backed check suites."""
    name = "oracle"

    def __init__(self, app):
        self.app = app

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--dims", help="Layer sizes of a random model, visible first (e.g. 4,3,2)")
        parser.add_argument("--model", help="Checkpoint to enumerate instead of a random model")
        parser.add_argument("--scale", type=float, default=1.0, help="Parameter scale of the random model")
        parser.add_argument("--seed", type=int, help="Random seed (default from config)")
        parser.add_argument("--checks", choices=CHECKS, nargs="+", help="Run check suites instead of a report")
        parser.add_argument("--k", type=int, default=100000, help="Samples used by the estimator checks")

    def run(self, args: argparse.Namespace) -> int:
        seed = self.app.config.seed if args.seed is None else args.seed
        if args.checks:
            results = run_checks(args.checks, seed=seed, k=checks.positive(args.k, "k"))
            for result in results:
                print(f"{'PASS' if result.passed else 'FAIL'} {result.name}: {result.detail}")
            failed = sum(not r.passed for r in results)
            print(f"{len(results) - failed}/{len(results)} checks passed")
            return 1 if failed else 0

        if args.model:
            model = load_checkpoint(args.model).model
        elif args.dims:
            model = random_model(checks.layer_list(args.dims), make_stream(seed), args.scale)
        else:
            raise ArgumentError("oracle needs --dims, --model or --checks")
        limit = EnumLimit(max_total_bits=self.app.config.enum_max_bits)
        csv.writer(sys.stdout, lineterminator="\n").writerows(build_report(model, limit=limit).to_rows())
        return 0


def setup(app):
    """Setup function to add the command to the app."""
    app.add_command(OracleCommand(app), "Exact quantities of a small model and oracle-backed checks.")
