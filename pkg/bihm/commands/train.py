"""The ``train`` command."""
import argparse
import logging

import numpy as np

from bihm.config import constants
from bihm.errors import ArgumentError
from bihm.fileio.checkpoints import save_checkpoint
from bihm.fileio.datasets import bars_and_stripes, load_dataset
from bihm.fileio.metrics import append_metrics
from bihm.model import BihmModel
from bihm.training import EpochMetrics, TrainConfig, init_model, train
from bihm.utils import checks
from bihm.utils.streams import make_stream


def read_data(source: str, seed: int) -> np.ndarray:
    """Loads a dataset file, or generates ``toy:N`` bars-and-stripes rows."""
    if source.startswith("toy:"):
        try:
            rows = int(source[4:])
        except ValueError as err:
            raise ArgumentError(f"toy dataset needs a row count, got {source!r}") from err
        return bars_and_stripes(checks.positive(rows, "toy rows"), make_stream(seed)).to_array()
    return load_dataset(source).to_array()


class TrainCommand:
    """Trains a model and writes its checkpoint and metrics."""
    name = "train"

    def __init__(self, app):
        self.app = app

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--data", required=True, help="Training set (.amat/.txt/.csv/.bbm or toy:N)")
        parser.add_argument("--valid", help="Validation set, same formats")
        parser.add_argument("--layers", default="300,200,100", help="Latent layer sizes, bottom first")
        parser.add_argument("--k", type=int, default=constants.DEFAULT_K_TRAIN, help="Samples per datapoint")
        parser.add_argument("--lr", type=float, default=constants.DEFAULT_LEARNING_RATE, help="Adam step size")
        parser.add_argument("--batch", type=int, default=constants.DEFAULT_BATCH_SIZE, help="Minibatch size")
        parser.add_argument("--epochs", type=int, default=100, help="Epochs of the main phase")
        parser.add_argument("--l1", type=float, default=constants.DEFAULT_L1_LAMBDA, help="L1 weight penalty")
        parser.add_argument("--seed", type=int, help="Random seed (default from config)")
        parser.add_argument("--out", required=True, help="Checkpoint path, rewritten after every epoch")
        parser.add_argument("--metrics", help="CSV file receiving one row per epoch")
        parser.add_argument("--track-logp", action="store_true", help="Add log p and log p* metrics columns")
        parser.add_argument("--finetune-k", type=int, help="Samples per datapoint in the fine-tune phase")
        parser.add_argument("--finetune-lr", type=float, help="Step size in the fine-tune phase")
        parser.add_argument("--finetune-epochs", type=int, default=0, help="Epochs of the fine-tune phase")
        parser.add_argument("--patience", type=int, help="Stop a phase after this many epochs without improvement")

    def run(self, args: argparse.Namespace) -> int:
        """Runs training and reports the final estimates."""
        seed = self.app.config.seed if args.seed is None else args.seed
        data = read_data(args.data, seed)
        valid = read_data(args.valid, seed + 1) if args.valid else None
        sizes = [data.shape[1]] + checks.layer_list(args.layers)
        config = TrainConfig(k_train=args.k, learning_rate=args.lr, batch_size=args.batch, l1_lambda=args.l1,
                             epochs=args.epochs, seed=seed, finetune_k=args.finetune_k,
                             finetune_learning_rate=args.finetune_lr, finetune_epochs=args.finetune_epochs,
                             patience=args.patience, z_every=self.app.config.z_every,
                             z_outer=self.app.config.z_outer, z_inner=self.app.config.z_inner)
        echo = {
            "layers": ",".join(str(s) for s in sizes),
            "k": str(args.k),
            "lr": repr(args.lr),
            "batch": str(args.batch),
            "l1": repr(args.l1),
            "seed": str(seed),
            "data": args.data,
        }

        def checkpoint(metrics: EpochMetrics, model: BihmModel) -> None:
            snapshot = {key: repr(value) for key, value in metrics.__dict__.items()}
            save_checkpoint(model, {**echo, **snapshot}, args.out)

        callbacks = [checkpoint]
        if args.metrics:
            header = constants.TRACKED_METRICS_HEADER if args.track_logp else constants.METRICS_HEADER
            callbacks.insert(0, lambda metrics, _: append_metrics(args.metrics, metrics, header))
        logging.info("Training layers %s on %d rows", sizes, data.shape[0])
        result = train(init_model(sizes, seed), data, config, valid, callbacks)
        last = result.history[-1]
        print(f"epochs {last.epoch} updates {last.updates} train_logptilde {last.train_logptilde:.4f} "
              f"valid_logptilde {last.valid_logptilde:.4f} two_log_z {last.two_log_z:.4f}")
        return 0


def setup(app):
    """Setup function to add the command to the app."""
    app.add_command(TrainCommand(app), "Train a model with importance-sampled gradients.")
