"""The ``sample`` command."""
import argparse
import logging
import pathlib

from bihm.fileio.checkpoints import load_checkpoint
from bihm.fileio.images import square_side, write_pgm
from bihm.model import sample_p
from bihm.sampling import GibbsConfig, GibbsState, expected_visible, gibbs_sample
from bihm.utils import checks
from bihm.utils.streams import make_stream


def image_geometry(args: argparse.Namespace, num_pixels: int) -> tuple[int, int]:
    """Width and height from the flags, or a square when neither is given."""
    if args.width is None and args.height is None:
        side = square_side(num_pixels)
        return side, side
    width = checks.positive(args.width, "width") if args.width is not None else None
    height = checks.positive(args.height, "height") if args.height is not None else None
    return width or num_pixels // height, height or num_pixels // width


def write_images(images, out_dir: pathlib.Path, stem: str, width: int, height: int) -> None:
    """Writes one PGM per row of ``images`` as ``<stem>_NNNN.pgm``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, image in enumerate(images):
        write_pgm(image, width, height, out_dir / f"{stem}_{i:04d}.pgm")
    logging.info("Wrote %d images to %s", len(images), out_dir)


class SampleCommand:
    """Draws samples from a checkpoint and writes them as images."""
    name = "sample"

    def __init__(self, app):
        self.app = app

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--model", required=True, help="Checkpoint to sample from")
        parser.add_argument("--count", type=int, default=100, help="Number of samples")
        parser.add_argument("--gibbs", type=int, default=0, help="Gibbs sweeps; 0 samples p ancestrally")
        parser.add_argument("--prop-k", type=int, help="Proposals per resampling step (default from config)")
        render = parser.add_mutually_exclusive_group()
        render.add_argument("--expected", dest="binary", action="store_false", help="Write pixel means (default)")
        render.add_argument("--binary", dest="binary", action="store_true", help="Write the sampled bits")
        parser.add_argument("--out", required=True, help="Output directory")
        parser.add_argument("--width", type=int, help="Image width")
        parser.add_argument("--height", type=int, help="Image height")
        parser.add_argument("--seed", type=int, help="Random seed (default from config)")

    def run(self, args: argparse.Namespace) -> int:
        config = self.app.config
        model = load_checkpoint(args.model).model
        count = checks.positive(args.count, "count")
        width, height = image_geometry(args, model.visible_dim)
        rng = make_stream(config.seed if args.seed is None else args.seed)
        if args.gibbs:
            prop_k = args.prop_k if args.prop_k is not None else config.proposals_per_step
            gibbs = GibbsConfig(num_sweeps=args.gibbs, proposals_per_step=prop_k, ptilde_k=config.ptilde_k)
            state = gibbs_sample(model, None, gibbs, rng, num_chains=count)
        else:
            state = GibbsState(*sample_p(model, rng, count))
        images = state.x if args.binary else expected_visible(model, state)
        write_images(images, pathlib.Path(args.out), "sample", width, height)
        print(f"wrote {count} samples to {args.out}")
        return 0


def setup(app):
    """Setup function to add the command to the app."""
    app.add_command(SampleCommand(app), "Draw samples and write them as PGM images.")
