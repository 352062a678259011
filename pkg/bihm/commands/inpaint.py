"""The ``inpaint`` command."""
import argparse
import pathlib

import numpy as np

from bihm.commands.sample import write_images
from bihm.errors import ShapeError
from bihm.fileio.checkpoints import load_checkpoint
from bihm.fileio.images import read_pgm
from bihm.sampling import GibbsConfig, expected_visible, inpaint_state
from bihm.utils import checks
from bihm.utils.streams import make_stream


class InpaintCommand:
    """Completes the masked pixels of an image by clamped Gibbs sampling."""
    name = "inpaint"

    def __init__(self, app):
        self.app = app

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--model", required=True, help="Checkpoint to sample from")
        parser.add_argument("--image", required=True, help="PGM image; pixels >= 0.5 are on")
        parser.add_argument("--mask", required=True, help="PGM mask; pixels >= 0.5 are observed")
        parser.add_argument("--gibbs", type=int, default=10, help="Gibbs sweeps")
        parser.add_argument("--prop-k", type=int, help="Proposals per resampling step (default from config)")
        parser.add_argument("--count", type=int, default=1, help="Independent completions")
        parser.add_argument("--binary", action="store_true", help="Write sampled bits instead of pixel means")
        parser.add_argument("--out", required=True, help="Output directory")
        parser.add_argument("--seed", type=int, help="Random seed (default from config)")

    def run(self, args: argparse.Namespace) -> int:
        config = self.app.config
        model = load_checkpoint(args.model).model
        image, width, height = read_pgm(args.image)
        mask, mask_width, mask_height = read_pgm(args.mask)
        if (mask_width, mask_height) != (width, height):
            raise ShapeError(f"mask is {mask_width}x{mask_height}, image is {width}x{height}")
        count = checks.positive(args.count, "count")
        observed = np.tile((image >= 0.5).astype(np.float64), (count, 1))
        keep = (mask >= 0.5).astype(np.float64)
        prop_k = args.prop_k if args.prop_k is not None else config.proposals_per_step
        gibbs = GibbsConfig(num_sweeps=args.gibbs, proposals_per_step=prop_k, ptilde_k=config.ptilde_k)
        rng = make_stream(config.seed if args.seed is None else args.seed)
        state = inpaint_state(model, observed, keep, gibbs, rng)
        images = state.x if args.binary else expected_visible(model, state, observed, keep)
        write_images(images, pathlib.Path(args.out), "inpaint", width, height)
        print(f"completed {int((keep == 0).sum())} of {keep.size} pixels in {count} chains, wrote {args.out}")
        return 0


def setup(app):
    """Setup function to add the command to the app."""
    app.add_command(InpaintCommand(app), "Fill in masked pixels of an image.")
