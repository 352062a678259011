"""Random streams.

One PCG64 generator is seeded per run. Independent substreams for parallel
workers are derived with PCG64 jumps: substream ``i`` is the parent state
jumped ``i + 1`` times (each jump advances by ``2**127`` draws), and the
parent then moves past every substream it handed out.
"""
import numpy as np


def make_stream(seed: int) -> np.random.Generator:
    """Returns the documented seedable generator for ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def substreams(rng: np.random.Generator, count: int) -> list[np.random.Generator]:
    """Splits ``count`` independent generators off ``rng`` and advances ``rng`` past them."""
    bit_gen = rng.bit_generator
    streams = [np.random.Generator(bit_gen.jumped(i + 1)) for i in range(count)]
    bit_gen.state = bit_gen.jumped(count + 1).state
    return streams
