"""Binary PGM (P5, maxval 255) images."""
import pathlib
import re
from typing import Union

import numpy as np

from bihm.errors import FormatError, ShapeError, TruncationError

PathLike = Union[str, pathlib.Path]

_HEADER = re.compile(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s")


def to_bytes(image: np.ndarray) -> np.ndarray:
    """Maps pixel values in [0, 1] to 0..255, rounding halves up."""
    return np.floor(np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def write_pgm(image: np.ndarray, width: int, height: int, path: PathLike) -> None:
    """Writes ``image`` (row-major, values in [0, 1]) as a P5 grayscale file.

    Raises:
        ShapeError: ``width * height`` differs from the number of pixels.
    """
    pixels = np.asarray(image).ravel()
    if width * height != pixels.size:
        raise ShapeError(f"{width}x{height} image needs {width * height} pixels, got {pixels.size}")
    with open(path, "wb") as image_f:
        image_f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        image_f.write(to_bytes(pixels).tobytes())


def read_pgm(path: PathLike) -> tuple[np.ndarray, int, int]:
    """Reads a P5 file written with maxval 255.

    Returns:
        ``(pixels, width, height)`` with pixels in [0, 1], flattened row-major.
    """
    raw = pathlib.Path(path).read_bytes()
    match = _HEADER.match(raw)
    if match is None:
        raise FormatError("not a binary PGM (P5) file", path=str(path), offset=0)
    width, height, maxval = (int(g) for g in match.groups())
    if maxval != 255:
        raise FormatError(f"maxval {maxval} is not supported", path=str(path))
    expected = match.end() + width * height
    if len(raw) < expected:
        raise TruncationError(expected, len(raw), path=str(path))
    pixels = np.frombuffer(raw, dtype=np.uint8, count=width * height, offset=match.end())
    return pixels.astype(np.float64) / 255.0, width, height


def square_side(num_pixels: int) -> int:
    """Side length of a square image with ``num_pixels`` pixels."""
    side = int(round(num_pixels**0.5))
    if side * side != num_pixels:
        raise ShapeError(f"{num_pixels} pixels do not form a square; pass --width and --height")
    return side
