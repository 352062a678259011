"""Binary dataset loading and saving.

Supported formats:
    amat-text  whitespace-separated 0/1 values, one row per line (the
               distributed binarized-MNIST format)
    csv        comma-separated 0/1 values
    bbm        ``BIHMDATA`` magic, u32 LE version (1), u32 LE rows, u32 LE
               cols, then rows * ceil(cols / 8) bytes, row-major, bits
               packed LSB-first
"""
from dataclasses import dataclass
import logging
import pathlib
import struct
from typing import Optional, Union

import numpy as np

from bihm.config.constants import DATASET_MAGIC, FORMAT_VERSION
from bihm.errors import (ArgumentError, BadMagicError, FormatError, SizeMismatchError, TruncationError,
                         UnsupportedVersionError)

PathLike = Union[str, pathlib.Path]

FORMATS = ("amat-text", "csv", "bbm")
_HEADER = struct.Struct("<8sIII")
_SUFFIXES = {".amat": "amat-text", ".txt": "amat-text", ".csv": "csv", ".bbm": "bbm"}


@dataclass
class BinaryDataset:
    """A named binary matrix stored packed, eight bits per byte, LSB first."""
    name: str
    rows: int
    cols: int
    data: np.ndarray

    @classmethod
    def from_array(cls, array: np.ndarray, name: str = "") -> "BinaryDataset":
        array = np.asarray(array)
        if array.ndim != 2:
            raise ArgumentError("datasets are two-dimensional")
        if not np.all((array == 0) | (array == 1)):
            raise ArgumentError("datasets hold only 0 and 1")
        packed = np.packbits(array.astype(np.uint8), axis=1, bitorder="little")
        return cls(name, array.shape[0], array.shape[1], packed)

    def to_array(self) -> np.ndarray:
        """The unpacked matrix as float64, ready for the model."""
        return np.unpackbits(self.data, axis=1, count=self.cols, bitorder="little").astype(np.float64)


def guess_format(path: PathLike) -> str:
    """Maps a file suffix to a format name."""
    suffix = pathlib.Path(path).suffix.lower()
    if suffix not in _SUFFIXES:
        raise ArgumentError(f"cannot infer dataset format from {path!s}; pass one of {FORMATS}")
    return _SUFFIXES[suffix]


def _parse_text(path: PathLike, separator: Optional[str]) -> np.ndarray:
    rows, width = [], None
    with open(path, encoding="utf-8") as data_f:
        for number, line in enumerate(data_f, start=1):
            if not line.strip():
                continue
            fields = [f.strip() for f in line.split(separator)]
            row = []
            for value in fields:
                if value not in ("0", "1"):
                    raise FormatError(f"value {value!r} is not 0 or 1", path=str(path), line=number)
                row.append(value == "1")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise FormatError(f"row has {len(row)} values, expected {width}", path=str(path), line=number)
            rows.append(row)
    if not rows:
        raise FormatError("no data rows", path=str(path))
    return np.array(rows, dtype=np.uint8)


def _parse_bbm(path: PathLike) -> BinaryDataset:
    raw = pathlib.Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise TruncationError(_HEADER.size, len(raw), path=str(path))
    magic, version, rows, cols = _HEADER.unpack_from(raw)
    if magic != DATASET_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}", path=str(path), offset=0)
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}", path=str(path), offset=8)
    row_bytes = (cols + 7) // 8
    expected = _HEADER.size + rows * row_bytes
    if len(raw) < expected:
        raise TruncationError(expected, len(raw), path=str(path))
    if len(raw) > expected:
        raise SizeMismatchError(f"{len(raw) - expected} trailing bytes", path=str(path), offset=expected)
    packed = np.frombuffer(raw, dtype=np.uint8, offset=_HEADER.size).reshape(rows, row_bytes).copy()
    if cols % 8 and np.any(packed[:, -1] >> (cols % 8)):
        raise FormatError("padding bits are not zero", path=str(path))
    return BinaryDataset(pathlib.Path(path).stem, rows, cols, packed)


def load_dataset(path: PathLike, fmt: Optional[str] = None) -> BinaryDataset:
    """Reads a binary dataset.

    Args:
        path: File to read.
        fmt: One of ``amat-text``, ``csv`` or ``bbm``; guessed from the suffix when omitted.

    Raises:
        FormatError: A value is not 0/1, rows are ragged, or the BBM header is
            invalid (with the BBM subclasses for magic, version and length).
    """
    fmt = fmt or guess_format(path)
    if fmt == "bbm":
        dataset = _parse_bbm(path)
    elif fmt == "csv":
        dataset = BinaryDataset.from_array(_parse_text(path, ","), pathlib.Path(path).stem)
    elif fmt == "amat-text":
        dataset = BinaryDataset.from_array(_parse_text(path, None), pathlib.Path(path).stem)
    else:
        raise ArgumentError(f"unknown dataset format {fmt!r}")
    logging.info("Loaded dataset %s: %d rows x %d cols", dataset.name, dataset.rows, dataset.cols)
    return dataset


def save_dataset(dataset: BinaryDataset, path: PathLike) -> None:
    """Writes ``dataset`` in the BBM format."""
    header = _HEADER.pack(DATASET_MAGIC, FORMAT_VERSION, dataset.rows, dataset.cols)
    with open(path, "wb") as data_f:
        data_f.write(header)
        data_f.write(np.ascontiguousarray(dataset.data, dtype=np.uint8).tobytes())


def bars_and_stripes(num_rows: int, rng: np.random.Generator, side: int = 4, noise: float = 0.0) -> BinaryDataset:
    """Random bars-and-stripes images of ``side`` x ``side`` pixels, flattened row-major.

    Each image picks horizontal or vertical orientation and switches every
    row (or column) on independently; ``noise`` flips each pixel with that
    probability.
    """
    lines = rng.random((num_rows, side)) < 0.5
    vertical = rng.random(num_rows) < 0.5
    images = np.where(vertical[:, None, None], lines[:, None, :], lines[:, :, None])
    images = np.broadcast_to(images, (num_rows, side, side)).reshape(num_rows, side * side)
    flips = rng.random(images.shape) < noise
    return BinaryDataset.from_array((images ^ flips).astype(np.uint8), f"bars{side}x{side}")
