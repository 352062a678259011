"""Bit-exact model checkpoints.

Layout (all integers u32 little-endian, all reals float64 little-endian):

    ``BIHMMODL`` | version | L | L + 1 layer sizes, visible first |
    metadata byte length | UTF-8 metadata (JSON object of strings) |
    prior biases | for l = L..1: p-layer weights (row-major out x in), biases |
    for l = 1..L: q-layer weights, biases

The array order is ``BihmModel.parameters()``. Loading validates the
header and the total length before any parameter array is built.
"""
from dataclasses import dataclass, field
import json
import logging
import pathlib
import struct
from typing import Union

import numpy as np

from bihm.config.constants import CHECKPOINT_MAGIC, FORMAT_VERSION
from bihm.errors import (ArgumentError, BadMagicError, FormatError, SizeMismatchError, TruncationError,
                         UnsupportedVersionError)
from bihm.model import BihmModel

PathLike = Union[str, pathlib.Path]

_U32 = struct.Struct("<I")
_PREFIX = struct.Struct("<8sII")


@dataclass
class Checkpoint:
    """A model with free-form text metadata."""
    model: BihmModel
    metadata: dict[str, str] = field(default_factory=dict)


def encode_checkpoint(model: BihmModel, metadata: dict[str, str]) -> bytes:
    """Serializes a model to checkpoint bytes."""
    meta = json.dumps({str(k): str(v) for k, v in metadata.items()}, sort_keys=True).encode("utf-8")
    parts = [_PREFIX.pack(CHECKPOINT_MAGIC, FORMAT_VERSION, model.depth)]
    parts.extend(_U32.pack(size) for size in model.layer_sizes)
    parts.append(_U32.pack(len(meta)))
    parts.append(meta)
    parts.extend(np.ascontiguousarray(array, dtype="<f8").tobytes() for _, array in model.parameters())
    return b"".join(parts)


def save_checkpoint(model: BihmModel, metadata: dict[str, str], path: PathLike) -> None:
    """Writes ``model`` and ``metadata`` to ``path``."""
    pathlib.Path(path).write_bytes(encode_checkpoint(model, metadata))
    logging.info("Saved checkpoint %s (%d parameters)", path, model.num_parameters())


def _parameter_count(sizes: list[int]) -> int:
    count = sizes[-1]
    for below, above in zip(sizes[:-1], sizes[1:]):
        count += 2 * below * above + below + above
    return count


def decode_checkpoint(raw: bytes, path: str = "<bytes>") -> Checkpoint:
    """Parses checkpoint bytes.

    Raises:
        BadMagicError, UnsupportedVersionError, TruncationError,
        SizeMismatchError: The corresponding defect was found. No model is
            returned in any failure case.
    """
    if len(raw) < 8:
        raise TruncationError(_PREFIX.size, len(raw), path=path)
    if raw[:8] != CHECKPOINT_MAGIC:
        raise BadMagicError(f"bad magic {raw[:8]!r}", path=path, offset=0)
    if len(raw) < _PREFIX.size:
        raise TruncationError(_PREFIX.size, len(raw), path=path)
    _, version, depth = _PREFIX.unpack_from(raw)
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}", path=path, offset=8)
    if depth < 1:
        raise SizeMismatchError(f"model depth {depth} is not positive", path=path, offset=12)
    sizes_end = _PREFIX.size + 4 * (depth + 1)
    if len(raw) < sizes_end + 4:
        raise TruncationError(sizes_end + 4, len(raw), path=path)
    sizes = [_U32.unpack_from(raw, _PREFIX.size + 4 * i)[0] for i in range(depth + 1)]
    if min(sizes) < 1:
        raise SizeMismatchError(f"layer sizes {sizes} contain zero", path=path, offset=_PREFIX.size)
    (meta_len,) = _U32.unpack_from(raw, sizes_end)
    meta_start = sizes_end + 4
    params_start = meta_start + meta_len
    expected = params_start + 8 * _parameter_count(sizes)
    if len(raw) < expected:
        raise TruncationError(expected, len(raw), path=path)
    if len(raw) > expected:
        raise SizeMismatchError(f"{len(raw) - expected} trailing bytes", path=path, offset=expected)

    try:
        metadata = json.loads(raw[meta_start:params_start].decode("utf-8")) if meta_len else {}
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise FormatError(f"metadata is not valid UTF-8 JSON: {err}", path=path, offset=meta_start) from err
    if not isinstance(metadata, dict):
        raise FormatError("metadata is not a JSON object", path=path, offset=meta_start)

    model = BihmModel.zeros(sizes)
    offset = params_start
    for _, array in model.parameters():
        array[...] = np.frombuffer(raw, dtype="<f8", count=array.size, offset=offset).reshape(array.shape)
        offset += 8 * array.size
    try:
        model = model.copy()
    except ArgumentError as err:
        raise FormatError(str(err), path=path, offset=params_start) from err
    return Checkpoint(model, {str(k): str(v) for k, v in metadata.items()})


def load_checkpoint(path: PathLike) -> Checkpoint:
    """Reads a checkpoint written by ``save_checkpoint``."""
    checkpoint = decode_checkpoint(pathlib.Path(path).read_bytes(), str(path))
    logging.info("Loaded checkpoint %s, layers %s", path, checkpoint.model.layer_sizes)
    return checkpoint
