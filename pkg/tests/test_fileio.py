"""Tests for dataset, checkpoint, image and metrics files."""
import math
import struct

import numpy as np
import pytest

from bihm.config.constants import CHECKPOINT_MAGIC, DATASET_MAGIC, METRICS_HEADER, TRACKED_METRICS_HEADER
from bihm.errors import (ArgumentError, BadMagicError, FormatError, ShapeError, SizeMismatchError, TruncationError,
                         UnsupportedVersionError)
from bihm.fileio.checkpoints import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from bihm.fileio.datasets import BinaryDataset, bars_and_stripes, guess_format, load_dataset, save_dataset
from bihm.fileio.images import read_pgm, square_side, to_bytes, write_pgm
from bihm.fileio.metrics import append_metrics, format_value
from bihm.model import random_model
from bihm.training import EpochMetrics
from bihm.utils.streams import make_stream


def _bbm(rows, cols, payload, magic=DATASET_MAGIC, version=1):
    return struct.pack("<8sIII", magic, version, rows, cols) + bytes(payload)


class TestTextDatasets:
    """amat-text and csv parsing."""

    def test_csv(self, tmp_path):
        path = tmp_path / "tiny.csv"
        path.write_text("0,1\n1,0\n")
        dataset = load_dataset(path)
        assert (dataset.rows, dataset.cols, dataset.name) == (2, 2, "tiny")
        np.testing.assert_array_equal(dataset.to_array(), [[0.0, 1.0], [1.0, 0.0]])

    def test_amat_row(self, tmp_path):
        bits = make_stream(71).integers(0, 2, size=784)
        path = tmp_path / "mnist.amat"
        path.write_text(" ".join(str(b) for b in bits) + "\n\n")
        np.testing.assert_array_equal(load_dataset(path).to_array(), bits[None, :])

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("0,1\n1,0,1\n")
        with pytest.raises(FormatError) as info:
            load_dataset(path)
        assert info.value.line == 2

    def test_bad_value(self, tmp_path):
        path = tmp_path / "bad.amat"
        path.write_text("0 1 0\n1 2 0\n")
        with pytest.raises(FormatError) as info:
            load_dataset(path)
        assert info.value.line == 2
        assert "'2'" in str(info.value)

    def test_empty(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("\n")
        with pytest.raises(FormatError):
            load_dataset(path)

    def test_guess_format(self):
        assert guess_format("a/b.AMAT") == "amat-text"
        assert guess_format("x.bbm") == "bbm"
        with pytest.raises(ArgumentError):
            guess_format("data.npz")


class TestBbm:
    """Packed binary datasets."""

    def test_round_trip(self, tmp_path):
        array = (make_stream(72).random((13, 11)) < 0.5).astype(float)
        path = tmp_path / "data.bbm"
        save_dataset(BinaryDataset.from_array(array), path)
        assert path.stat().st_size == 20 + 13 * 2
        np.testing.assert_array_equal(load_dataset(path).to_array(), array)

    def test_lsb_first(self, tmp_path):
        path = tmp_path / "one.bbm"
        path.write_bytes(_bbm(1, 3, [0b101]))
        np.testing.assert_array_equal(load_dataset(path).to_array(), [[1.0, 0.0, 1.0]])

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.bbm"
        path.write_bytes(_bbm(1, 3, [0], magic=b"NOTADATA"))
        with pytest.raises(BadMagicError):
            load_dataset(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "v2.bbm"
        path.write_bytes(_bbm(1, 3, [0], version=2))
        with pytest.raises(UnsupportedVersionError):
            load_dataset(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "short.bbm"
        path.write_bytes(_bbm(3, 9, [0] * 5))
        with pytest.raises(TruncationError) as info:
            load_dataset(path)
        assert (info.value.expected, info.value.actual) == (26, 25)
        path.write_bytes(DATASET_MAGIC[:5])
        with pytest.raises(TruncationError):
            load_dataset(path)

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "long.bbm"
        path.write_bytes(_bbm(1, 3, [0, 0]))
        with pytest.raises(SizeMismatchError):
            load_dataset(path)

    def test_nonzero_padding(self, tmp_path):
        path = tmp_path / "pad.bbm"
        path.write_bytes(_bbm(1, 3, [0b1000]))
        with pytest.raises(FormatError):
            load_dataset(path)

    def test_rejects_non_binary(self):
        with pytest.raises(ArgumentError):
            BinaryDataset.from_array(np.array([[0.0, 0.5]]))


class TestBarsAndStripes:
    """Synthetic toy patterns."""

    def test_structure(self):
        images = bars_and_stripes(200, make_stream(73)).to_array().reshape(200, 4, 4)
        for image in images:
            rows_constant = np.all(image == image[:, :1])
            cols_constant = np.all(image == image[:1, :])
            assert rows_constant or cols_constant

    def test_deterministic(self):
        first = bars_and_stripes(20, make_stream(74), side=3).to_array()
        second = bars_and_stripes(20, make_stream(74), side=3).to_array()
        np.testing.assert_array_equal(first, second)
        assert first.shape == (20, 9)


class TestCheckpoints:
    """Bit-exact model files."""

    def test_round_trip(self, tmp_path):
        model = random_model([5, 4, 3], make_stream(75))
        path = tmp_path / "model.bihm"
        save_checkpoint(model, {"epoch": 7, "note": "toy"}, path)
        loaded = load_checkpoint(path)
        assert loaded.model.layer_sizes == [5, 4, 3]
        assert loaded.metadata == {"epoch": "7", "note": "toy"}
        for (name, before), (_, after) in zip(model.parameters(), loaded.model.parameters()):
            assert before.tobytes() == after.tobytes(), name

    def test_header_layout(self, tiny_model):
        raw = encode_checkpoint(tiny_model, {})
        assert raw[:8] == CHECKPOINT_MAGIC
        assert struct.unpack_from("<IIIIII", raw, 8) == (1, 2, 4, 3, 2, 2)
        assert raw[32:34] == b"{}"
        assert len(raw) == 34 + 8 * tiny_model.num_parameters()

    def test_every_truncation_fails(self, tiny_model):
        raw = encode_checkpoint(tiny_model, {"a": "b"})
        for length in range(len(raw)):
            with pytest.raises(FormatError):
                decode_checkpoint(raw[:length])

    def test_bad_magic(self, tiny_model):
        raw = encode_checkpoint(tiny_model, {})
        with pytest.raises(BadMagicError):
            decode_checkpoint(b"BIHMDATA" + raw[8:])

    def test_bad_version(self, tiny_model):
        raw = bytearray(encode_checkpoint(tiny_model, {}))
        raw[8:12] = struct.pack("<I", 9)
        with pytest.raises(UnsupportedVersionError):
            decode_checkpoint(bytes(raw))

    def test_trailing_bytes(self, tiny_model):
        with pytest.raises(SizeMismatchError):
            decode_checkpoint(encode_checkpoint(tiny_model, {}) + b"\x00")

    def test_zero_layer_size(self, tiny_model):
        raw = bytearray(encode_checkpoint(tiny_model, {}))
        raw[20:24] = struct.pack("<I", 0)
        with pytest.raises(SizeMismatchError):
            decode_checkpoint(bytes(raw))

    def test_non_finite_parameters(self, tiny_model):
        raw = bytearray(encode_checkpoint(tiny_model, {}))
        raw[-8:] = struct.pack("<d", math.nan)
        with pytest.raises(FormatError):
            decode_checkpoint(bytes(raw))

    def test_bad_metadata(self, tiny_model):
        raw = bytearray(encode_checkpoint(tiny_model, {"k": "v"}))
        meta_start = 32
        raw[meta_start] = ord("[")
        with pytest.raises(FormatError):
            decode_checkpoint(bytes(raw))


class TestPgm:
    """P5 grayscale images."""

    def test_pixel_mapping(self):
        np.testing.assert_array_equal(to_bytes(np.array([0.0, 0.5, 1.0, 1.5, -1.0])), [0, 128, 255, 255, 0])

    def test_single_pixel(self, tmp_path):
        path = tmp_path / "one.pgm"
        write_pgm(np.array([1.0]), 1, 1, path)
        assert path.read_bytes() == b"P5\n1 1\n255\n\xff"

    def test_read_back(self, tmp_path):
        image = np.linspace(0.0, 1.0, 12)
        path = tmp_path / "ramp.pgm"
        write_pgm(image, 4, 3, path)
        pixels, width, height = read_pgm(path)
        assert (width, height) == (4, 3)
        np.testing.assert_allclose(pixels, image, atol=0.5 / 255)

    def test_size_mismatch(self, tmp_path):
        with pytest.raises(ShapeError):
            write_pgm(np.zeros(10), 3, 3, tmp_path / "x.pgm")

    def test_bad_header(self, tmp_path):
        path = tmp_path / "ascii.pgm"
        path.write_bytes(b"P2\n1 1\n255\n0\n")
        with pytest.raises(FormatError):
            read_pgm(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "short.pgm"
        path.write_bytes(b"P5\n2 2\n255\n\x00\x00")
        with pytest.raises(TruncationError):
            read_pgm(path)

    def test_square_side(self):
        assert square_side(784) == 28
        with pytest.raises(ShapeError):
            square_side(10)


class TestMetrics:
    """Per-epoch CSV rows."""

    def test_format_value(self):
        assert format_value(12) == "12"
        assert format_value(-87.123456789123) == "-87.1234568"
        assert format_value(math.nan) == ""

    def test_header_written_once(self, tmp_path):
        path = tmp_path / "metrics.csv"
        append_metrics(path, EpochMetrics(1, 10, -90.5, math.nan, math.nan, 55.0, 1.25))
        append_metrics(path, EpochMetrics(2, 20, -88.0, -89.0, -0.25, 60.0, 1.5))
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(METRICS_HEADER)
        assert lines[1] == "1,10,-90.5,,,55,1.25"
        assert lines[2] == "2,20,-88,-89,-0.25,60,1.5"
        assert len(lines) == 3

    def test_tracked_columns(self, tmp_path):
        path = tmp_path / "metrics.csv"
        append_metrics(path, EpochMetrics(1, 10, -90.5, math.nan, math.nan, 55.0, 1.25, -89.5, math.nan),
                       TRACKED_METRICS_HEADER)
        lines = path.read_text().splitlines()
        assert lines[0].endswith(",seconds,logp,logpstar")
        assert lines[1] == "1,10,-90.5,,,55,1.25,-89.5,"
