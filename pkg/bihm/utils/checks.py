"""Argument and shape checks shared by the numerical modules."""
from typing import Union

import numpy as np

from bihm.errors import ArgumentError, ShapeError


def last_dim(array: np.ndarray, expected: int, name: str) -> np.ndarray:
    """Returns ``array`` as float64 after checking its trailing dimension.

    Args:
        array: The array to check. May carry leading batch axes.
        expected: Required size of the last axis.
        name: Used in the error message.
    """
    arr = np.asarray(array, dtype=np.float64)
    if arr.ndim == 0 or arr.shape[-1] != expected:
        raise ShapeError(f"{name} has shape {arr.shape}, expected trailing dimension {expected}")
    return arr


def positive(value: int, name: str) -> int:
    """Checks a count is at least one."""
    if int(value) != value or value < 1:
        raise ArgumentError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def binary(array: np.ndarray, name: str) -> np.ndarray:
    """Checks every entry is 0 or 1."""
    arr = np.asarray(array)
    if not np.all((arr == 0) | (arr == 1)):
        raise ArgumentError(f"{name} must be binary")
    return arr


def finite(array: np.ndarray, name: str) -> np.ndarray:
    """Checks every entry is finite."""
    arr = np.asarray(array, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} contains non-finite values")
    return arr


def count_list(text: Union[str, int], name: str) -> list[int]:
    """Parses comma-separated positive integers such as ``10,100,1000``."""
    try:
        counts = [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError as err:
        raise ArgumentError(f"{name} must be comma-separated integers, got {text!r}") from err
    if not counts or min(counts) < 1:
        raise ArgumentError(f"{name} must be positive, got {text!r}")
    return counts


def layer_list(text: str) -> list[int]:
    """Parses comma-separated layer sizes such as ``300,200,100``."""
    return count_list(text, "layer sizes")
