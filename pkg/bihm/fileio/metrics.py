"""CSV metrics log written once per training epoch."""
import math
import pathlib
from typing import Mapping, Sequence, Union

from bihm.config.constants import METRICS_HEADER
from bihm.training import EpochMetrics

PathLike = Union[str, pathlib.Path]


def format_value(value) -> str:
    """Integers verbatim, reals with 9 significant digits, missing values empty."""
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return ""
    return format(value, ".9g")


def append_metrics(path: PathLike, row: Union[EpochMetrics, Mapping[str, float]],
                   header: Sequence[str] = METRICS_HEADER) -> None:
    """Appends the ``header`` columns of one row, writing the header first when the file is empty or missing."""
    values = row.__dict__ if isinstance(row, EpochMetrics) else row
    path = pathlib.Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", encoding="utf-8", newline="") as metrics_f:
        if new:
            metrics_f.write(",".join(header) + "\n")
        metrics_f.write(",".join(format_value(values[key]) for key in header) + "\n")
