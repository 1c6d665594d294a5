"""Tabular dataset loading, per-attribute series, and value normalization.

Datasets are immutable after load and safe to share between the control
thread and the audio render thread.
"""

from __future__ import annotations

import colorsys
import csv
import enum
import hashlib
from dataclasses import dataclass, field

import numpy as np


class DatasetError(Exception):
    """Base class for dataset loading problems."""


class ParseError(DatasetError):
    def __init__(self, row: int, col: int, text: str):
        self.row = row
        self.col = col
        self.text = text
        super().__init__(f"row {row}, column {col}: cannot parse {text!r} as a number")


class EmptyDatasetError(DatasetError):
    pass


class NormalizationMethod(enum.Enum):
    MIN_MAX = "minmax"
    ZSCORE_CLAMPED = "zscore"


def series_color(dataset_name: str, index: int, seed: int = 0) -> tuple[int, int, int]:
    """Deterministic per-series RGB color.

    Hashes (dataset name, series index, seed) into an HSL hue with fixed
    saturation/lightness so that reloading a file reproduces track colors
    exactly while distinct series still look "randomly" colored.
    """
    digest = hashlib.sha256(f"{dataset_name}:{index}:{seed}".encode()).digest()
    hue = int.from_bytes(digest[:4], "little") / 2**32
    r, g, b = colorsys.hls_to_rgb(hue, 0.55, 0.85)
    return (round(r * 255), round(g * 255), round(b * 255))


@dataclass(frozen=True)
class AttributeSeries:
    """One data column: values plus cached stats used by normalization."""

    name: str
    values: np.ndarray  # float64, read-only
    color: tuple[int, int, int]
    min: float = field(init=False)
    max: float = field(init=False)
    mean: float = field(init=False)
    std: float = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "min", float(v.min()))
        object.__setattr__(self, "max", float(v.max()))
        object.__setattr__(self, "mean", float(v.mean()))
        object.__setattr__(self, "std", float(v.std()))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Dataset:
    name: str
    series: tuple[AttributeSeries, ...]

    def __post_init__(self):
        if not self.series:
            raise EmptyDatasetError("dataset has no series")
        lengths = {len(s) for s in self.series}
        if len(lengths) != 1:
            raise DatasetError(f"series lengths differ: {sorted(lengths)}")
        names = [s.name for s in self.series]
        if len(set(names)) != len(names):
            raise DatasetError(f"duplicate series names in {names}")

    @property
    def length(self) -> int:
        return len(self.series[0])

    def series_by_name(self, name: str) -> AttributeSeries:
        for s in self.series:
            if s.name == name:
                return s
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.series]


def load_dataset(path: str, seed: int = 0) -> Dataset:
    """Load a CSV file (header row, numeric body) into a Dataset.

    Column order is preserved; every non-header cell must parse as a real
    number. Blank or malformed cells raise ParseError rather than being
    imputed.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        columns: list[list[float]] = [[] for _ in header]
        for row_idx, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ParseError(row_idx, len(row), f"expected {len(header)} cells, got {len(row)}")
            for col_idx, cell in enumerate(row):
                try:
                    columns[col_idx].append(float(cell))
                except ValueError:
                    raise ParseError(row_idx, col_idx, cell) from None
    if not columns or not columns[0]:
        raise EmptyDatasetError(f"{path}: no data rows")
    name = path.rsplit("/", 1)[-1]
    series = tuple(
        AttributeSeries(name=h, values=np.array(col), color=series_color(name, i, seed))
        for i, (h, col) in enumerate(zip(header, columns))
    )
    return Dataset(name=name, series=series)


def normalize_value(series: AttributeSeries, method: NormalizationMethod, index: int) -> float:
    """Normalize one value of a series into [0, 1]."""
    if not 0 <= index < len(series):
        raise IndexError(f"index {index} out of range for series of length {len(series)}")
    return float(normalize_array(series, method)[index])


def normalize_array(series: AttributeSeries, method: NormalizationMethod) -> np.ndarray:
    """Normalize the whole series into [0, 1] (vectorized form used by the renderer).

    MinMax: (v - min) / (max - min), constant series map to 0.5.
    ZScoreClamped: (v - mean) / (3 * std) + 0.5, clamped to [0, 1];
    zero-variance series also map to 0.5.
    """
    v = series.values
    if method is NormalizationMethod.MIN_MAX:
        span = series.max - series.min
        if span == 0.0:
            return np.full_like(v, 0.5)
        return (v - series.min) / span
    if method is NormalizationMethod.ZSCORE_CLAMPED:
        if series.std == 0.0:
            return np.full_like(v, 0.5)
        return np.clip((v - series.mean) / (3.0 * series.std) + 0.5, 0.0, 1.0)
    raise ValueError(f"unknown normalization method {method!r}")
