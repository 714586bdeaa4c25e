# app/models/domain.py

"""
Core domain types shared by every pipeline stage.

All types are frozen after construction and validate their invariants in
``__post_init__``; violations raise ``ValidationError``.
"""

from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd

from app.models.errors import ValidationError

MAX_COMBINATIONS = 2 ** 32 - 1

LOD_COLUMN = "lod"
CPU_COLUMN = "cpu_freq_mhz"
GPU_COLUMN = "gpu_freq_mhz"
SSIM_COLUMN = "ssim"
TIME_COLUMN = "time_ms"


def param_column(name: str) -> str:
    return f"param_{name}"


@dataclass(frozen=True)
class ParameterDimension:
    """One rendering parameter and its discretized levels"""
    name: str
    values: Tuple[float, ...]
    labels: Optional[Tuple[str, ...]] = None  # categorical options, ordinal-coded

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.name:
            raise ValidationError("Dimension name must be non-empty")
        if not self.values:
            raise ValidationError(f"Dimension '{self.name}' has no levels")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValidationError(f"Dimension '{self.name}' levels must be strictly increasing")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != len(self.values):
                raise ValidationError(f"Dimension '{self.name}' has {len(self.labels)} labels for {len(self.values)} levels")

    @classmethod
    def categorical(cls, name: str, labels: List[str]) -> "ParameterDimension":
        return cls(name=name, values=tuple(float(i) for i in range(len(labels))), labels=tuple(labels))

    @property
    def count(self) -> int:
        return len(self.values)

    def describe(self, index: int) -> str:
        """Human-readable value of one level"""
        if self.labels is not None:
            return self.labels[index]
        return f"{self.values[index]:g}"


@dataclass(frozen=True)
class ParameterVector:
    """Per-dimension level indices (a mixed-radix digit vector)"""
    indices: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __getitem__(self, position: int) -> int:
        return self.indices[position]


@dataclass(frozen=True)
class ParameterSpace:
    """The discretized parameter set together with its best-quality reference"""
    dimensions: Tuple[ParameterDimension, ...]
    best_quality_index: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "dimensions", tuple(self.dimensions))
        object.__setattr__(self, "best_quality_index", tuple(int(i) for i in self.best_quality_index))
        if not self.dimensions:
            raise ValidationError("Parameter space needs at least one dimension")
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise ValidationError(f"Dimension names must be unique: {names}")
        if self.total > MAX_COMBINATIONS:
            raise ValidationError(f"Parameter space has {self.total} combinations, exceeds 32-bit range")
        if len(self.best_quality_index) != len(self.dimensions):
            raise ValidationError("best_quality_index length must match the dimension count")
        for dim, idx in zip(self.dimensions, self.best_quality_index):
            if not 0 <= idx < dim.count:
                raise ValidationError(f"Best-quality index {idx} out of range for '{dim.name}'")

    @property
    def radices(self) -> Tuple[int, ...]:
        return tuple(d.count for d in self.dimensions)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(d.name for d in self.dimensions)

    @property
    def total(self) -> int:
        return int(np.prod(self.radices, dtype=object))

    @property
    def best_quality(self) -> ParameterVector:
        return ParameterVector(self.best_quality_index)

    def describe(self, params: ParameterVector) -> List[Tuple[str, str]]:
        return [(d.name, d.describe(i)) for d, i in zip(self.dimensions, params)]


def _strictly_increasing(values) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


@dataclass(frozen=True)
class HardwareGrid:
    """Representative CPU and GPU clock frequencies (MHz)"""
    cpu_bins: Tuple[int, ...]
    gpu_bins: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "cpu_bins", tuple(int(f) for f in self.cpu_bins))
        object.__setattr__(self, "gpu_bins", tuple(int(f) for f in self.gpu_bins))
        for label, bins in (("cpu_bins", self.cpu_bins), ("gpu_bins", self.gpu_bins)):
            if not bins:
                raise ValidationError(f"{label} must be non-empty")
            if not _strictly_increasing(bins):
                raise ValidationError(f"{label} must be strictly increasing")
            if bins[0] <= 0:
                raise ValidationError(f"{label} must be positive")


@dataclass(frozen=True)
class LodSet:
    """LOD levels keyed to projection-area thresholds"""
    thresholds: Tuple[float, ...]
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if not self.names:
            object.__setattr__(self, "names", tuple(f"lod{i}" for i in range(len(self.thresholds))))
        else:
            object.__setattr__(self, "names", tuple(self.names))
        if not self.thresholds:
            raise ValidationError("LOD set must be non-empty")
        if len(self.names) != len(self.thresholds):
            raise ValidationError("LOD names and thresholds differ in length")
        if self.thresholds[0] != 1.0:
            raise ValidationError("First LOD threshold must be 1.0 (full projection area)")
        if any(b >= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValidationError("LOD thresholds must be strictly decreasing")
        if self.thresholds[-1] <= 0.0:
            raise ValidationError("LOD thresholds must lie in (0, 1]")

    def __len__(self) -> int:
        return len(self.thresholds)

    def check(self, lod: int) -> None:
        if not 0 <= lod < len(self.thresholds):
            raise ValidationError(f"LOD index {lod} out of range [0, {len(self.thresholds)})")


@dataclass(frozen=True)
class ConfigPoint:
    """Full input tuple of the quantized rendering function"""
    params: ParameterVector
    lod: int
    cpu_freq: float
    gpu_freq: float

    def __post_init__(self):
        if self.cpu_freq <= 0 or self.gpu_freq <= 0:
            raise ValidationError(f"Frequencies must be positive, got cpu={self.cpu_freq} gpu={self.gpu_freq}")


@dataclass(frozen=True)
class RenderOutcome:
    ssim: float
    time_ms: float

    def __post_init__(self):
        if not 0.0 <= self.ssim <= 1.0:
            raise ValidationError(f"SSIM {self.ssim} outside [0, 1]")
        if self.time_ms < 0.0:
            raise ValidationError(f"Negative render time {self.time_ms}")


@dataclass(frozen=True)
class Dataset:
    """
    Recorded (ConfigPoint -> RenderOutcome) observations.

    Rows live in ``frame`` using the CSV column layout:
    ``param_<name>...,lod,cpu_freq_mhz,gpu_freq_mhz,ssim,time_ms``.
    """
    space: ParameterSpace
    lods: LodSet
    cpu_freq_range: Tuple[float, float]
    gpu_freq_range: Tuple[float, float]
    seed: int
    frame: pd.DataFrame = field(repr=False, compare=False)

    def __post_init__(self):
        expected = self.columns(self.space)
        if list(self.frame.columns) != expected:
            raise ValidationError(f"Dataset columns {list(self.frame.columns)} do not match {expected}")
        for dim in self.space.dimensions:
            col = self.frame[param_column(dim.name)].to_numpy()
            if len(col) and (col.min() < 0 or col.max() >= dim.count):
                raise ValidationError(f"Column {param_column(dim.name)} has level indices outside [0, {dim.count})")
        lod = self.frame[LOD_COLUMN].to_numpy()
        if len(lod) and (lod.min() < 0 or lod.max() >= len(self.lods)):
            raise ValidationError("Dataset contains invalid LOD indices")
        for column, (lo, hi) in ((CPU_COLUMN, self.cpu_freq_range), (GPU_COLUMN, self.gpu_freq_range)):
            freq = self.frame[column].to_numpy()
            if len(freq) and (freq.min() < lo or freq.max() > hi or freq.min() <= 0):
                raise ValidationError(f"Column {column} outside recorded range [{lo}, {hi}]")

    @staticmethod
    def columns(space: ParameterSpace) -> List[str]:
        return [param_column(n) for n in space.names] + [LOD_COLUMN, CPU_COLUMN, GPU_COLUMN, SSIM_COLUMN, TIME_COLUMN]

    def __len__(self) -> int:
        return len(self.frame)
