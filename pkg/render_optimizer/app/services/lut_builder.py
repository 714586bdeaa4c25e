# app/services/lut_builder.py

"""
LUT Pre-computation
Evaluates both predictors over every (LOD, CPU bin, GPU bin) cell and stores
the two-phase search winner of each cell as a bit-packed config code.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.models.domain import HardwareGrid, LodSet, ParameterSpace
from app.models.errors import ValidationError
from app.services.discretization import decode_digits, level_matrix
from app.services.gbdt_trainer import GbdtModel, feature_names, model_fingerprint, predict
from app.services.oracle import OracleConfig, ground_truth
from app.utils.bitpack import bit_width, pack, packed_size, unpack, unpack_one

logger = logging.getLogger(__name__)

# Cells evaluated per predictor call
CELL_BATCH = 64


def _f32(values: Sequence[float]) -> Tuple[float, ...]:
    return tuple(float(v) for v in np.asarray(values, dtype=np.float32))


@dataclass(frozen=True)
class SpaceDescriptor:
    """Dimension names and levels as stored in the LUT file (f32 levels)"""
    dimensions: Tuple[Tuple[str, Tuple[float, ...]], ...]

    @classmethod
    def from_space(cls, space: ParameterSpace) -> "SpaceDescriptor":
        return cls(tuple((d.name, _f32(d.values)) for d in space.dimensions))

    @property
    def radices(self) -> Tuple[int, ...]:
        return tuple(len(levels) for _, levels in self.dimensions)

    @property
    def total(self) -> int:
        return math.prod(self.radices)

    def matches(self, space: ParameterSpace) -> bool:
        return self == SpaceDescriptor.from_space(space)


@dataclass(frozen=True)
class LutHeader:
    space: SpaceDescriptor
    lod_thresholds: Tuple[float, ...]
    cpu_bins: Tuple[int, ...]
    gpu_bins: Tuple[int, ...]
    percentile: float
    phi_fingerprint: int
    psi_fingerprint: int
    entry_width: int
    built_at: Optional[str] = field(default=None, compare=False)
    build_seconds: Optional[float] = field(default=None, compare=False)

    @property
    def entry_count(self) -> int:
        return len(self.lod_thresholds) * len(self.cpu_bins) * len(self.gpu_bins)

    @property
    def search_percentile(self) -> float:
        """Percentile the entries were selected with"""
        return stored_percentile(self.percentile)


@dataclass(frozen=True)
class LookupTable:
    header: LutHeader
    payload: bytes

    def __post_init__(self):
        expected = packed_size(self.header.entry_count, self.header.entry_width)
        if len(self.payload) != expected:
            raise ValidationError(f"Payload has {len(self.payload)} bytes, expected {expected}")

    @property
    def entry_count(self) -> int:
        return self.header.entry_count

    @property
    def radices(self) -> Tuple[int, ...]:
        return self.header.space.radices

    def entry(self, cell: int) -> int:
        return unpack_one(self.header.entry_width, self.payload, cell)

    def codes(self) -> List[int]:
        return unpack(self.header.entry_width, self.payload, self.entry_count)


@dataclass(frozen=True)
class LutBuildConfig:
    space: ParameterSpace
    lods: LodSet
    grid: HardwareGrid
    phi: GbdtModel
    psi: GbdtModel
    time_percentile: float = 0.20

    def __post_init__(self):
        if self.phi.target_name != "ssim":
            raise ValidationError(f"phi must predict ssim, got '{self.phi.target_name}'")
        if self.psi.target_name != "time_ms":
            raise ValidationError(f"psi must predict time_ms, got '{self.psi.target_name}'")
        check_percentile(self.time_percentile)
        expected = feature_names(self.space)
        for label, model in (("phi", self.phi), ("psi", self.psi)):
            if model.width != len(expected) or (model.feature_names and tuple(model.feature_names) != expected):
                raise ValidationError(f"{label} was trained on features {list(model.feature_names)}, space needs {list(expected)}")


def check_percentile(percentile: float) -> None:
    if not 0.0 < percentile <= 1.0:
        raise ValidationError(f"time_percentile must lie in (0, 1], got {percentile}")


def cell_index(lods: LodSet, grid: HardwareGrid, l: int, c: int, g: int) -> int:
    """(l * |C| + c) * |G| + g"""
    n_cpu, n_gpu = len(grid.cpu_bins), len(grid.gpu_bins)
    if not (0 <= l < len(lods) and 0 <= c < n_cpu and 0 <= g < n_gpu):
        raise ValidationError(f"Cell ({l}, {c}, {g}) outside {len(lods)}x{n_cpu}x{n_gpu} grid")
    return (l * n_cpu + c) * n_gpu + g


def cell_coordinates(lods: LodSet, grid: HardwareGrid, cell: int) -> Tuple[int, int, int]:
    l, c, g = decode_digits((len(lods), len(grid.cpu_bins), len(grid.gpu_bins)), cell)
    return l, c, g


def kept_count(n: int, percentile: float) -> int:
    """Phase-1 survivors: max(1, ceil(percentile * n))"""
    return max(1, math.ceil(percentile * n - 1e-9))


def stored_percentile(percentile: float) -> float:
    """
    Shortest decimal that round-trips through the f32 header field

    Builds search with this value and readers recover it from the header, so a
    reloaded table reproduces the survivor counts it was built with.
    """
    return float(np.format_float_positional(np.float32(percentile), unique=True, trim="-"))


def two_phase_search(predicted: Sequence[Tuple[int, float, float]], percentile: float) -> int:
    """
    Two-phase selection over (code, ssim, time) predictions

    Phase 1 keeps the fastest max(1, ceil(percentile * N)) entries (ties by
    code); phase 2 returns the highest ssim among them (ties to the smaller
    time, then the smaller code).
    """
    if not predicted:
        raise ValidationError("two_phase_search needs at least one candidate")
    by_time = sorted(predicted, key=lambda entry: (entry[2], entry[0]))
    kept = by_time[:kept_count(len(by_time), percentile)]
    winner = min(kept, key=lambda entry: (-entry[1], entry[2], entry[0]))
    return int(winner[0])


def select_code(ssim: np.ndarray, time_ms: np.ndarray, percentile: float) -> int:
    """Vectorized two_phase_search where position i holds code i"""
    codes = np.arange(len(ssim))
    kept = np.lexsort((codes, time_ms))[:kept_count(len(ssim), percentile)]
    best = np.lexsort((kept, time_ms[kept], -ssim[kept]))[0]
    return int(kept[best])


def cell_features(levels: np.ndarray, lod: int, cpu_freq: float, gpu_freq: float) -> np.ndarray:
    """Feature rows of every code (rows of `levels`) at one (lod, cpu, gpu) point"""
    n = levels.shape[0]
    return np.column_stack([
        levels.astype(np.float64),
        np.full(n, float(lod)),
        np.full(n, float(cpu_freq)),
        np.full(n, float(gpu_freq)),
    ])


def select_for_cell(phi: GbdtModel, psi: GbdtModel, levels: np.ndarray, lod: int,
                    cpu_freq: float, gpu_freq: float, percentile: float) -> int:
    """
    Direct model-based selection at one point, without a LUT

    Args:
        levels: level matrix of the space (see level_matrix / digits_matrix)
    """
    features = cell_features(levels, lod, cpu_freq, gpu_freq)
    ssim, time_ms = predict(phi, features), predict(psi, features)
    return two_phase_search(list(zip(range(len(ssim)), ssim.tolist(), time_ms.tolist())), percentile)


Scorer = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


def _assemble(space: ParameterSpace, lods: LodSet, grid: HardwareGrid, percentile: float,
              score: Scorer, fingerprints: Tuple[int, int]) -> LookupTable:
    started = time.perf_counter()
    percentile = stored_percentile(percentile)
    levels = level_matrix(space)
    n_codes = space.total
    cells = [(l, c, g) for l in range(len(lods)) for c in range(len(grid.cpu_bins)) for g in range(len(grid.gpu_bins))]

    winners: List[int] = []
    for start in range(0, len(cells), CELL_BATCH):
        batch = cells[start:start + CELL_BATCH]
        features = np.vstack([
            cell_features(levels, l, grid.cpu_bins[c], grid.gpu_bins[g]) for l, c, g in batch
        ])
        ssim, time_ms = score(features)
        for k in range(len(batch)):
            rows = slice(k * n_codes, (k + 1) * n_codes)
            winners.append(select_code(ssim[rows], time_ms[rows], percentile))

    width = bit_width(n_codes)
    elapsed = time.perf_counter() - started
    header = LutHeader(
        space=SpaceDescriptor.from_space(space),
        lod_thresholds=_f32(lods.thresholds),
        cpu_bins=grid.cpu_bins,
        gpu_bins=grid.gpu_bins,
        percentile=_f32([percentile])[0],
        phi_fingerprint=fingerprints[0],
        psi_fingerprint=fingerprints[1],
        entry_width=width,
        built_at=datetime.now(timezone.utc).isoformat(),
        build_seconds=elapsed,
    )
    table = LookupTable(header=header, payload=pack(width, winners))
    logger.info(f"SUCCESS Built LUT: {len(cells)} cells x {n_codes} codes, {width}-bit entries, "
                f"{len(table.payload)} B payload in {elapsed:.3f}s")
    return table


def build_lut(cfg: LutBuildConfig) -> LookupTable:
    """Distill the phi/psi pair into a lookup table"""
    def score(features: np.ndarray):
        return predict(cfg.phi, features), predict(cfg.psi, features)

    return _assemble(cfg.space, cfg.lods, cfg.grid, cfg.time_percentile, score,
                     (model_fingerprint(cfg.phi), model_fingerprint(cfg.psi)))


def build_reference_lut(oracle_cfg: OracleConfig, grid: HardwareGrid, percentile: float = 0.20) -> LookupTable:
    """Same search run on noiseless oracle values instead of model predictions"""
    check_percentile(percentile)
    n_dims = len(oracle_cfg.space.dimensions)

    def score(features: np.ndarray):
        return ground_truth(
            oracle_cfg,
            features[:, :n_dims].astype(np.int64),
            features[:, n_dims].astype(np.int64),
            features[:, n_dims + 1],
            features[:, n_dims + 2],
        )

    return _assemble(oracle_cfg.space, oracle_cfg.lods, grid, percentile, score, (0, 0))
