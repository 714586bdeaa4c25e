# app/services/oracle.py

"""
Synthetic Rendering Oracle
Closed-form stand-in for the engine's (params, LOD, cpu, gpu) -> (SSIM, time) function
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.models.domain import (
    CPU_COLUMN, GPU_COLUMN, LOD_COLUMN, SSIM_COLUMN, TIME_COLUMN,
    ConfigPoint, Dataset, LodSet, ParameterSpace, RenderOutcome, param_column,
)
from app.models.errors import ValidationError
from app.services.discretization import config_index, level_matrix

logger = logging.getLogger(__name__)

BASE_TIME_MS = 4.0
BASE_WORK = 0.25
CPU_OVERHEAD_MS = 0.2


@dataclass(frozen=True)
class OracleConfig:
    """Parameterization of the synthetic rendering function"""
    space: ParameterSpace
    lods: LodSet
    cpu_freq_range: Tuple[float, float]
    gpu_freq_range: Tuple[float, float]
    cost_weights: Tuple[float, ...]
    quality_weights: Tuple[float, ...]
    interaction_strength: float = 0.5
    noise_std_time: float = 0.03
    noise_std_ssim: float = 0.002
    seed: int = 0

    def __post_init__(self):
        k = len(self.space.dimensions)
        object.__setattr__(self, "cost_weights", tuple(float(w) for w in self.cost_weights))
        object.__setattr__(self, "quality_weights", tuple(float(w) for w in self.quality_weights))
        object.__setattr__(self, "cpu_freq_range", tuple(float(f) for f in self.cpu_freq_range))
        object.__setattr__(self, "gpu_freq_range", tuple(float(f) for f in self.gpu_freq_range))
        if len(self.cost_weights) != k or len(self.quality_weights) != k:
            raise ValidationError(f"Oracle weights must have one entry per dimension ({k})")
        if min(self.cost_weights) <= 0 or min(self.quality_weights) <= 0:
            raise ValidationError("Oracle weights must be positive")
        if self.interaction_strength < 0:
            raise ValidationError("interaction_strength must be >= 0")
        if self.noise_std_time < 0 or self.noise_std_ssim < 0:
            raise ValidationError("Noise levels must be >= 0")
        for label, (lo, hi) in (("cpu", self.cpu_freq_range), ("gpu", self.gpu_freq_range)):
            if not 0 < lo < hi:
                raise ValidationError(f"{label} frequency range must satisfy 0 < min < max, got ({lo}, {hi})")

    @classmethod
    def with_defaults(cls, space: ParameterSpace, lods: LodSet,
                      cpu_freq_range: Tuple[float, float], gpu_freq_range: Tuple[float, float],
                      cost_weights: Optional[Sequence[float]] = None,
                      quality_weights: Optional[Sequence[float]] = None,
                      **kwargs) -> "OracleConfig":
        """Uniform 1/k weights unless given explicitly"""
        k = len(space.dimensions)
        uniform = tuple([1.0 / k] * k)
        return cls(
            space=space,
            lods=lods,
            cpu_freq_range=cpu_freq_range,
            gpu_freq_range=gpu_freq_range,
            cost_weights=tuple(cost_weights) if cost_weights is not None else uniform,
            quality_weights=tuple(quality_weights) if quality_weights is not None else uniform,
            **kwargs,
        )

    @property
    def cpu_ref(self) -> float:
        return (self.cpu_freq_range[0] + self.cpu_freq_range[1]) / 2.0

    @property
    def gpu_ref(self) -> float:
        return (self.gpu_freq_range[0] + self.gpu_freq_range[1]) / 2.0

    @property
    def interaction_pair(self) -> Optional[Tuple[int, int]]:
        """The two most expensive dimensions; ties go to the lower index"""
        if len(self.cost_weights) < 2:
            return None
        order = sorted(range(len(self.cost_weights)), key=lambda d: (-self.cost_weights[d], d))
        return order[0], order[1]


def _normalized_levels(space: ParameterSpace, levels: np.ndarray) -> np.ndarray:
    denom = np.array([max(c - 1, 1) for c in space.radices], dtype=np.float64)
    return levels.astype(np.float64) / denom


def ground_truth(cfg: OracleConfig, levels: np.ndarray, lod: np.ndarray,
                 cpu_freq: np.ndarray, gpu_freq: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Noiseless (ssim, time_ms) for a batch of configurations

    Args:
        levels: (n, dims) level indices
        lod: (n,) LOD indices
        cpu_freq, gpu_freq: (n,) frequencies in MHz

    Returns:
        (ssim, time_ms) arrays of shape (n,)
    """
    norm = _normalized_levels(cfg.space, np.atleast_2d(levels))
    best = _normalized_levels(cfg.space, np.array([cfg.space.best_quality_index]))[0]
    n = norm.shape[0]

    work = np.zeros(n)
    shortfall = np.zeros(n)
    for d in range(norm.shape[1]):
        work = work + cfg.cost_weights[d] * norm[:, d]
        shortfall = shortfall + cfg.quality_weights[d] * np.maximum(best[d] - norm[:, d], 0.0)
    pair = cfg.interaction_pair
    if pair is not None:
        a, b = pair
        work = work + cfg.interaction_strength * norm[:, a] * norm[:, b]

    lod_factor = np.asarray(cfg.lods.thresholds, dtype=np.float64)[np.asarray(lod, dtype=np.int64)]
    gpu_ratio = cfg.gpu_ref / np.asarray(gpu_freq, dtype=np.float64)
    cpu_ratio = cfg.cpu_ref / np.asarray(cpu_freq, dtype=np.float64)

    time_ms = BASE_TIME_MS * (BASE_WORK + work) * lod_factor * gpu_ratio + CPU_OVERHEAD_MS * cpu_ratio
    ssim = np.clip(1.0 - shortfall * lod_factor, 0.0, 1.0)
    return ssim, time_ms


def _point_noise(cfg: OracleConfig, code: int, lod: int, cpu_freq: float, gpu_freq: float) -> Tuple[float, float]:
    """Per-point noise keyed by configuration, not by draw order"""
    rng = np.random.default_rng([cfg.seed, code, lod, int(round(cpu_freq)), int(round(gpu_freq))])
    eps_time = rng.normal(0.0, cfg.noise_std_time) if cfg.noise_std_time > 0 else 0.0
    eps_ssim = rng.normal(0.0, cfg.noise_std_ssim) if cfg.noise_std_ssim > 0 else 0.0
    return float(eps_time), float(eps_ssim)


def _apply_noise(time_ms: float, ssim: float, eps_time: float, eps_ssim: float) -> Tuple[float, float]:
    return max(time_ms * (1.0 + eps_time), 0.0), min(max(ssim + eps_ssim, 0.0), 1.0)


def check_point(cfg: OracleConfig, point: ConfigPoint) -> int:
    """Validate a point against the oracle's domain and return its config code"""
    code = config_index(cfg.space, point.params)
    cfg.lods.check(point.lod)
    for label, value, (lo, hi) in (("cpu", point.cpu_freq, cfg.cpu_freq_range),
                                   ("gpu", point.gpu_freq, cfg.gpu_freq_range)):
        if not lo <= value <= hi:
            raise ValidationError(f"{label} frequency {value} outside oracle range [{lo}, {hi}]")
    return code


def oracle_evaluate(cfg: OracleConfig, point: ConfigPoint, noisy: bool = False) -> RenderOutcome:
    """Evaluate one configuration point"""
    code = check_point(cfg, point)
    ssim, time_ms = ground_truth(
        cfg,
        np.array([point.params.indices]),
        np.array([point.lod]),
        np.array([point.cpu_freq]),
        np.array([point.gpu_freq]),
    )
    ssim_value, time_value = float(ssim[0]), float(time_ms[0])
    if noisy:
        eps_time, eps_ssim = _point_noise(cfg, code, point.lod, point.cpu_freq, point.gpu_freq)
        time_value, ssim_value = _apply_noise(time_value, ssim_value, eps_time, eps_ssim)
    return RenderOutcome(ssim=ssim_value, time_ms=time_value)


def generate_dataset(cfg: OracleConfig, n_samples: int) -> Dataset:
    """
    Draw i.i.d. configuration points and record noisy outcomes

    Args:
        cfg: OracleConfig
        n_samples: number of rows, >= 1

    Returns:
        Dataset whose rows follow draw order
    """
    if n_samples < 1:
        raise ValidationError(f"n_samples must be >= 1, got {n_samples}")

    space = cfg.space
    rng = np.random.default_rng(cfg.seed)
    codes = rng.integers(0, space.total, size=n_samples)
    lods = rng.integers(0, len(cfg.lods), size=n_samples)
    cpu_lo, cpu_hi = cfg.cpu_freq_range
    gpu_lo, gpu_hi = cfg.gpu_freq_range
    cpu = np.clip(np.rint(rng.uniform(cpu_lo, cpu_hi, size=n_samples)), np.ceil(cpu_lo), np.floor(cpu_hi))
    gpu = np.clip(np.rint(rng.uniform(gpu_lo, gpu_hi, size=n_samples)), np.ceil(gpu_lo), np.floor(gpu_hi))

    levels = level_matrix(space)[codes]
    ssim, time_ms = ground_truth(cfg, levels, lods, cpu, gpu)

    for i in range(n_samples):
        eps_time, eps_ssim = _point_noise(cfg, int(codes[i]), int(lods[i]), cpu[i], gpu[i])
        time_ms[i], ssim[i] = _apply_noise(time_ms[i], ssim[i], eps_time, eps_ssim)

    frame = pd.DataFrame({param_column(name): levels[:, d] for d, name in enumerate(space.names)})
    frame[LOD_COLUMN] = lods.astype(np.int64)
    frame[CPU_COLUMN] = cpu.astype(np.int64)
    frame[GPU_COLUMN] = gpu.astype(np.int64)
    frame[SSIM_COLUMN] = ssim
    frame[TIME_COLUMN] = time_ms

    logger.info(f"Generated {n_samples} samples over {space.total} configurations (seed={cfg.seed})")
    return Dataset(
        space=space,
        lods=cfg.lods,
        cpu_freq_range=cfg.cpu_freq_range,
        gpu_freq_range=cfg.gpu_freq_range,
        seed=cfg.seed,
        frame=frame,
    )
