# app/services/evaluation_service.py

"""
Evaluation Harness
Replays scenarios through the LUT and scores the chosen parameters against the
best-quality baseline on the noiseless oracle.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.models.domain import CPU_COLUMN, GPU_COLUMN
from app.models.errors import ValidationError
from app.services.discretization import digits_matrix
from app.services.frequency_sources import FrequencySource, ScriptedSource
from app.services.gbdt_trainer import GbdtModel, dumps_model, model_fingerprint
from app.services.lut_builder import LookupTable, select_for_cell
from app.services.lut_format import dumps_lut
from app.services.oracle import OracleConfig, ground_truth
from app.services.runtime import query, run_frame_loop

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Scenario:
    """Per-frame LOD and true (unsnapped) clocks"""
    lod_schedule: Tuple[int, ...]
    frequencies: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        if not self.lod_schedule:
            raise ValidationError("Scenario needs at least one frame")
        if len(self.lod_schedule) != len(self.frequencies):
            raise ValidationError(f"Scenario has {len(self.lod_schedule)} LODs but {len(self.frequencies)} frequency readings")

    @classmethod
    def from_source(cls, source: FrequencySource, lod_schedule: Sequence[int]) -> "Scenario":
        return cls(tuple(int(l) for l in lod_schedule), tuple(source.read() for _ in lod_schedule))

    @classmethod
    def fixed(cls, cpu_freq: float, gpu_freq: float, lod_schedule: Sequence[int]) -> "Scenario":
        return cls(tuple(int(l) for l in lod_schedule), tuple((float(cpu_freq), float(gpu_freq)) for _ in lod_schedule))

    def __len__(self) -> int:
        return len(self.lod_schedule)


def lod_schedule(levels: Sequence[int], frames: int, period: int = 1) -> List[int]:
    """Cycle through `levels`, holding each for `period` frames"""
    if not levels or frames < 1 or period < 1:
        raise ValidationError("LOD schedule needs levels, frames >= 1 and period >= 1")
    return [int(levels[(i // period) % len(levels)]) for i in range(frames)]


@dataclass
class EvalReport:
    frames: pd.DataFrame
    time_reduction_pct: float
    image_error_pct: float
    adaptivity_count: int
    extras: Dict[str, Any] = field(default_factory=dict)

    def summary(self) -> Dict[str, Any]:
        row = {
            "frames": len(self.frames),
            "mean_time_ms": float(self.frames["time_ms"].mean()),
            "mean_best_time_ms": float(self.frames["best_time_ms"].mean()),
            "time_reduction_pct": self.time_reduction_pct,
            "image_error_pct": self.image_error_pct,
            "adaptivity_count": self.adaptivity_count,
        }
        row.update(self.extras)
        return row


def check_compatible(lut: LookupTable, oracle_cfg: OracleConfig) -> None:
    if not lut.header.space.matches(oracle_cfg.space):
        raise ValidationError("LUT and oracle were built for different parameter spaces")
    if len(lut.header.lod_thresholds) != len(oracle_cfg.lods):
        raise ValidationError(f"LUT has {len(lut.header.lod_thresholds)} LODs, oracle has {len(oracle_cfg.lods)}")


def evaluate(lut: LookupTable, oracle_cfg: OracleConfig, scenario: Scenario) -> EvalReport:
    """
    Query the LUT every frame and score chosen vs. best-quality parameters

    Args:
        lut: LookupTable
        oracle_cfg: OracleConfig providing the noiseless ground truth
        scenario: Scenario with true frame frequencies

    Returns:
        EvalReport with per-frame records and aggregates
    """
    check_compatible(lut, oracle_cfg)
    results = run_frame_loop(lut, ScriptedSource(scenario.frequencies), scenario.lod_schedule)

    n = len(results)
    lods = np.array(scenario.lod_schedule, dtype=np.int64)
    cpu = np.array([f[0] for f in scenario.frequencies], dtype=np.float64)
    gpu = np.array([f[1] for f in scenario.frequencies], dtype=np.float64)
    chosen = np.array([r.params.indices for r in results], dtype=np.int64)
    best = np.tile(np.array(oracle_cfg.space.best_quality_index, dtype=np.int64), (n, 1))

    ssim, time_ms = ground_truth(oracle_cfg, chosen, lods, cpu, gpu)
    _, best_time = ground_truth(oracle_cfg, best, lods, cpu, gpu)
    codes = np.array([r.code for r in results], dtype=np.int64)

    frames = pd.DataFrame({
        "frame": np.arange(n),
        "lod": lods,
        CPU_COLUMN: cpu,
        GPU_COLUMN: gpu,
        "code": codes,
        "time_ms": time_ms,
        "ssim": ssim,
        "best_time_ms": best_time,
    })
    report = EvalReport(
        frames=frames,
        time_reduction_pct=float(100.0 * (1.0 - time_ms.mean() / best_time.mean())),
        image_error_pct=float(np.mean(1.0 - ssim) * 100.0),
        adaptivity_count=int(np.count_nonzero(codes[1:] != codes[:-1])),
    )
    logger.info(f"Evaluated {n} frames: time reduction {report.time_reduction_pct:.2f}%, "
                f"image error {report.image_error_pct:.3f}%, {report.adaptivity_count} parameter changes")
    return report


def sweep_gpu_frequency(lut: LookupTable, oracle_cfg: OracleConfig, freq_list: Sequence[float],
                        cpu_freq: Optional[float] = None,
                        lods: Optional[Sequence[int]] = None) -> List[Tuple[float, EvalReport]]:
    """
    One fixed-frequency evaluation per GPU frequency

    Each point runs one frame per LOD in `lods` (all LODs by default) at the
    given GPU clock and a fixed CPU clock (the oracle's CPU midpoint by default).
    """
    if not freq_list:
        raise ValidationError("Sweep frequency list must be non-empty")
    cpu_freq = oracle_cfg.cpu_ref if cpu_freq is None else cpu_freq
    lods = list(range(len(oracle_cfg.lods))) if lods is None else list(lods)
    points = [(float(f), evaluate(lut, oracle_cfg, Scenario.fixed(cpu_freq, f, lods))) for f in freq_list]
    logger.info(f"SUCCESS Swept {len(points)} GPU frequencies from {points[0][0]:g} to {points[-1][0]:g} MHz")
    return points


def sweep_rows(points: Sequence[Tuple[float, EvalReport]]) -> List[Dict[str, Any]]:
    """One CSV row per swept frequency"""
    rows = []
    for gpu_freq, report in points:
        summary = report.summary()
        rows.append({
            GPU_COLUMN: gpu_freq,
            CPU_COLUMN: float(report.frames[CPU_COLUMN].iloc[0]),
            "mean_time_ms": summary["mean_time_ms"],
            "mean_best_time_ms": summary["mean_best_time_ms"],
            "time_reduction_pct": summary["time_reduction_pct"],
            "image_error_pct": summary["image_error_pct"],
        })
    return rows


@dataclass
class AblationRecord:
    cells: int
    matches: int
    mismatches: List[Dict[str, Any]]
    model_latency_ns: float
    lut_latency_ns: float
    model_bytes: int
    lut_file_bytes: int
    lut_payload_bytes: int

    @property
    def match_rate(self) -> float:
        return self.matches / self.cells if self.cells else 1.0

    @property
    def latency_ratio(self) -> float:
        return self.model_latency_ns / self.lut_latency_ns if self.lut_latency_ns else float("inf")

    @property
    def memory_ratio(self) -> float:
        return self.model_bytes / self.lut_file_bytes

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cells": self.cells,
            "matches": self.matches,
            "match_rate": self.match_rate,
            "mismatches": self.mismatches,
            "model_latency_ns": self.model_latency_ns,
            "lut_latency_ns": self.lut_latency_ns,
            "latency_ratio": self.latency_ratio,
            "model_bytes": self.model_bytes,
            "lut_file_bytes": self.lut_file_bytes,
            "lut_payload_bytes": self.lut_payload_bytes,
            "memory_ratio": self.memory_ratio,
        }


def grid_cell_points(lut: LookupTable) -> List[Tuple[int, float, float]]:
    """Every cell of the LUT as (lod, cpu_freq, gpu_freq) on exact bin values"""
    h = lut.header
    return [(l, float(c), float(g)) for l in range(len(h.lod_thresholds)) for c in h.cpu_bins for g in h.gpu_bins]


def ablation_lut_vs_model(phi: GbdtModel, psi: GbdtModel, lut: LookupTable,
                          cell_points: Sequence[Tuple[int, float, float]],
                          lut_repeats: int = 200) -> AblationRecord:
    """
    Check that every listed cell stores what a fresh model-based search picks,
    and compare the cost of both paths

    Args:
        cell_points: (lod, cpu_freq, gpu_freq) tuples on exact grid values
        lut_repeats: LUT queries timed per cell
    """
    h = lut.header
    if (model_fingerprint(phi), model_fingerprint(psi)) != (h.phi_fingerprint, h.psi_fingerprint):
        logger.warning("Model fingerprints differ from the ones recorded in the LUT header")
    for lod, cpu, gpu in cell_points:
        if cpu not in h.cpu_bins or gpu not in h.gpu_bins:
            raise ValidationError(f"Point ({lod}, {cpu}, {gpu}) is not on the LUT grid")

    levels = digits_matrix(h.space.radices)
    mismatches = []
    model_times, lut_times = [], []
    clock = time.perf_counter_ns
    for lod, cpu, gpu in cell_points:
        t0 = clock()
        fresh = select_for_cell(phi, psi, levels, lod, cpu, gpu, h.search_percentile)
        model_times.append(clock() - t0)

        t0 = clock()
        for _ in range(lut_repeats):
            result = query(lut, lod, cpu, gpu)
        lut_times.append((clock() - t0) / lut_repeats)

        if result.code != fresh:
            mismatches.append({"cell": list(result.cell), "stored": result.code, "fresh": fresh})

    record = AblationRecord(
        cells=len(cell_points),
        matches=len(cell_points) - len(mismatches),
        mismatches=mismatches,
        model_latency_ns=float(np.median(model_times)) if model_times else 0.0,
        lut_latency_ns=float(np.median(lut_times)) if lut_times else 0.0,
        model_bytes=len(dumps_model(phi)) + len(dumps_model(psi)),
        lut_file_bytes=len(dumps_lut(lut)),
        lut_payload_bytes=len(lut.payload),
    )
    if mismatches:
        logger.error(f"ERROR: {len(mismatches)} of {record.cells} checked cells differ from fresh model selection")
    logger.info(f"Ablation: match rate {record.match_rate:.2%}, latency ratio {record.latency_ratio:.0f}x, "
                f"memory ratio {record.memory_ratio:.0f}x")
    return record
