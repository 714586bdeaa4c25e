# app/services/runtime.py

"""
Adaptive Runtime
Per-frame LUT lookup: snap clocks to the grid, read the cell, decode the code
"""

import logging
import time
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from app.models.domain import ParameterVector
from app.models.errors import ValidationError
from app.services.discretization import decode_digits, snap_frequency
from app.services.frequency_sources import FrequencySource
from app.services.lut_builder import LookupTable

logger = logging.getLogger(__name__)

MIN_BENCH_ITERATIONS = 1000


@dataclass(frozen=True)
class QueryResult:
    params: ParameterVector
    cell: Tuple[int, int, int]  # (lod, cpu bin, gpu bin)
    code: int


@dataclass(frozen=True)
class LatencyStats:
    iterations: int
    min_ns: float
    median_ns: float
    p99_ns: float
    mean_ns: float

    @property
    def median_ms(self) -> float:
        return self.median_ns / 1e6

    @property
    def p99_ms(self) -> float:
        return self.p99_ns / 1e6


def query(lut: LookupTable, lod: int, cpu_freq: float, gpu_freq: float) -> QueryResult:
    """
    Look up the parameters for one frame

    Raises:
        ValidationError: lod outside the LUT's LOD set
    """
    header = lut.header
    if not 0 <= lod < len(header.lod_thresholds):
        raise ValidationError(f"LOD index {lod} out of range [0, {len(header.lod_thresholds)})")
    c = snap_frequency(header.cpu_bins, cpu_freq)
    g = snap_frequency(header.gpu_bins, gpu_freq)
    code = lut.entry((lod * len(header.cpu_bins) + c) * len(header.gpu_bins) + g)
    return QueryResult(params=ParameterVector(decode_digits(header.space.radices, code)), cell=(lod, c, g), code=code)


def run_frame_loop(lut: LookupTable, source: FrequencySource, lod_schedule: Sequence[int]) -> List[QueryResult]:
    """One query per scheduled frame, reading the source once per frame"""
    if not lod_schedule:
        raise ValidationError("LOD schedule must be non-empty")
    results = []
    for lod in lod_schedule:
        cpu_freq, gpu_freq = source.read()
        results.append(query(lut, lod, cpu_freq, gpu_freq))
    return results


def bench_query_latency(lut: LookupTable, iterations: int = 100_000, seed: int = 1234) -> LatencyStats:
    """
    Wall-clock latency of single queries over randomized valid inputs

    Inputs are drawn before timing starts; each query is timed on its own.
    """
    if iterations < MIN_BENCH_ITERATIONS:
        raise ValidationError(f"Benchmark needs at least {MIN_BENCH_ITERATIONS} iterations, got {iterations}")
    header = lut.header
    rng = np.random.default_rng(seed)
    lods = rng.integers(0, len(header.lod_thresholds), size=iterations).tolist()
    cpu_lo, cpu_hi = header.cpu_bins[0] * 0.9, header.cpu_bins[-1] * 1.1
    gpu_lo, gpu_hi = header.gpu_bins[0] * 0.9, header.gpu_bins[-1] * 1.1
    cpus = rng.uniform(cpu_lo, cpu_hi, size=iterations).tolist()
    gpus = rng.uniform(gpu_lo, gpu_hi, size=iterations).tolist()

    samples = np.empty(iterations, dtype=np.float64)
    clock = time.perf_counter_ns
    for i in range(iterations):
        lod, cpu, gpu = lods[i], cpus[i], gpus[i]
        t0 = clock()
        query(lut, lod, cpu, gpu)
        samples[i] = clock() - t0

    stats = LatencyStats(
        iterations=iterations,
        min_ns=float(samples.min()),
        median_ns=float(np.median(samples)),
        p99_ns=float(np.percentile(samples, 99)),
        mean_ns=float(samples.mean()),
    )
    logger.info(f"Query latency over {iterations} queries: median {stats.median_ns:.0f} ns, p99 {stats.p99_ns:.0f} ns")
    return stats
