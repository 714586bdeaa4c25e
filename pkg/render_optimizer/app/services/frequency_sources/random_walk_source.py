from typing import Optional, Tuple

import numpy as np

from app.models.errors import ValidationError
from app.services.frequency_sources.base_source import FrequencySource


class RandomWalkSource(FrequencySource):
    """
    Seeded bounded drift, clamped to the declared ranges.

    Each read returns the current state and then moves each clock by a
    uniform step in [-max_step, max_step], rounded to whole MHz.
    """

    def __init__(self, cpu_range: Tuple[float, float], gpu_range: Tuple[float, float],
                 max_step: Tuple[float, float] = (50.0, 50.0), seed: int = 0,
                 start: Optional[Tuple[float, float]] = None):
        for label, (lo, hi) in (("cpu", cpu_range), ("gpu", gpu_range)):
            if not 0 < lo <= hi:
                raise ValidationError(f"{label} range must satisfy 0 < min <= max, got ({lo}, {hi})")
        if min(max_step) < 0:
            raise ValidationError("max_step must be >= 0")
        self.low = np.array([cpu_range[0], gpu_range[0]], dtype=np.float64)
        self.high = np.array([cpu_range[1], gpu_range[1]], dtype=np.float64)
        self.max_step = np.array(max_step, dtype=np.float64)
        self.seed = seed
        self.start = np.array(start if start is not None else (self.low + self.high) / 2.0, dtype=np.float64)
        self.reset()

    def reset(self) -> None:
        self.rng = np.random.default_rng(self.seed)
        self.state = np.clip(np.rint(self.start), self.low, self.high)

    def read(self) -> Tuple[float, float]:
        cpu, gpu = float(self.state[0]), float(self.state[1])
        step = np.rint(self.rng.uniform(-self.max_step, self.max_step))
        self.state = np.clip(self.state + step, self.low, self.high)
        return cpu, gpu
