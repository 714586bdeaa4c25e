from typing import Tuple

from app.models.errors import ValidationError
from app.services.frequency_sources.base_source import FrequencySource


class FixedSource(FrequencySource):
    """Constant clocks"""

    def __init__(self, cpu_freq: float, gpu_freq: float):
        if cpu_freq <= 0 or gpu_freq <= 0:
            raise ValidationError(f"Frequencies must be positive, got cpu={cpu_freq} gpu={gpu_freq}")
        self.cpu_freq = float(cpu_freq)
        self.gpu_freq = float(gpu_freq)

    def read(self) -> Tuple[float, float]:
        return self.cpu_freq, self.gpu_freq
