"""
Base Frequency Source Interface
Abstract base class for all hardware-clock telemetry sources
"""

from abc import ABC, abstractmethod
from typing import Tuple


class FrequencySource(ABC):
    """Produces (cpu_freq MHz, gpu_freq MHz) once per frame. Single caller only."""

    @abstractmethod
    def read(self) -> Tuple[float, float]:
        """
        Current clock state

        Returns:
            Tuple of (cpu_freq, gpu_freq), both strictly positive
        """
        pass

    def reset(self) -> None:
        """Rewind to the first reading; sources without state ignore this"""
        pass
