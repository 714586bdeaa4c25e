from typing import List, Sequence, Tuple

from app.models.errors import ValidationError
from app.services.frequency_sources.base_source import FrequencySource
from app.utils.dataset_io import load_trace


class ScriptedSource(FrequencySource):
    """Replays a recorded trace; the last reading repeats once the trace runs out"""

    def __init__(self, trace: Sequence[Tuple[float, float]]):
        if not trace:
            raise ValidationError("Scripted trace must be non-empty")
        if any(cpu <= 0 or gpu <= 0 for cpu, gpu in trace):
            raise ValidationError("Scripted trace contains non-positive frequencies")
        self.trace: List[Tuple[float, float]] = [(float(c), float(g)) for c, g in trace]
        self.position = 0

    @classmethod
    def from_csv(cls, path: str) -> "ScriptedSource":
        return cls(load_trace(path))

    def read(self) -> Tuple[float, float]:
        reading = self.trace[min(self.position, len(self.trace) - 1)]
        self.position += 1
        return reading

    def reset(self) -> None:
        self.position = 0
