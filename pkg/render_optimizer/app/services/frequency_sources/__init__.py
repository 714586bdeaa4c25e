"""
Frequency Sources Package
Provides a unified interface for per-frame CPU/GPU clock readings
"""

from .base_source import FrequencySource
from .fixed_source import FixedSource
from .random_walk_source import RandomWalkSource
from .scripted_source import ScriptedSource

__all__ = [
    'FrequencySource',
    'FixedSource',
    'RandomWalkSource',
    'ScriptedSource',
]

# Source registry for factory pattern
SOURCE_REGISTRY = {
    'fixed': FixedSource,
    'scripted': ScriptedSource,
    'random_walk': RandomWalkSource,
}


def get_available_sources():
    """Get list of available source kinds"""
    return list(SOURCE_REGISTRY.keys())


def create_frequency_source(kind: str, **kwargs) -> FrequencySource:
    """
    Factory function to create a frequency source

    Args:
        kind: str ('fixed', 'scripted', 'random_walk')
        **kwargs: constructor arguments of that source

    Returns:
        FrequencySource instance

    Raises:
        ValueError: If kind not supported
    """
    if kind not in SOURCE_REGISTRY:
        available = ', '.join(get_available_sources())
        raise ValueError(f"Frequency source '{kind}' not supported. Available: {available}")

    source_class = SOURCE_REGISTRY[kind]
    return source_class(**kwargs)
