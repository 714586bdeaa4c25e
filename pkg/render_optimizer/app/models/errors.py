# app/models/errors.py

from typing import Optional


class RenderOptError(Exception):
    """Base class for every expected pipeline failure"""


class ValidationError(RenderOptError, ValueError):
    """Invalid vector, code, cell, LOD index, feature width or space/model pairing"""


class ConfigError(RenderOptError, ValueError):
    """Pipeline configuration rejected"""

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class TrainingError(RenderOptError):
    """Training cannot proceed on the given data"""


class ModelFormatError(RenderOptError):
    """Model file could not be parsed"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class LutFormatError(RenderOptError):
    """LUT file is truncated, corrupted or of an unknown version"""
