# app/services/discretization.py

"""
Configuration indexing and frequency snapping.

Codes are mixed-radix numbers with dimension 0 as the most significant digit.
"""

from bisect import bisect_left
from typing import Iterator, Sequence, Tuple

import numpy as np

from app.models.domain import ParameterSpace, ParameterVector
from app.models.errors import ValidationError


def encode_digits(radices: Sequence[int], indices: Sequence[int]) -> int:
    if len(indices) != len(radices):
        raise ValidationError(f"Expected {len(radices)} indices, got {len(indices)}")
    code = 0
    for position, (idx, radix) in enumerate(zip(indices, radices)):
        if not 0 <= idx < radix:
            raise ValidationError(f"Index {idx} out of range [0, {radix}) in dimension {position}")
        code = code * radix + idx
    return code


def decode_digits(radices: Sequence[int], code: int) -> Tuple[int, ...]:
    total = 1
    for radix in radices:
        total *= radix
    if not 0 <= code < total:
        raise ValidationError(f"Code {code} out of range [0, {total})")
    digits = []
    for radix in reversed(radices):
        code, digit = divmod(code, radix)
        digits.append(digit)
    return tuple(reversed(digits))


def config_index(space: ParameterSpace, p: ParameterVector) -> int:
    """
    Mixed-radix code of a parameter vector

    Args:
        space: ParameterSpace the vector belongs to
        p: ParameterVector of level indices

    Returns:
        int in [0, space.total)
    """
    return encode_digits(space.radices, p.indices)


def config_unindex(space: ParameterSpace, code: int) -> ParameterVector:
    """Inverse of config_index"""
    return ParameterVector(decode_digits(space.radices, code))


def enumerate_space(space: ParameterSpace) -> Iterator[ParameterVector]:
    """Yield every combination once, in ascending code order"""
    for code in range(space.total):
        yield config_unindex(space, code)


def level_matrix(space: ParameterSpace) -> np.ndarray:
    """
    Level indices of every code as a (total, dims) integer matrix.

    Row i holds the digits of code i, matching enumerate_space order.
    """
    return digits_matrix(space.radices)


def digits_matrix(radices: Sequence[int]) -> np.ndarray:
    total = int(np.prod(radices, dtype=np.int64))
    codes = np.arange(total, dtype=np.int64)
    matrix = np.empty((total, len(radices)), dtype=np.int64)
    for position in range(len(radices) - 1, -1, -1):
        codes, matrix[:, position] = np.divmod(codes, radices[position])
    return matrix


def snap_frequency(bins: Sequence[float], observed: float) -> int:
    """
    Index of the bin nearest to the observed frequency.

    Equidistant ties go to the lower bin; values outside the range clamp to the
    nearest endpoint.
    """
    upper = bisect_left(bins, observed)
    if upper == 0:
        return 0
    if upper == len(bins):
        return len(bins) - 1
    lower = upper - 1
    if observed - bins[lower] <= bins[upper] - observed:
        return lower
    return upper
