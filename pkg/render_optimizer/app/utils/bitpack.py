# app/utils/bitpack.py

""" Fixed-width bit fields, most significant bit first, byte-padded at the end
"""
from typing import Iterable, List


def bit_width(total: int) -> int:
    """ minimal width able to hold every value in [0, total), at least 1 bit
    """
    return max(1, (total - 1).bit_length())


def packed_size(count: int, nbits: int) -> int:
    return (count * nbits + 7) // 8


def pack(nbits: int, data: Iterable[int]) -> bytes:
    """ join values into one nbits-per-entry bit string
    """
    mask = (1 << nbits) - 1
    acc = 0
    count = 0
    for n in data:
        if n & ~mask:
            raise ValueError(f"value {n} does not fit in {nbits} bits")
        acc = (acc << nbits) | n
        count += 1
    pad = (-count * nbits) % 8
    return (acc << pad).to_bytes(packed_size(count, nbits), "big")


def unpack_one(nbits: int, payload: bytes, index: int) -> int:
    """ read entry `index` without decoding the rest
    """
    start = index * nbits
    end = start + nbits
    lo, hi = start >> 3, (end + 7) >> 3
    chunk = int.from_bytes(payload[lo:hi], "big")
    return (chunk >> ((hi << 3) - end)) & ((1 << nbits) - 1)


def unpack(nbits: int, payload: bytes, count: int) -> List[int]:
    acc = int.from_bytes(payload, "big") >> (len(payload) * 8 - count * nbits)
    mask = (1 << nbits) - 1
    return [(acc >> ((count - 1 - i) * nbits)) & mask for i in range(count)]
