# app/services/lut_format.py

"""
LUT binary format (little-endian)

    magic 'LUT1' | version u16 | entry width u8 | reserved u8
    dims u8, per dim: name len u8 + name | level count u16 | levels f32
    LOD count u8 + thresholds f32
    CPU bin count u16 + bins u32 | GPU bin count u16 + bins u32
    percentile f32 | phi/psi fingerprints 2 x u64
    payload length u32 | packed entries (MSB first)
    CRC32 over everything before it
"""

import logging
import os
import struct
import zlib

from app.models.errors import LutFormatError, ValidationError
from app.services.lut_builder import LookupTable, LutHeader, SpaceDescriptor
from app.utils.bitpack import packed_size, unpack

logger = logging.getLogger(__name__)

MAGIC = b"LUT1"
FORMAT_VERSION = 1
_CRC = struct.Struct("<I")


class _Reader:
    """Cursor over a bytes buffer; running past the end is a format error"""

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.data):
            raise LutFormatError(f"Truncated LUT file at byte {self.offset} (need {size} more bytes)")
        values = struct.unpack_from(fmt, self.data, self.offset)
        self.offset += size
        return values

    def raw(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise LutFormatError(f"Truncated LUT file at byte {self.offset} (need {size} more bytes)")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk


def dumps_lut(table: LookupTable) -> bytes:
    h = table.header
    parts = [struct.pack("<4sHBB", MAGIC, FORMAT_VERSION, h.entry_width, 0)]
    parts.append(struct.pack("<B", len(h.space.dimensions)))
    for name, levels in h.space.dimensions:
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<B", len(encoded)) + encoded)
        parts.append(struct.pack(f"<H{len(levels)}f", len(levels), *levels))
    parts.append(struct.pack(f"<B{len(h.lod_thresholds)}f", len(h.lod_thresholds), *h.lod_thresholds))
    parts.append(struct.pack(f"<H{len(h.cpu_bins)}I", len(h.cpu_bins), *h.cpu_bins))
    parts.append(struct.pack(f"<H{len(h.gpu_bins)}I", len(h.gpu_bins), *h.gpu_bins))
    parts.append(struct.pack("<fQQ", h.percentile, h.phi_fingerprint, h.psi_fingerprint))
    parts.append(struct.pack("<I", len(table.payload)) + table.payload)
    body = b"".join(parts)
    return body + _CRC.pack(zlib.crc32(body))


def loads_lut(data: bytes) -> LookupTable:
    """
    Parse a LUT file image

    Raises:
        LutFormatError: bad magic, version, CRC, truncation or invalid entries
    """
    if len(data) < 8 + _CRC.size:
        raise LutFormatError(f"LUT file too short ({len(data)} bytes)")
    body, (stored_crc,) = data[:-_CRC.size], _CRC.unpack(data[-_CRC.size:])
    if zlib.crc32(body) != stored_crc:
        raise LutFormatError("LUT checksum mismatch")

    r = _Reader(body)
    magic, version, width, _reserved = r.take("<4sHBB")
    if magic != MAGIC:
        raise LutFormatError(f"Bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise LutFormatError(f"Unsupported LUT format version {version}")
    if width == 0:
        raise LutFormatError("Entry width must be at least 1 bit")

    (n_dims,) = r.take("<B")
    dimensions = []
    for _ in range(n_dims):
        (name_len,) = r.take("<B")
        try:
            name = r.raw(name_len).decode("utf-8")
        except UnicodeDecodeError as e:
            raise LutFormatError(f"Dimension name is not UTF-8: {e}") from e
        (n_levels,) = r.take("<H")
        levels = r.take(f"<{n_levels}f")
        dimensions.append((name, tuple(levels)))
    (n_lods,) = r.take("<B")
    thresholds = r.take(f"<{n_lods}f")
    (n_cpu,) = r.take("<H")
    cpu_bins = r.take(f"<{n_cpu}I")
    (n_gpu,) = r.take("<H")
    gpu_bins = r.take(f"<{n_gpu}I")
    percentile, phi_fp, psi_fp = r.take("<fQQ")
    (payload_len,) = r.take("<I")
    payload = r.raw(payload_len)
    if r.offset != len(body):
        raise LutFormatError(f"{len(body) - r.offset} unexpected trailing bytes")

    header = LutHeader(
        space=SpaceDescriptor(tuple(dimensions)),
        lod_thresholds=tuple(thresholds),
        cpu_bins=tuple(cpu_bins),
        gpu_bins=tuple(gpu_bins),
        percentile=percentile,
        phi_fingerprint=phi_fp,
        psi_fingerprint=psi_fp,
        entry_width=width,
    )
    if 0 in header.space.radices or not header.entry_count:
        raise LutFormatError("LUT header describes an empty space or grid")
    if payload_len != packed_size(header.entry_count, width):
        raise LutFormatError(f"Payload length {payload_len} does not match {header.entry_count} x {width}-bit entries")
    total = header.space.total
    if any(code >= total for code in unpack(width, payload, header.entry_count)):
        raise LutFormatError(f"LUT entry outside the {total}-code space")
    try:
        return LookupTable(header=header, payload=payload)
    except ValidationError as e:
        raise LutFormatError(str(e)) from e


def save_lut(table: LookupTable, path: str) -> int:
    """Write the table; returns the file size in bytes"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    data = dumps_lut(table)
    with open(path, "wb") as f:
        f.write(data)
    logger.info(f"SUCCESS Saved LUT ({table.entry_count} entries, {len(data)} B) to {path}")
    return len(data)


def load_lut(path: str) -> LookupTable:
    with open(path, "rb") as f:
        return loads_lut(f.read())
