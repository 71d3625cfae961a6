"""
FCWT weight files.

Layout (little-endian): 8-byte magic "FCWT0001", then entries until end of
file. Each entry is u32 name length, UTF-8 name, u32 rank, rank x u32
extents, then the float32 values in row-major order.
"""
import hashlib
import math
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Union

import numpy as np
from loguru import logger

from src.tensor import Tensor
from src.utils.errors import FormatError

WEIGHTS_MAGIC = b"FCWT0001"
_U32 = struct.Struct("<I")


def save_weights(path: Union[str, Path], weights: Dict[str, Tensor]):
    """Write `weights` in insertion order."""
    path = Path(path)
    with open(path, 'wb') as f:
        f.write(WEIGHTS_MAGIC)
        for name, tensor in weights.items():
            encoded = name.encode('utf-8')
            data = np.ascontiguousarray(tensor, dtype='<f4')
            f.write(_U32.pack(len(encoded)))
            f.write(encoded)
            f.write(_U32.pack(data.ndim))
            for extent in data.shape:
                f.write(_U32.pack(extent))
            f.write(data.tobytes())
    logger.debug(f"Wrote {len(weights)} tensors to {path}")


def _read_u32(buf: bytes, offset: int, what: str) -> int:
    if offset + 4 > len(buf):
        raise FormatError(f"truncated weight file at offset {offset}: expected {what}")
    return _U32.unpack_from(buf, offset)[0]


def load_weights(path: Union[str, Path]) -> Dict[str, Tensor]:
    """Read an FCWT file into an ordered name -> float32 tensor map."""
    path = Path(path)
    try:
        buf = path.read_bytes()
    except FileNotFoundError:
        raise FormatError(f"weight file not found: {path}", code="file_not_found")

    if buf[:8] != WEIGHTS_MAGIC:
        raise FormatError(f"bad magic at offset 0 in {path}: expected {WEIGHTS_MAGIC!r}, got {buf[:8]!r}")

    weights: Dict[str, Tensor] = OrderedDict()
    offset = 8
    while offset < len(buf):
        name_len = _read_u32(buf, offset, "name length")
        offset += 4
        if offset + name_len > len(buf):
            raise FormatError(f"truncated weight file at offset {offset}: name of {name_len} bytes")
        try:
            name = buf[offset:offset + name_len].decode('utf-8')
        except UnicodeDecodeError:
            raise FormatError(f"tensor name at offset {offset} is not valid UTF-8")
        offset += name_len

        rank = _read_u32(buf, offset, "rank")
        offset += 4
        shape = []
        for _ in range(rank):
            shape.append(_read_u32(buf, offset, "extent"))
            offset += 4

        count = math.prod(shape)
        end = offset + 4 * count
        if end > len(buf):
            raise FormatError(
                f"truncated weight file at offset {offset}: tensor {name} needs {4 * count} bytes, "
                f"{len(buf) - offset} left"
            )
        weights[name] = np.frombuffer(buf, dtype='<f4', count=count, offset=offset).astype(np.float32).reshape(shape)
        offset = end

    logger.debug(f"Read {len(weights)} tensors from {path}")
    return weights


def weights_checksum(weights: Dict[str, Tensor]) -> str:
    """SHA-256 hex digest over names, shapes and float32 bytes, in name order."""
    digest = hashlib.sha256()
    for name in sorted(weights):
        data = np.ascontiguousarray(weights[name], dtype='<f4')
        digest.update(name.encode('utf-8'))
        digest.update(struct.pack(f"<{data.ndim + 1}I", data.ndim, *data.shape))
        digest.update(data.tobytes())
    return digest.hexdigest()
