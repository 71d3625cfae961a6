"""
FCFT feature files: magic "FCFT0001", u32 T, u32 F, then T*F float32 values, all little-endian, time-major.
"""
import struct
from pathlib import Path
from typing import Union

import numpy as np
from loguru import logger

from src.tensor import Tensor
from src.utils.errors import FormatError, ShapeError

FEATURES_MAGIC = b"FCFT0001"
_HEADER = struct.Struct("<8sII")


def write_features(path: Union[str, Path], features: Tensor):
    """Write a T x F tensor."""
    features = np.asarray(features)
    if features.ndim != 2:
        raise ShapeError(f"features must be T x F, got shape {features.shape}")
    frames, dim = features.shape
    with open(path, 'wb') as f:
        f.write(_HEADER.pack(FEATURES_MAGIC, frames, dim))
        f.write(np.ascontiguousarray(features, dtype='<f4').tobytes())
    logger.debug(f"Wrote {frames}x{dim} features to {path}")


def read_features(path: Union[str, Path]) -> Tensor:
    """Read a T x F float32 tensor."""
    path = Path(path)
    try:
        buf = path.read_bytes()
    except FileNotFoundError:
        raise FormatError(f"feature file not found: {path}", code="file_not_found")

    if buf[:8] != FEATURES_MAGIC:
        raise FormatError(f"bad magic at offset 0 in {path}: expected {FEATURES_MAGIC!r}, got {buf[:8]!r}")
    if len(buf) < _HEADER.size:
        raise FormatError(f"truncated header at offset 8 in {path}: expected T and F")
    _, frames, dim = _HEADER.unpack_from(buf, 0)
    expected = frames * dim * 4
    available = len(buf) - _HEADER.size
    if available != expected:
        raise FormatError(
            f"payload at offset {_HEADER.size} in {path} has {available} bytes, "
            f"expected {expected} for {frames}x{dim} features"
        )
    data = np.frombuffer(buf, dtype='<f4', count=frames * dim, offset=_HEADER.size)
    return data.astype(np.float32).reshape(frames, dim)
