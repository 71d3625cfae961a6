"""
Building long inputs by concatenating utterances.
"""
from typing import Sequence

import numpy as np
from loguru import logger

from src.tensor import DTYPE, Tensor
from src.utils.errors import ConfigError, ShapeError


def concat_utterances(features_list: Sequence[Tensor], gap_frames: int = 0, seed: int = 0) -> Tensor:
    """Shuffle utterances with `seed` and join them with `gap_frames` of zeros in between."""
    if not features_list:
        raise ConfigError("need at least one utterance to concatenate")
    if gap_frames < 0:
        raise ConfigError(f"gap_frames must be >= 0, got {gap_frames}")
    dims = {np.asarray(f).shape[1] if np.ndim(f) == 2 else None for f in features_list}
    if None in dims or len(dims) != 1:
        raise ShapeError(f"utterances must all be T x F with one shared F, got feature dims {sorted(map(str, dims))}")
    dim = dims.pop()

    order = np.random.default_rng(seed).permutation(len(features_list))
    gap = np.zeros((gap_frames, dim), dtype=DTYPE)
    pieces = []
    for position, index in enumerate(order):
        if position and gap_frames:
            pieces.append(gap)
        pieces.append(np.asarray(features_list[index], dtype=DTYPE))
    joined = np.concatenate(pieces, axis=0)
    logger.debug(f"Concatenated {len(features_list)} utterances into {joined.shape[0]} frames")
    return joined
