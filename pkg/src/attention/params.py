"""
Attention parameters, attention context, and global-projection initialization.
"""
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Optional

import numpy as np

from src.tensor import Tensor, uniform_init
from src.utils.errors import ConfigError, ShapeError

LOCAL_FIELDS = ('wq', 'wk', 'wv', 'wo', 'bq', 'bk', 'bv', 'bo', 'pos_proj', 'u_bias', 'v_bias')
GLOBAL_FIELDS = ('global_wq', 'global_wk', 'global_wv', 'global_bq', 'global_bk', 'global_bv')


class AttentionKind(str, Enum):
    FULL = "full"
    LIMITED = "limited"
    LIMITED_WITH_GLOBAL = "limited_with_global"


@dataclass(frozen=True)
class AttentionContext:
    """Which attention backend runs, and its window in frames on each side."""

    kind: AttentionKind = AttentionKind.FULL
    window_left: int = 128
    window_right: int = 128
    chunk_size: int = 64

    def __post_init__(self):
        try:
            object.__setattr__(self, 'kind', AttentionKind(self.kind))
        except ValueError:
            valid = ", ".join(k.value for k in AttentionKind)
            raise ConfigError(f"unknown attention kind {self.kind!r}; valid: {valid}")
        if self.window_left < 0 or self.window_right < 0:
            raise ConfigError(
                f"attention windows must be >= 0, got left={self.window_left} right={self.window_right}"
            )
        if self.chunk_size < 1:
            raise ConfigError(f"attention chunk_size must be >= 1, got {self.chunk_size}")

    @property
    def is_limited(self) -> bool:
        return self.kind != AttentionKind.FULL

    @property
    def has_global(self) -> bool:
        return self.kind == AttentionKind.LIMITED_WITH_GLOBAL

    @property
    def window_size(self) -> int:
        """Positions a query may see: left + right + itself."""
        return self.window_left + self.window_right + 1

    def to_dict(self) -> Dict[str, object]:
        return {
            'kind': self.kind.value,
            'window_left': self.window_left,
            'window_right': self.window_right,
            'chunk_size': self.chunk_size,
        }


@dataclass
class AttentionParams:
    """Projection weights of one relative-position attention layer.

    Weight matrices are stored (in, out) so that projections are x @ w + b.
    u_bias and v_bias are the per-head content and position biases.
    """

    wq: Tensor
    wk: Tensor
    wv: Tensor
    wo: Tensor
    bq: Tensor
    bk: Tensor
    bv: Tensor
    bo: Tensor
    pos_proj: Tensor
    u_bias: Tensor
    v_bias: Tensor
    global_wq: Optional[Tensor] = None
    global_wk: Optional[Tensor] = None
    global_wv: Optional[Tensor] = None
    global_bq: Optional[Tensor] = None
    global_bk: Optional[Tensor] = None
    global_bv: Optional[Tensor] = None

    @property
    def d_model(self) -> int:
        return self.wq.shape[0]

    @property
    def heads(self) -> int:
        return self.u_bias.shape[0]

    @property
    def has_global(self) -> bool:
        return all(getattr(self, name) is not None for name in GLOBAL_FIELDS)

    def check(self, d_model: int, heads: int):
        """Reject parameters that do not fit a D-wide, `heads`-head layer."""
        if heads < 1 or d_model % heads:
            raise ShapeError(f"d_model {d_model} is not divisible by {heads} heads")
        for name in ('wq', 'wk', 'wv', 'wo', 'pos_proj'):
            if getattr(self, name).shape != (d_model, d_model):
                raise ShapeError(f"{name} must be {d_model}x{d_model}, got {getattr(self, name).shape}")
        expected_bias = (heads, d_model // heads)
        if self.u_bias.shape != expected_bias or self.v_bias.shape != expected_bias:
            raise ShapeError(
                f"u/v biases must be {expected_bias}, got {self.u_bias.shape} and {self.v_bias.shape}"
            )

    @classmethod
    def from_weights(cls, weights: Dict[str, Tensor], prefix: str) -> "AttentionParams":
        values = {name: weights[f"{prefix}.{name}"] for name in LOCAL_FIELDS}
        for name in GLOBAL_FIELDS:
            values[name] = weights.get(f"{prefix}.{name}")
        return cls(**values)

    def to_weights(self, prefix: str) -> Dict[str, Tensor]:
        names = LOCAL_FIELDS + (GLOBAL_FIELDS if self.has_global else ())
        return {f"{prefix}.{name}": getattr(self, name) for name in names}


def init_global_from_local(params: AttentionParams) -> AttentionParams:
    """Create the global-token projections as deep copies of the local ones."""
    if any(getattr(params, name) is not None for name in GLOBAL_FIELDS):
        raise ConfigError("global projections are already present", code="global_present")
    return replace(
        params,
        global_wq=params.wq.copy(),
        global_wk=params.wk.copy(),
        global_wv=params.wv.copy(),
        global_bq=params.bq.copy(),
        global_bk=params.bk.copy(),
        global_bv=params.bv.copy(),
    )


def random_attention_params(rng: np.random.Generator, d_model: int, heads: int) -> AttentionParams:
    """Draw local attention weights from `rng` in a fixed order."""
    if heads < 1 or d_model % heads:
        raise ShapeError(f"d_model {d_model} is not divisible by {heads} heads")
    head_dim = d_model // heads
    return AttentionParams(
        wq=uniform_init(rng, (d_model, d_model), d_model),
        wk=uniform_init(rng, (d_model, d_model), d_model),
        wv=uniform_init(rng, (d_model, d_model), d_model),
        wo=uniform_init(rng, (d_model, d_model), d_model),
        bq=uniform_init(rng, (d_model,), d_model),
        bk=uniform_init(rng, (d_model,), d_model),
        bv=uniform_init(rng, (d_model,), d_model),
        bo=uniform_init(rng, (d_model,), d_model),
        pos_proj=uniform_init(rng, (d_model, d_model), d_model),
        u_bias=uniform_init(rng, (heads, head_dim), head_dim),
        v_bias=uniform_init(rng, (heads, head_dim), head_dim),
    )


def init_attention_params(d_model: int, heads: int, seed: int = 0,
                          with_global: bool = False) -> AttentionParams:
    """Seeded attention parameters; global projections are copied from the local ones."""
    params = random_attention_params(np.random.default_rng(seed), d_model, heads)
    if with_global:
        params = init_global_from_local(params)
    return params
