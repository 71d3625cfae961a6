"""
Encoder architecture configuration: subsampling schemas, encoder configs and
the A0-A4 preset ladder.
"""
import json
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Tuple, Union

from loguru import logger

from src.attention import AttentionContext
from src.utils.errors import ConfigError


class LayerType(str, Enum):
    FULL_CONV2D = "full_conv2d"
    DEPTHWISE_SEPARABLE = "depthwise_separable"


@dataclass(frozen=True)
class SubsamplingStage:
    """One strided 2-D convolution over (time x mel); the stride applies to both axes."""

    stride: int = 2
    layer_type: LayerType = LayerType.FULL_CONV2D
    channels: int = 256
    kernel: Tuple[int, int] = (3, 3)

    def __post_init__(self):
        try:
            object.__setattr__(self, 'layer_type', LayerType(self.layer_type))
        except ValueError:
            valid = ", ".join(t.value for t in LayerType)
            raise ConfigError(f"unknown subsampling layer_type {self.layer_type!r}; valid: {valid}")
        object.__setattr__(self, 'kernel', tuple(int(k) for k in self.kernel))
        if len(self.kernel) != 2 or min(self.kernel) < 1 or not all(k % 2 for k in self.kernel):
            raise ConfigError(f"subsampling kernel must be two odd extents, got {self.kernel}")
        if self.stride < 1:
            raise ConfigError(f"subsampling stride must be >= 1, got {self.stride}")
        if self.channels < 1:
            raise ConfigError(f"subsampling channels must be >= 1, got {self.channels}")

    @property
    def padding(self) -> Tuple[int, int]:
        return (self.kernel[0] - 1) // 2, (self.kernel[1] - 1) // 2

    def to_dict(self) -> Dict[str, Any]:
        return {
            'stride': self.stride,
            'layer_type': self.layer_type.value,
            'channels': self.channels,
            'kernel': list(self.kernel),
        }


@dataclass(frozen=True)
class SubsamplingSchema:
    """Ordered subsampling stages; an empty schema leaves the frame rate unchanged."""

    stages: Tuple[SubsamplingStage, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'stages', tuple(self.stages))
        if len(self.stages) > 3:
            raise ConfigError(f"at most 3 subsampling stages are supported, got {len(self.stages)}")

    @property
    def total_factor(self) -> int:
        factor = 1
        for stage in self.stages:
            factor *= stage.stride
        return factor

    @property
    def out_channels(self) -> int:
        return self.stages[-1].channels if self.stages else 1

    def to_dict(self) -> Dict[str, Any]:
        return {'stages': [stage.to_dict() for stage in self.stages]}


@dataclass(frozen=True)
class EncoderConfig:
    """Full architectural description of one encoder."""

    subsampling: SubsamplingSchema = field(default_factory=SubsamplingSchema)
    n_layers: int = 17
    d_model: int = 512
    n_heads: int = 8
    ffn_expansion: int = 4
    conv_kernel: int = 31
    attention: AttentionContext = field(default_factory=AttentionContext)
    feature_dim: int = 80
    frame_hop_ms: float = 10.0
    name: str = "custom"

    def __post_init__(self):
        if self.n_layers < 0:
            raise ConfigError(f"n_layers must be >= 0, got {self.n_layers}")
        if self.d_model < 1 or self.n_heads < 1 or self.d_model % self.n_heads:
            raise ConfigError(f"d_model {self.d_model} must be divisible by n_heads {self.n_heads}")
        if self.conv_kernel < 1 or self.conv_kernel % 2 == 0:
            raise ConfigError(f"conv_kernel must be a positive odd count, got {self.conv_kernel}")
        if self.ffn_expansion < 1:
            raise ConfigError(f"ffn_expansion must be >= 1, got {self.ffn_expansion}")
        if self.feature_dim < 1:
            raise ConfigError(f"feature_dim must be >= 1, got {self.feature_dim}")
        if self.frame_hop_ms <= 0:
            raise ConfigError(f"frame_hop_ms must be positive, got {self.frame_hop_ms}")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads

    @property
    def total_factor(self) -> int:
        return self.subsampling.total_factor

    @property
    def output_hop_ms(self) -> float:
        return self.frame_hop_ms * self.total_factor

    def frames_for_seconds(self, seconds: float) -> int:
        """Input frame count for `seconds` of audio at this config's frame hop."""
        return int(round(seconds * 1000.0 / self.frame_hop_ms))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'subsampling': self.subsampling.to_dict(),
            'n_layers': self.n_layers,
            'd_model': self.d_model,
            'n_heads': self.n_heads,
            'ffn_expansion': self.ffn_expansion,
            'conv_kernel': self.conv_kernel,
            'attention': self.attention.to_dict(),
            'feature_dim': self.feature_dim,
            'frame_hop_ms': self.frame_hop_ms,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EncoderConfig":
        """Build a config from a dict with exactly the field names above.

        Unknown keys anywhere in the document are rejected.
        """
        _reject_unknown(data, {f.name for f in fields(cls)}, "encoder config")
        values = dict(data)
        try:
            if 'subsampling' in values:
                sub = values['subsampling']
                _reject_unknown(sub, {'stages'}, "subsampling")
                stages = []
                for i, stage in enumerate(sub.get('stages', [])):
                    _reject_unknown(stage, {f.name for f in fields(SubsamplingStage)}, f"subsampling stage {i}")
                    stages.append(SubsamplingStage(**stage))
                values['subsampling'] = SubsamplingSchema(tuple(stages))
            if 'attention' in values:
                _reject_unknown(values['attention'], {f.name for f in fields(AttentionContext)}, "attention")
                values['attention'] = AttentionContext(**values['attention'])
            return cls(**values)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid encoder config: {e}") from e


def _reject_unknown(data: Any, allowed: set, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a JSON object, got {type(data).__name__}")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {where}: {', '.join(unknown)}; allowed: {', '.join(sorted(allowed))}",
            code="unknown_key",
        )


def load_encoder_config(path: Union[str, Path]) -> EncoderConfig:
    """Read an encoder architecture JSON file."""
    path = Path(path)
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"encoder config not found: {path}", code="file_not_found")
    except json.JSONDecodeError as e:
        raise ConfigError(f"encoder config {path} is not valid JSON at line {e.lineno}: {e.msg}")
    cfg = EncoderConfig.from_dict(data)
    logger.debug(f"Loaded encoder config '{cfg.name}' from {path}")
    return cfg


class Preset(str, Enum):
    """The ablation ladder from the baseline Conformer to the Fast Conformer."""

    A0 = "A0"
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    A4 = "A4"

    @property
    def description(self) -> str:
        return PRESET_DESCRIPTIONS[self]


PRESET_DESCRIPTIONS = {
    Preset.A0: "Baseline Conformer (4x, full conv, 512 ch, kernel 31)",
    Preset.A1: "+8x stride",
    Preset.A2: "+depthwise conv subsampling",
    Preset.A3: "+256 channels",
    Preset.A4: "+kernel 9 (Fast Conformer)",
}


def _schema(n_stages: int, channels: int, depthwise: bool) -> SubsamplingSchema:
    stages = []
    for i in range(n_stages):
        # The first stage sees a single input channel, so it stays a full conv
        layer_type = LayerType.DEPTHWISE_SEPARABLE if depthwise and i > 0 else LayerType.FULL_CONV2D
        stages.append(SubsamplingStage(stride=2, layer_type=layer_type, channels=channels))
    return SubsamplingSchema(tuple(stages))


def build_config(preset: Union[Preset, str]) -> EncoderConfig:
    """Large-size encoder for one rung of the preset ladder."""
    try:
        preset = Preset(preset)
    except ValueError:
        valid = ", ".join(p.value for p in Preset)
        raise ConfigError(f"unknown preset {preset!r}; valid presets: {valid}", code="unknown_preset")

    n_stages = 2 if preset == Preset.A0 else 3
    depthwise = preset in (Preset.A2, Preset.A3, Preset.A4)
    channels = 256 if preset in (Preset.A3, Preset.A4) else 512
    kernel = 9 if preset == Preset.A4 else 31

    return EncoderConfig(
        subsampling=_schema(n_stages, channels, depthwise),
        n_layers=17,
        d_model=512,
        n_heads=8,
        ffn_expansion=4,
        conv_kernel=kernel,
        attention=AttentionContext(),
        feature_dim=80,
        frame_hop_ms=10.0,
        name=preset.value,
    )


def with_attention(cfg: EncoderConfig, ctx: AttentionContext) -> EncoderConfig:
    """Same architecture with a different attention backend."""
    return replace(cfg, attention=ctx)
