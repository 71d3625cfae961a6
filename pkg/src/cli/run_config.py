"""
Per-invocation settings shared by every command.
"""
import argparse
from dataclasses import dataclass
from typing import Optional

from src.attention import AttentionContext
from src.encoder import EncoderConfig, Preset, build_config, load_encoder_config, with_attention
from src.utils.errors import ConfigError

REPORT_FORMATS = ("json", "table")


@dataclass
class RunConfig:
    """Which encoder to use, where the output goes, and how to report."""

    preset: Optional[str] = None
    config_path: Optional[str] = None
    seed: int = 0
    attention: Optional[str] = None
    window_left: Optional[int] = None
    window_right: Optional[int] = None
    output: Optional[str] = None
    report_format: str = "table"

    def __post_init__(self):
        if self.preset and self.config_path:
            raise ConfigError("--preset and --config are mutually exclusive", code="usage_error")
        if self.report_format not in REPORT_FORMATS:
            raise ConfigError(f"unknown report format {self.report_format!r}; valid: {', '.join(REPORT_FORMATS)}")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(
            preset=getattr(args, 'preset', None),
            config_path=getattr(args, 'config', None),
            seed=getattr(args, 'seed', 0),
            attention=getattr(args, 'attention', None),
            window_left=getattr(args, 'window_left', None),
            window_right=getattr(args, 'window_right', None),
            output=getattr(args, 'output', None),
            report_format=getattr(args, 'format', 'table'),
        )

    def encoder_config(self, default_preset: str = Preset.A4.value) -> EncoderConfig:
        """Resolve the preset or config file, then apply attention overrides."""
        if self.config_path:
            cfg = load_encoder_config(self.config_path)
        else:
            cfg = build_config(self.preset or default_preset)

        if self.attention is None and self.window_left is None and self.window_right is None:
            return cfg
        current = cfg.attention
        ctx = AttentionContext(
            kind=self.attention or current.kind,
            window_left=current.window_left if self.window_left is None else self.window_left,
            window_right=current.window_right if self.window_right is None else self.window_right,
            chunk_size=current.chunk_size,
        )
        return with_attention(cfg, ctx)
