"""
Analytical profiles of the four downsampling schemas being compared.

conformer and fast_conformer are the runnable A0 and A4 encoders. The
squeezeformer (time-reduction U-Net, 2/4/8/4) and efficient_conformer
(progressive 2/4/8 with grouped attention in the first stage) schedules have
no forward path; they are modelled segment by segment at d_model 512.
"""
from typing import List

from loguru import logger

from src.encoder import LayerType, Preset, SubsamplingSchema, SubsamplingStage, build_config, output_length
from src.utils.config import config
from src.utils.errors import ConfigError
from .counting import (
    LayerCost, conv_module_macs, conv_module_params, count_macs, ffn_macs, ffn_params,
    full_attention_macs, mhsa_params, subsampling_costs,
)
from .report import ProfileReport

REFERENCE_SCHEMAS = ("conformer", "squeezeformer", "efficient_conformer", "fast_conformer")

D_MODEL = 512
HEADS = 8
EXPANSION = 4
FEATURE_DIM = 80


def _stage(layer_type: LayerType, channels: int) -> SubsamplingStage:
    return SubsamplingStage(stride=2, layer_type=layer_type, channels=channels)


def grouped_attention_macs(frames: int, d_model: int, group: int) -> int:
    """Attention over groups of `group` neighbouring frames concatenated along channels.

    The sequence is padded to a multiple of the group size; the four
    projections run per frame and the scores per group.
    """
    padded = -(-frames // group) * group
    groups = padded // group
    projections = 4 * padded * d_model * d_model
    positions = (2 * padded - group) * d_model * d_model
    content = groups * groups * group * d_model
    context = groups * groups * group * d_model
    position_scores = groups * (2 * groups - 1) * group * d_model
    return projections + positions + content + context + position_scores


def _block(prefix: str, frames: int, kernel: int, group: int = 1) -> List[LayerCost]:
    d = D_MODEL
    if group > 1:
        attention = grouped_attention_macs(frames, d, group)
        groups = -(-frames // group)
        scores = 3 * HEADS * groups * groups
    else:
        attention = full_attention_macs(frames, d)
        scores = 3 * HEADS * frames * frames
    ffn_working = frames * d * (2 + EXPANSION)
    return [
        LayerCost(f"{prefix}.ffn1", ffn_params(d, EXPANSION), ffn_macs(frames, d, EXPANSION), ffn_working),
        LayerCost(f"{prefix}.mhsa", mhsa_params(d), attention, frames * d * 6 + scores),
        LayerCost(f"{prefix}.conv", conv_module_params(d, kernel), conv_module_macs(frames, d, kernel), frames * d * 4),
        LayerCost(f"{prefix}.ffn2", ffn_params(d, EXPANSION) + 2 * d, ffn_macs(frames, d, EXPANSION), ffn_working),
    ]


def _downsample(name: str, frames_out: int, kernel: int) -> LayerCost:
    """Strided depthwise-separable 1-D conv over the sequence."""
    d = D_MODEL
    params = d * kernel + d + d * d + d
    macs = frames_out * d * kernel + frames_out * d * d
    return LayerCost(name, params, macs, 3 * frames_out * d)


def _halve(frames: int) -> int:
    return (frames - 1) // 2 + 1


def _squeezeformer(t_in: int) -> List[LayerCost]:
    schema = SubsamplingSchema((_stage(LayerType.FULL_CONV2D, D_MODEL), _stage(LayerType.DEPTHWISE_SEPARABLE, D_MODEL)))
    kernel = 31
    costs = subsampling_costs(schema, FEATURE_DIM, D_MODEL, t_in)
    frames = output_length(t_in, schema)
    layer = 0
    for _ in range(7):
        costs += _block(f"layers.{layer}", frames, kernel)
        layer += 1
    reduced = _halve(frames)
    costs.append(_downsample("time_reduction", reduced, 3))
    for _ in range(14):
        costs += _block(f"layers.{layer}", reduced, kernel)
        layer += 1
    # Upsampling repeats frames and adds the skip connection: no MACs
    costs.append(LayerCost("time_recovery", 0, 0, 2 * frames * D_MODEL))
    costs += _block(f"layers.{layer}", frames, kernel)
    return costs


def _efficient_conformer(t_in: int) -> List[LayerCost]:
    schema = SubsamplingSchema((_stage(LayerType.FULL_CONV2D, 256),))
    kernel = 15
    costs = subsampling_costs(schema, FEATURE_DIM, D_MODEL, t_in)
    frames = output_length(t_in, schema)
    layer = 0
    for _ in range(4):
        costs += _block(f"layers.{layer}", frames, kernel, group=3)
        layer += 1
    for stage in (1, 2):
        frames = _halve(frames)
        costs.append(_downsample(f"downsample.{stage}", frames, kernel))
        for _ in range(6):
            costs += _block(f"layers.{layer}", frames, kernel)
            layer += 1
    return costs


def profile_reference_schemas(name: str, t_in: int) -> ProfileReport:
    """Analytical report for one named schema on `t_in` 10 ms input frames."""
    if name not in REFERENCE_SCHEMAS:
        raise ConfigError(
            f"unknown schema {name!r}; valid schemas: {', '.join(REFERENCE_SCHEMAS)}",
            code="unknown_schema",
        )
    if name == "conformer":
        report = count_macs(build_config(Preset.A0), t_in)
        report.notes.append("runnable A0 encoder")
    elif name == "fast_conformer":
        report = count_macs(build_config(Preset.A4), t_in)
        report.notes.append("runnable A4 encoder; encoder only, no CTC or RNNT head")
    else:
        bytes_per_element = config.get("profiling.bytes_per_element", 4)
        costs = _squeezeformer(t_in) if name == "squeezeformer" else _efficient_conformer(t_in)
        report = ProfileReport(schema_name=name, input_duration_s=t_in / 100.0)
        for cost in costs:
            report.add(cost.name, cost.params, cost.macs, cost.working_elements * bytes_per_element)
        report.notes.append("analytical only; no forward path exists for this schema")

    report.schema_name = name
    logger.debug(f"{name}: {report.gmacs:.2f} GMACs over {t_in} frames")
    return report
