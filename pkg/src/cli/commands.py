"""
Command implementations behind main.py.

Each command takes a RunConfig plus its own arguments, writes its report to
stdout (or to RunConfig.output) and returns the underlying result object.
"""
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from loguru import logger

from src.attention import AttentionContext, AttentionKind, full_mhsa, init_attention_params, limited_mhsa, masked_mhsa
from src.encoder import (
    EncoderConfig, Preset, build_config, check_weights, encode, init_weights, load_weights, output_length,
    with_attention,
)
from src.longform import (
    buffered_encode, ctc_greedy_decode, ctc_head_weights, ctc_log_probs, plan_buffers,
    read_features, required_context_frames, write_features,
)
from src.profiler import (
    REFERENCE_SCHEMAS, ProfileReport, calibrate_budget, corpus_feasibility, count_macs,
    load_manifest, max_duration, memory_breakdown, profile_reference_schemas, synthesize_manifest,
)
from src.tensor import MacCounter
from src.utils.config import config
from src.utils.errors import ConfigError, EquivalenceError, PlanError
from .run_config import RunConfig


def _emit(run: RunConfig, payload: Dict[str, Any], table: str):
    """Write the report in the requested format to the output file or stdout."""
    text = json.dumps(payload, indent=2) if run.report_format == "json" else table
    if run.output:
        Path(run.output).write_text(text + "\n")
        logger.info(f"Report written to {run.output}")
    else:
        print(text)


def _weights_for(cfg: EncoderConfig, run: RunConfig, weights_path: Optional[str]):
    if weights_path:
        weights = load_weights(weights_path)
        check_weights(cfg, weights)
        return weights
    return init_weights(cfg, run.seed)


def cmd_profile(run: RunConfig, duration_s: Optional[float] = None) -> ProfileReport:
    """Parameter, MAC and working-set report for one encoder."""
    if duration_s is None:
        duration_s = config.get("profiling.default_duration_s", 30.0)
    cfg = run.encoder_config()
    report = count_macs(cfg, cfg.frames_for_seconds(duration_s))
    logger.info(f"Profiled {cfg.name}: {report.params_m:.2f} M params, {report.gmacs:.2f} GMACs")
    _emit(run, report.to_dict(), report.render_table())
    return report


def cmd_compare(run: RunConfig, schemas: Sequence[str], duration_s: Optional[float] = None) -> List[ProfileReport]:
    """Profile several named schemas on the same input and rank them by MACs."""
    if duration_s is None:
        duration_s = config.get("profiling.default_duration_s", 30.0)
    unknown = [name for name in schemas if name not in REFERENCE_SCHEMAS]
    if unknown:
        raise ConfigError(
            f"unknown schema(s) {', '.join(unknown)}; valid schemas: {', '.join(REFERENCE_SCHEMAS)}",
            code="unknown_schema",
        )
    unique = list(dict.fromkeys(schemas))
    if len(unique) < len(schemas):
        logger.warning(f"Duplicate schema names dropped: {len(schemas) - len(unique)}")
    if len(unique) < 2:
        raise ConfigError("compare needs at least two distinct schemas", code="usage_error")

    t_in = int(round(duration_s * 100))
    reports = sorted((profile_reference_schemas(name, t_in) for name in unique), key=lambda r: r.total_macs)

    baseline = reports[-1].total_macs
    lines = [f"{'schema':<20}  {'params (M)':>10}  {'GMACs':>9}  {'vs largest':>10}"]
    for r in reports:
        lines.append(f"{r.schema_name:<20}  {r.params_m:>10.2f}  {r.gmacs:>9.2f}  {r.total_macs / baseline:>10.3f}")
    payload = {
        'input_duration_s': duration_s,
        'schemas': [{'schema_name': r.schema_name, 'totals': r.totals, 'notes': r.notes} for r in reports],
    }
    _emit(run, payload, "\n".join(lines))
    return reports


def cmd_encode(run: RunConfig, features_path: str, weights_path: Optional[str] = None) -> Dict[str, Any]:
    """Encode an FCFT feature file and write the T' x D result as FCFT."""
    if not run.output:
        raise ConfigError("encode needs --output for the encoded features", code="usage_error")
    cfg = run.encoder_config()
    features = read_features(features_path)
    weights = _weights_for(cfg, run, weights_path)

    counter = MacCounter()
    encoded = encode(features, cfg, weights, counter)
    write_features(run.output, encoded)

    summary = {
        'config': cfg.name,
        'input_frames': int(features.shape[0]),
        'output_frames': int(encoded.shape[0]),
        'd_model': cfg.d_model,
        'macs': counter.total,
        'gmacs': counter.gmacs,
        'output': run.output,
    }
    logger.info(f"Encoded {features.shape[0]} frames into {encoded.shape[0]} with {counter.total} MACs")
    text = json.dumps(summary, indent=2) if run.report_format == "json" else (
        f"{cfg.name}: {summary['input_frames']} -> {summary['output_frames']} frames, MACs {counter.total}"
    )
    print(text)
    return summary


def cmd_check_equivalence(run: RunConfig, frames: Optional[int] = None, window: Optional[int] = None,
                          reference: str = "masked", tolerance: Optional[float] = None) -> Dict[str, Any]:
    """Compare chunked limited attention against a dense reference on seeded random input."""
    eq = config.get_equivalence_config()
    frames = eq.get('frames', 300) if frames is None else frames
    window = eq.get('window', 128) if window is None else window
    tolerance = eq.get('tolerance', 1e-5) if tolerance is None else tolerance
    if window < 0 or frames < 1:
        raise ConfigError(f"need frames >= 1 and window >= 0, got frames={frames} window={window}")
    if reference not in ("masked", "full"):
        raise ConfigError(f"unknown reference {reference!r}; valid: masked, full")

    cfg = run.encoder_config()
    rng = np.random.default_rng(run.seed)
    x = rng.standard_normal((frames, cfg.d_model)).astype(np.float32)
    params = init_attention_params(cfg.d_model, cfg.n_heads, seed=run.seed)
    ctx = AttentionContext(AttentionKind.LIMITED, window, window, cfg.attention.chunk_size)

    chunked_counter, reference_counter = MacCounter(), MacCounter()
    chunked = limited_mhsa(x, params, cfg.n_heads, ctx, chunked_counter)
    if reference == "masked":
        expected = masked_mhsa(x, params, cfg.n_heads, ctx, reference_counter)
    else:
        expected = full_mhsa(x, params, cfg.n_heads, reference_counter)

    diff = float(np.max(np.abs(chunked.astype(np.float64) - expected)))
    expect_equal = reference == "masked" or window >= frames - 1
    passed = diff <= tolerance if expect_equal else diff > tolerance
    result = {
        'frames': frames,
        'window': window,
        'd_model': cfg.d_model,
        'heads': cfg.n_heads,
        'reference': reference,
        'expected': 'equal' if expect_equal else 'different',
        'max_abs_diff': diff,
        'tolerance': tolerance,
        'chunked_macs': chunked_counter.total,
        'reference_macs': reference_counter.total,
        'passed': passed,
    }
    table = (f"limited(window={window}) vs {reference} at T={frames}: max |diff| = {diff:.3e} "
             f"(expected {result['expected']}, tolerance {tolerance:g}) -> {'PASS' if passed else 'FAIL'}\n"
             f"MACs chunked {chunked_counter.total:,} / reference {reference_counter.total:,}")
    _emit(run, result, table)
    if not passed:
        raise EquivalenceError(
            f"max abs diff {diff:.3e} vs tolerance {tolerance:g}, expected outputs to be {result['expected']}"
        )
    return result


def cmd_feasibility(run: RunConfig, manifest_path: Optional[str] = None, length_field: str = "transcript_len",
                    synthesize: Optional[int] = None, tokens_per_second: float = 15.0) -> Dict[str, Any]:
    """Infeasible fraction and deficit histogram of a manifest under the encoder's subsampling."""
    cfg = run.encoder_config()
    if manifest_path:
        records = load_manifest(manifest_path, length_field)
        source = manifest_path
    elif synthesize is not None:
        records = synthesize_manifest(synthesize, tokens_per_second, seed=run.seed)
        source = f"synthetic ({synthesize} records at {tokens_per_second:g} tokens/s)"
    else:
        raise ConfigError("feasibility needs --manifest or --synthesize", code="usage_error")

    summary = corpus_feasibility(records, cfg.subsampling, cfg.frame_hop_ms)
    payload = {'config': cfg.name, 'total_factor': cfg.total_factor, 'source': source, **summary.to_dict()}
    lines = [
        f"{cfg.name} ({cfg.total_factor}x) on {source}",
        f"records: {summary.records}, infeasible: {summary.infeasible} ({summary.fraction:.2%})",
        "deficit histogram: " + json.dumps(summary.histogram),
    ]
    _emit(run, payload, "\n".join(lines))
    return payload


def cmd_memory(run: RunConfig, calibration_preset: Optional[str] = None,
               calibration_minutes: Optional[float] = None) -> Dict[str, Any]:
    """Maximum audio duration under a budget calibrated on one preset with full attention."""
    mem = config.get_memory_config()
    calibration_preset = calibration_preset or mem.get('calibration_preset', Preset.A0.value)
    calibration_minutes = calibration_minutes or mem.get('calibration_minutes', 10.0)
    budget = calibrate_budget(build_config(calibration_preset), calibration_minutes)

    cfg = run.encoder_config()
    variants = [
        ("full", with_attention(cfg, AttentionContext(AttentionKind.FULL))),
        ("limited", with_attention(cfg, AttentionContext(
            AttentionKind.LIMITED, cfg.attention.window_left, cfg.attention.window_right, cfg.attention.chunk_size))),
    ]
    rows = []
    for label, variant in variants:
        rows.append({'attention': label, 'max_minutes': max_duration(variant, budget)})

    payload = {
        'config': cfg.name,
        'calibration': {'preset': calibration_preset, 'minutes': calibration_minutes, 'budget_bytes': budget},
        'durations': rows,
    }
    lines = [f"budget {budget / 1e9:.2f} GB ({calibration_preset} full attention = {calibration_minutes:g} min)"]
    lines += [f"{cfg.name} {row['attention']:<8} {row['max_minutes']:>10.1f} min" for row in rows]
    _emit(run, payload, "\n".join(lines))
    return payload


def cmd_longform(run: RunConfig, features_path: str, buffer_s: Optional[float] = None,
                 context_s: Optional[float] = None, weights_path: Optional[str] = None,
                 decode_output: Optional[str] = None, vocab_size: Optional[int] = None,
                 max_workers: Optional[int] = None) -> Dict[str, Any]:
    """Buffered encode of a long feature file, then greedy CTC decoding with a seeded head."""
    lf = config.get_longform_config()
    buffer_s = lf.get('buffer_s', 20.0) if buffer_s is None else buffer_s
    context_s = lf.get('context_s', 2.0) if context_s is None else context_s
    vocab_size = lf.get('vocab_size', 128) if vocab_size is None else vocab_size
    max_workers = lf.get('max_workers', 1) if max_workers is None else max_workers
    if buffer_s <= 2 * context_s:
        raise PlanError(f"buffer of {buffer_s:g} s must be longer than twice the context of {context_s:g} s")

    cfg = run.encoder_config()
    factor = cfg.total_factor
    # Buffers start on the subsampling grid so their encoder frames line up with a single pass
    buffer_len = cfg.frames_for_seconds(buffer_s) // factor * factor
    context = int(math.ceil(cfg.frames_for_seconds(context_s) / factor)) * factor

    features = read_features(features_path)
    weights = _weights_for(cfg, run, weights_path)
    plan = plan_buffers(features.shape[0], buffer_len, context, context)

    needed = required_context_frames(cfg)
    if len(plan.buffers) > 1 and (needed is None or context < needed):
        logger.warning(f"Context of {context} frames does not make buffering exact "
                       f"(needs {needed if needed is not None else 'unbounded'} for {cfg.attention.kind.value})")

    counter = MacCounter()
    encoded = buffered_encode(features, cfg, weights, plan, counter, max_workers=max_workers)
    head_w, head_b = ctc_head_weights(cfg.d_model, vocab_size, seed=run.seed)
    decoded = ctc_greedy_decode(ctc_log_probs(encoded, head_w, head_b), blank_id=0)

    if run.output:
        write_features(run.output, encoded)
    if decode_output:
        Path(decode_output).write_text(json.dumps(decoded.to_dict()) + "\n")

    buffers = [
        {'start': b.start, 'end': b.end, 'keep_start': b.keep_start, 'keep_end': b.keep_end,
         'peak_bytes': memory_breakdown(cfg, b.length).total_bytes}
        for b in plan.buffers
    ]
    summary = {
        'config': cfg.name,
        'input_frames': int(features.shape[0]),
        'output_frames': int(encoded.shape[0]),
        'expected_frames': output_length(features.shape[0], cfg.subsampling),
        'macs': counter.total,
        'buffers': buffers,
        'tokens': len(decoded.tokens),
        'decode': decoded.to_dict(),
    }
    logger.info(f"Long-form: {len(buffers)} buffer(s), {encoded.shape[0]} frames, {len(decoded.tokens)} tokens")
    if run.report_format == "json":
        print(json.dumps(summary, indent=2))
    else:
        lines = [f"{cfg.name}: {summary['input_frames']} -> {summary['output_frames']} frames "
                 f"in {len(buffers)} buffer(s), {summary['tokens']} tokens"]
        lines += [f"  [{b['start']}, {b['end']}) keep [{b['keep_start']}, {b['keep_end']}) "
                  f"peak {b['peak_bytes'] / 1e6:.1f} MB" for b in buffers]
        print("\n".join(lines))
    return summary
