#!/usr/bin/env python3
"""
Fast Conformer efficiency toolkit command line.

    python main.py profile --preset A4 --duration 30
    python main.py compare conformer fast_conformer squeezeformer efficient_conformer
    python main.py encode --preset A4 --input feats.fcft --output encoded.fcft
    python main.py check-equivalence --frames 300 --window 128
    python main.py feasibility --preset A4 --synthesize 1000 --tokens-per-second 15
    python main.py memory --preset A4
    python main.py longform --config config/encoder.example.json --input long.fcft --buffer-s 20 --context-s 2
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add src directory to Python path
sys.path.insert(0, str(Path(__file__).parent / 'src'))

from loguru import logger

from src.attention import AttentionKind
from src.cli import (
    RunConfig, REPORT_FORMATS, cmd_check_equivalence, cmd_compare, cmd_encode, cmd_feasibility,
    cmd_longform, cmd_memory, cmd_profile,
)
from src.encoder import Preset
from src.profiler import REFERENCE_SCHEMAS
from src.utils import ConfigError, LoggerConfig, ToolkitError


def _common(parser: argparse.ArgumentParser, encoder: bool = True):
    if encoder:
        source = parser.add_mutually_exclusive_group()
        source.add_argument("--preset", choices=[preset.value for preset in Preset], help="Named encoder preset (default A4)")
        source.add_argument("--config", help="Encoder config JSON file")
        parser.add_argument("--attention", choices=[k.value for k in AttentionKind], help="Attention backend override")
        parser.add_argument("--window-left", type=int, help="Left attention window in encoder frames")
        parser.add_argument("--window-right", type=int, help="Right attention window in encoder frames")
    parser.add_argument("--seed", type=int, default=0, help="Seed for every random draw (default 0)")
    parser.add_argument("--output", help="Output path")
    parser.add_argument("--format", choices=REPORT_FORMATS, default="table", help="Report format")
    parser.add_argument("--log-level", help="Override the configured log level")


class ToolkitArgumentParser(argparse.ArgumentParser):
    """Raises usage mistakes as ConfigError instead of printing usage and exiting."""

    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}", code="usage_error")


def build_parser() -> argparse.ArgumentParser:
    parser = ToolkitArgumentParser(description="Fast Conformer encoder, profiler and long-form toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ToolkitArgumentParser)

    p = sub.add_parser("profile", help="Per-layer params, MACs and memory for one encoder")
    _common(p)
    p.add_argument("--duration", type=float, help="Input duration in seconds")

    p = sub.add_parser("compare", help="Rank downsampling schemas by MACs")
    _common(p, encoder=False)
    p.add_argument("schemas", nargs="+", metavar="SCHEMA", help=f"Any of: {', '.join(REFERENCE_SCHEMAS)}")
    p.add_argument("--duration", type=float, help="Input duration in seconds")

    p = sub.add_parser("encode", help="Encode an FCFT feature file")
    _common(p)
    p.add_argument("--input", required=True, help="FCFT feature file")
    p.add_argument("--weights", help="FCWT weight file (default: seeded random weights)")

    p = sub.add_parser("check-equivalence", help="Chunked limited attention vs a dense reference")
    _common(p)
    p.add_argument("--frames", type=int, help="Sequence length T")
    p.add_argument("--window", type=int, help="Window on each side")
    p.add_argument("--reference", choices=["masked", "full"], default="masked", help="Dense reference backend")
    p.add_argument("--tolerance", type=float, help="Max abs diff allowed")

    p = sub.add_parser("feasibility", help="CTC length feasibility of a manifest")
    _common(p)
    p.add_argument("--manifest", help="JSON-lines manifest with duration_s and a length field")
    p.add_argument("--length-field", default="transcript_len", help="Transcript length field name")
    p.add_argument("--synthesize", type=int, help="Generate this many records instead of reading a manifest")
    p.add_argument("--tokens-per-second", type=float, default=15.0, help="Token rate of generated records")

    p = sub.add_parser("memory", help="Maximum duration under a calibrated memory budget")
    _common(p)
    p.add_argument("--calibration-preset", choices=[preset.value for preset in Preset], help="Preset fixed at the calibration duration")
    p.add_argument("--calibration-minutes", type=float, help="Calibration duration in minutes")

    p = sub.add_parser("longform", help="Buffered encode and greedy CTC decode of a long feature file")
    _common(p)
    p.add_argument("--input", required=True, help="FCFT feature file")
    p.add_argument("--weights", help="FCWT weight file (default: seeded random weights)")
    p.add_argument("--buffer-s", type=float, help="Buffer length in seconds")
    p.add_argument("--context-s", type=float, help="Context on each side in seconds")
    p.add_argument("--decode-output", help="Write the DecodeResult JSON here")
    p.add_argument("--vocab-size", type=int, help="CTC vocabulary size including blank")
    p.add_argument("--max-workers", type=int, help="Buffers encoded in parallel")
    return parser


def run_command(args: argparse.Namespace):
    run = RunConfig.from_args(args)
    if args.command == "profile":
        return cmd_profile(run, args.duration)
    if args.command == "compare":
        return cmd_compare(run, args.schemas, args.duration)
    if args.command == "encode":
        return cmd_encode(run, args.input, args.weights)
    if args.command == "check-equivalence":
        return cmd_check_equivalence(run, args.frames, args.window, args.reference, args.tolerance)
    if args.command == "feasibility":
        return cmd_feasibility(run, args.manifest, args.length_field, args.synthesize, args.tokens_per_second)
    if args.command == "memory":
        return cmd_memory(run, args.calibration_preset, args.calibration_minutes)
    return cmd_longform(run, args.input, args.buffer_s, args.context_s, args.weights,
                        args.decode_output, args.vocab_size, args.max_workers)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ToolkitError as e:
        print(e.one_line(), file=sys.stderr)
        return 2
    LoggerConfig.setup_default_logging(args.log_level)
    try:
        run_command(args)
    except ToolkitError as e:
        logger.debug(f"{args.command} failed: {e!r}")
        print(e.one_line(), file=sys.stderr)
        return 2
    except Exception as e:
        logger.opt(exception=e).debug(f"{args.command} crashed")
        message = " ".join(str(e).split())
        print(f"internal_error: {type(e).__name__}: {message}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
