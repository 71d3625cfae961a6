"""
CTC length feasibility: the encoder must emit at least as many frames as the target has tokens.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union

import numpy as np
from loguru import logger

from src.encoder import SubsamplingSchema, output_length
from src.utils.errors import ConfigError, FormatError, InputTooShortError

DEFICIT_BINS = (("0", 0, 0), ("1-9", 1, 9), ("10-49", 10, 49), ("50-99", 50, 99),
                ("100-499", 100, 499), ("500+", 500, None))


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    deficit: int
    output_frames: int
    target_len: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            'feasible': self.feasible,
            'deficit': self.deficit,
            'output_frames': self.output_frames,
            'target_len': self.target_len,
        }


@dataclass(frozen=True)
class ManifestRecord:
    duration_s: float
    transcript_len: int


@dataclass
class CorpusFeasibility:
    records: int = 0
    infeasible: int = 0
    histogram: Dict[str, int] = field(default_factory=lambda: {name: 0 for name, _, _ in DEFICIT_BINS})

    @property
    def fraction(self) -> float:
        return self.infeasible / self.records if self.records else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'records': self.records,
            'infeasible': self.infeasible,
            'infeasible_fraction': self.fraction,
            'deficit_histogram': dict(self.histogram),
        }


def ctc_feasibility(t_in: int, schema: SubsamplingSchema, target_len: int) -> FeasibilityResult:
    """Whether `target_len` tokens fit into the encoder output of `t_in` frames."""
    if target_len < 0:
        raise ConfigError(f"target_len must be >= 0, got {target_len}")
    try:
        frames = output_length(t_in, schema)
    except InputTooShortError:
        frames = 0
    deficit = max(0, target_len - frames)
    return FeasibilityResult(feasible=deficit == 0, deficit=deficit, output_frames=frames, target_len=target_len)


def deficit_bin(deficit: int) -> str:
    for name, low, high in DEFICIT_BINS:
        if deficit >= low and (high is None or deficit <= high):
            return name
    raise ValueError(f"negative deficit {deficit}")


def load_manifest(path: Union[str, Path], length_field: str = "transcript_len") -> List[ManifestRecord]:
    """Read a JSON-lines manifest with `duration_s` and a transcript length field."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except FileNotFoundError:
        raise FormatError(f"manifest not found: {path}", code="file_not_found")

    records = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
            records.append(ManifestRecord(float(entry["duration_s"]), int(entry[length_field])))
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}:{line_no}: invalid JSON at column {e.colno}: {e.msg}")
        except KeyError as e:
            raise FormatError(f"{path}:{line_no}: record is missing field {e.args[0]}")
        except (TypeError, ValueError) as e:
            raise FormatError(f"{path}:{line_no}: bad field value: {e}")
    logger.debug(f"Read {len(records)} records from {path}")
    return records


def corpus_feasibility(records: Iterable[ManifestRecord], schema: SubsamplingSchema,
                       frame_hop_ms: float = 10.0) -> CorpusFeasibility:
    """Infeasible fraction and deficit histogram over a manifest."""
    summary = CorpusFeasibility()
    for record in records:
        t_in = int(round(record.duration_s * 1000.0 / frame_hop_ms))
        result = ctc_feasibility(t_in, schema, record.transcript_len)
        summary.records += 1
        summary.infeasible += 0 if result.feasible else 1
        summary.histogram[deficit_bin(result.deficit)] += 1
    if summary.records == 0:
        logger.warning("Manifest has no records; reporting an infeasible fraction of 0")
    return summary


def synthesize_manifest(n_records: int, tokens_per_second: float, seed: int = 0,
                        min_duration_s: float = 1.0, max_duration_s: float = 20.0,
                        jitter: float = 0.1) -> List[ManifestRecord]:
    """Seeded manifest whose transcripts run at about `tokens_per_second`.

    Character-level transcripts run at roughly 15 tokens/s of speech and a
    1024-piece BPE vocabulary at roughly 3 tokens/s.
    """
    if n_records < 0 or tokens_per_second < 0:
        raise ConfigError("n_records and tokens_per_second must be non-negative")
    rng = np.random.default_rng(seed)
    durations = rng.uniform(min_duration_s, max_duration_s, size=n_records)
    rates = tokens_per_second * np.clip(rng.normal(1.0, jitter, size=n_records), 0.5, 1.5)
    return [ManifestRecord(round(float(d), 2), int(round(d * r))) for d, r in zip(durations, rates)]


def write_manifest(path: Union[str, Path], records: Iterable[ManifestRecord]):
    with open(path, 'w') as f:
        for record in records:
            f.write(json.dumps({'duration_s': record.duration_s, 'transcript_len': record.transcript_len}) + "\n")
