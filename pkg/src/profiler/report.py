"""
Profile reports: per-layer parameters, MACs and working-set estimates.
"""
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional


@dataclass
class LayerProfile:
    name: str
    params: int = 0
    macs: int = 0
    peak_bytes: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'params': self.params, 'macs': self.macs, 'peak_bytes': self.peak_bytes}


@dataclass
class ProfileReport:
    """Per-layer accounting for one encoder on one input length.

    Totals are always the sum of the per-layer entries.
    """

    schema_name: str
    input_duration_s: float
    per_layer: List[LayerProfile] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def add(self, name: str, params: int = 0, macs: int = 0, peak_bytes: int = 0) -> LayerProfile:
        layer = LayerProfile(name, int(params), int(macs), int(peak_bytes))
        self.per_layer.append(layer)
        return layer

    @property
    def totals(self) -> Dict[str, int]:
        return {
            'params': sum(l.params for l in self.per_layer),
            'macs': sum(l.macs for l in self.per_layer),
            'peak_bytes': sum(l.peak_bytes for l in self.per_layer),
        }

    @property
    def total_params(self) -> int:
        return self.totals['params']

    @property
    def total_macs(self) -> int:
        return self.totals['macs']

    @property
    def gmacs(self) -> float:
        return self.total_macs / 1e9

    @property
    def params_m(self) -> float:
        return self.total_params / 1e6

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'schema_name': self.schema_name,
            'input_duration_s': self.input_duration_s,
            'per_layer': [l.to_dict() for l in self.per_layer],
            'totals': self.totals,
        }
        if self.notes:
            data['notes'] = list(self.notes)
        return data

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def render_table(self) -> str:
        """Fixed-width text table with a totals row."""
        width = max([len(l.name) for l in self.per_layer] + [len("TOTAL")])
        header = f"{'layer':<{width}}  {'params':>12}  {'MACs':>16}  {'peak bytes':>14}"
        lines = [
            f"{self.schema_name} @ {self.input_duration_s:g} s",
            header,
            "-" * len(header),
        ]
        for l in self.per_layer:
            lines.append(f"{l.name:<{width}}  {l.params:>12,}  {l.macs:>16,}  {l.peak_bytes:>14,}")
        totals = self.totals
        lines.append("-" * len(header))
        lines.append(f"{'TOTAL':<{width}}  {totals['params']:>12,}  {totals['macs']:>16,}  {totals['peak_bytes']:>14,}")
        lines.append(f"{self.params_m:.2f} M params, {self.gmacs:.2f} GMACs")
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines)
