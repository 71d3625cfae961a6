"""
Multiply-accumulate instrumentation counter.
"""
from dataclasses import dataclass, field
from typing import Dict


@dataclass
class MacCounter:
    """Counts multiply-accumulate operations, in total and per operation tag.

    Only matmul and the convolutions increment the counter; elementwise ops,
    softmax and normalization are free under the counting convention.
    """

    total: int = 0
    per_tag: Dict[str, int] = field(default_factory=dict)

    def add(self, tag: str, macs: int):
        """Record `macs` operations under `tag`."""
        macs = int(macs)
        if macs < 0:
            raise ValueError(f"MAC increment must be non-negative, got {macs}")
        self.total += macs
        self.per_tag[tag] = self.per_tag.get(tag, 0) + macs

    def reset(self):
        """Zero every count."""
        self.total = 0
        self.per_tag.clear()

    def merge(self, other: "MacCounter"):
        """Fold another counter's counts into this one."""
        for tag, macs in other.per_tag.items():
            self.add(tag, macs)

    @property
    def gmacs(self) -> float:
        return self.total / 1e9
