from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

RANGE_TOL = 1e-10
AXES = ("t0", "t", "n", "m")


@dataclass
class EchoSeries:
    """A sampled echo curve ``L(axis)`` plus whatever describes the run."""

    axis: str
    samples: list[tuple[float, float]]
    metadata: dict[str, Any] = field(default_factory=dict)
    check_range: bool = True

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}; expected one of {AXES}")
        self.samples = [(float(a), float(v)) for a, v in self.samples]
        if self.check_range:
            for a, v in self.samples:
                if not -RANGE_TOL <= v <= 1.0 + RANGE_TOL:
                    raise ValueError(f"echo value {v!r} at {self.axis}={a} outside [0, 1]")

    @classmethod
    def from_arrays(cls, axis: str, params: Iterable[float], values: Iterable[float], **meta) -> "EchoSeries":
        return cls(axis, list(zip(params, values)), dict(meta))

    @property
    def params(self) -> np.ndarray:
        return np.array([a for a, _ in self.samples])

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.samples])

    def __len__(self) -> int:
        return len(self.samples)
