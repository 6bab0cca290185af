"""Chain geometry and couplings shared by every model."""
from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class ChainSpec:
    """A periodic XXZ ring of ``size`` sites, or the infinite chain (``size=None``).

    ``magnon_gap`` is the energy of a localised magnon above the ferromagnetic
    state once the hopping band is removed. For the XXZ Hamiltonian with
    coupling ``-1/2 (sx sx + sy sy + anisotropy sz sz)`` this is
    ``2 * anisotropy`` and that is the default.
    """

    size: int | None
    anisotropy: float = 1.0
    magnon_gap: float | None = field(default=None)

    def __post_init__(self):
        if self.size is not None:
            if int(self.size) != self.size or self.size < 3:
                raise ValueError(f"finite chain needs an integer size >= 3, got {self.size!r}")
            object.__setattr__(self, "size", int(self.size))
        if not math.isfinite(self.anisotropy):
            raise ValueError("anisotropy must be finite")
        if self.magnon_gap is None:
            object.__setattr__(self, "magnon_gap", 2.0 * self.anisotropy)
        elif not math.isfinite(self.magnon_gap):
            raise ValueError("magnon_gap must be finite")

    @classmethod
    def infinite(cls, anisotropy: float = 1.0, magnon_gap: float | None = None) -> "ChainSpec":
        return cls(None, anisotropy, magnon_gap)

    @property
    def is_finite(self) -> bool:
        return self.size is not None

    @property
    def ground_energy(self) -> float:
        if self.size is None:
            raise ValueError("ground-state energy diverges on the infinite chain")
        return -0.5 * self.size * self.anisotropy

    def check_site(self, x: int, name: str = "site") -> int:
        if int(x) != x:
            raise ValueError(f"{name} must be an integer, got {x!r}")
        x = int(x)
        if self.size is not None and not 1 <= x <= self.size:
            raise ValueError(f"{name} {x} outside 1..{self.size}")
        return x

    def require_finite(self, what: str) -> int:
        if self.size is None:
            raise ValueError(f"{what} needs a finite chain")
        return self.size
