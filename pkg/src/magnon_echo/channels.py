"""Single-site quantum dynamical processes (QDPs).

Local basis convention: ``|0>`` is spin up (sz = +1), ``|1>`` is spin down,
so a magnon at site ``m`` is ``|1>`` on that site.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

COMPLETENESS_TOL = 1e-12
GATE_RENORM_TOL = 1e-9

# a non-selective projective measurement is the phase flip with p = 1/2
MEASUREMENT_P = 0.5


class ChannelLabel(str, enum.Enum):
    PHASE_FLIP = "phase-flip"
    BIT_FLIP = "bit-flip"
    PROJECT_Z = "project-z"
    PROJECT_X = "project-x"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class KrausChannel:
    label: ChannelLabel
    operators: tuple[np.ndarray, ...]
    mixing: float | None = None

    def __post_init__(self):
        ops = tuple(np.array(op, dtype=complex) for op in self.operators)
        if not ops:
            raise ValueError("a Kraus channel needs at least one operator")
        for op in ops:
            if op.shape != (2, 2):
                raise ValueError(f"Kraus operators must be 2x2, got shape {op.shape}")
            op.setflags(write=False)
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "label", ChannelLabel(self.label))

    def completeness_residual(self) -> float:
        total = sum(op.conj().T @ op for op in self.operators)
        return float(np.max(np.abs(total - IDENTITY)))

    @property
    def preserves_magnon_number(self) -> bool:
        return all(abs(op[0, 1]) <= COMPLETENESS_TOL and abs(op[1, 0]) <= COMPLETENESS_TOL
                   for op in self.operators)

    def describe(self) -> str:
        if self.mixing is None:
            return self.label.value
        return f"{self.label.value}(p={self.mixing:g})"


@dataclass(frozen=True)
class CoherentGate:
    """``V|0> = gamma|0> + delta|1>``, ``V|1> = -conj(delta)|0> + conj(gamma)|1>``."""

    gamma: complex
    delta: complex

    def __post_init__(self):
        object.__setattr__(self, "gamma", complex(self.gamma))
        object.__setattr__(self, "delta", complex(self.delta))
        norm2 = abs(self.gamma) ** 2 + abs(self.delta) ** 2
        if abs(norm2 - 1.0) > COMPLETENESS_TOL:
            raise ValueError(f"|gamma|^2 + |delta|^2 = {norm2!r}; use coherent() to renormalise")

    @property
    def gamma_imag(self) -> float:
        return self.gamma.imag

    @property
    def matrix(self) -> np.ndarray:
        g, d = self.gamma, self.delta
        return np.array([[g, -d.conjugate()], [d, g.conjugate()]], dtype=complex)

    def inverse(self) -> "CoherentGate":
        # V^dagger has first column (conj(gamma), -delta)
        return CoherentGate(self.gamma.conjugate(), -self.delta)

    def describe(self) -> str:
        return f"coherent(gamma={self.gamma:.6g}, delta={self.delta:.6g})"


QdpKind = Union[KrausChannel, CoherentGate]


@dataclass(frozen=True)
class QdpEvent:
    site: int
    epoch: float
    kind: QdpKind

    def __post_init__(self):
        if int(self.site) != self.site or self.site < 1:
            raise ValueError(f"QDP site must be a positive integer, got {self.site!r}")
        if not self.epoch >= 0:
            raise ValueError(f"QDP epoch must be non-negative, got {self.epoch!r}")


@dataclass(frozen=True)
class QdpSequence:
    """Events at ``spacing, 2*spacing, ...`` on ``sites[0], sites[1], ...``."""

    spacing: float
    sites: tuple[int, ...]
    kind: QdpKind = field(compare=False)

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing!r}")
        sites = tuple(int(s) for s in self.sites)
        if not sites:
            raise ValueError("a QDP sequence needs at least one site")
        if min(sites) < 1:
            raise ValueError("QDP sites are 1-based")
        object.__setattr__(self, "sites", sites)

    def events(self) -> list[QdpEvent]:
        return [QdpEvent(m, (j + 1) * self.spacing, self.kind) for j, m in enumerate(self.sites)]


def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p: value {p} outside [0, 1]")
    return p


def phase_flip(p: float) -> KrausChannel:
    p = _check_p(p)
    return KrausChannel(ChannelLabel.PHASE_FLIP,
                        (math.sqrt(p) * IDENTITY, math.sqrt(1.0 - p) * SIGMA_Z), p)


def bit_flip(p: float) -> KrausChannel:
    p = _check_p(p)
    return KrausChannel(ChannelLabel.BIT_FLIP,
                        (math.sqrt(p) * IDENTITY, math.sqrt(1.0 - p) * SIGMA_X), p)


def project_z() -> KrausChannel:
    return KrausChannel(ChannelLabel.PROJECT_Z,
                        ((IDENTITY + SIGMA_Z) / 2, (IDENTITY - SIGMA_Z) / 2))


def project_x() -> KrausChannel:
    return KrausChannel(ChannelLabel.PROJECT_X,
                        ((IDENTITY + SIGMA_X) / 2, (IDENTITY - SIGMA_X) / 2))


def custom(operators: Sequence[np.ndarray]) -> KrausChannel:
    """Arbitrary operator list; completeness is checked by :func:`validate_channel`."""
    return KrausChannel(ChannelLabel.CUSTOM, tuple(operators))


def coherent(gamma: complex, delta: complex) -> CoherentGate:
    """Build ``V_m`` from its first column.

    Pairs within 1e-9 of unit norm are renormalised; anything further off
    is rejected.
    """
    gamma, delta = complex(gamma), complex(delta)
    norm2 = abs(gamma) ** 2 + abs(delta) ** 2
    if not math.isfinite(norm2) or abs(norm2 - 1.0) > GATE_RENORM_TOL:
        raise ValueError(f"|gamma|^2 + |delta|^2 = {norm2!r}; the gate is not unitary")
    scale = 1.0 / math.sqrt(norm2)
    return CoherentGate(gamma * scale, delta * scale)


@dataclass(frozen=True)
class ChannelReport:
    completeness_residual: float
    operator_norms: tuple[float, ...]
    ok: bool
    problems: tuple[str, ...] = ()


def validate_channel(ch: KrausChannel, tol: float = COMPLETENESS_TOL) -> ChannelReport:
    residual = ch.completeness_residual()
    norms = tuple(float(np.linalg.norm(op, 2)) for op in ch.operators)
    problems = []
    if residual > tol:
        problems.append(f"completeness residual {residual:.3g} exceeds {tol:g}")
    if any(not np.all(np.isfinite(op)) for op in ch.operators):
        problems.append("non-finite operator entries")
    return ChannelReport(residual, norms, not problems, tuple(problems))


def dephasing_probability(ch: KrausChannel) -> float:
    """Return ``p`` such that ``ch`` acts as ``phase_flip(p)``.

    Works for any magnon-number-conserving channel whose coherence factor
    ``sum_i e_i(up) conj(e_i(down))`` is real; raises otherwise.
    """
    if not ch.preserves_magnon_number:
        raise ValueError(f"{ch.describe()} does not conserve magnon number")
    coherence = sum(op[0, 0] * op[1, 1].conjugate() for op in ch.operators)
    if abs(coherence.imag) > COMPLETENESS_TOL:
        raise ValueError(f"{ch.describe()} adds a phase to coherences; not a phase flip")
    return 0.5 * (1.0 + coherence.real)
