"""Initial states and their zero-plus-one-magnon sector representations.

Sector basis ordering is ``[|F>, |1>, ..., |N>]`` where ``|x>`` has a single
down spin at site ``x``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import ChainSpec

NORM_TOL = 1e-12


@dataclass(frozen=True)
class InitialState:
    """``alpha|F> + beta|1>`` (``partner is None``) or ``alpha|1> + beta|r>``."""

    alpha: complex
    beta: complex
    partner: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {norm!r}, expected 1")
        if self.partner is not None:
            if int(self.partner) != self.partner or self.partner < 2:
                raise ValueError(f"entangled partner site must be an integer >= 2, got {self.partner!r}")
            object.__setattr__(self, "partner", int(self.partner))

    @classmethod
    def unentangled(cls, alpha: complex, beta: complex) -> "InitialState":
        return cls(alpha, beta)

    @classmethod
    def entangled(cls, alpha: complex, beta: complex, partner: int) -> "InitialState":
        return cls(alpha, beta, partner)

    @classmethod
    def from_beta2(cls, beta2: float, partner: int | None = None) -> "InitialState":
        """Real amplitudes with ``|beta|^2 = beta2``."""
        if not 0.0 <= beta2 <= 1.0:
            raise ValueError(f"beta2 must lie in [0, 1], got {beta2}")
        return cls(np.sqrt(1.0 - beta2), np.sqrt(beta2), partner)

    @property
    def is_entangled(self) -> bool:
        return self.partner is not None

    @property
    def vacuum_amplitude(self) -> complex:
        return 0j if self.is_entangled else self.alpha

    def check_chain(self, chain: ChainSpec) -> None:
        if self.partner is not None:
            chain.check_site(self.partner, "partner")

    def magnon_sources(self) -> list[tuple[int, complex]]:
        """(site, amplitude) pairs of the one-magnon part at t = 0."""
        if self.partner is None:
            return [(1, self.beta)]
        return [(1, self.alpha), (self.partner, self.beta)]

    def sector_vector(self, n_sites: int) -> np.ndarray:
        vec = np.zeros(n_sites + 1, dtype=complex)
        vec[0] = self.vacuum_amplitude
        for site, amp in self.magnon_sources():
            if site > n_sites:
                raise ValueError(f"site {site} outside 1..{n_sites}")
            vec[site] += amp
        return vec


@dataclass
class SectorState:
    vacuum_amp: complex
    magnon_amps: np.ndarray

    def __post_init__(self):
        self.magnon_amps = np.asarray(self.magnon_amps, dtype=complex)
        norm = abs(self.vacuum_amp) ** 2 + float(np.vdot(self.magnon_amps, self.magnon_amps).real)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"sector state norm {norm!r} != 1")

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "SectorState":
        return cls(complex(vec[0]), np.array(vec[1:]))

    def vector(self) -> np.ndarray:
        return np.concatenate([[self.vacuum_amp], self.magnon_amps])


@dataclass
class SectorDensity:
    """Density matrix restricted to the span of ``|F>`` and the one-magnon states."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)

    @classmethod
    def pure(cls, vec: np.ndarray) -> "SectorDensity":
        vec = np.asarray(vec, dtype=complex)
        return cls(np.outer(vec, vec.conj()))

    def conjugate_by(self, unitary: np.ndarray) -> "SectorDensity":
        return SectorDensity(unitary @ self.matrix @ unitary.conj().T)

    def dephase(self, mask: np.ndarray) -> "SectorDensity":
        """Elementwise product with ``sum_i e_i e_i^dagger`` of a diagonal Kraus set."""
        return SectorDensity(self.matrix * mask)

    def expectation(self, vec: np.ndarray) -> float:
        return float(np.vdot(vec, self.matrix @ vec).real)

    def check(self, tol: float = 1e-10) -> None:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("sector density is not Hermitian")
        if abs(np.trace(m).real - 1.0) > tol:
            raise ValueError("sector density trace != 1")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() < -tol:
            raise ValueError("sector density is not positive semidefinite")
