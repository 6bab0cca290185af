"""One-magnon Green functions of the XXZ ring and the infinite chain.

``G[x', x](t)`` is the amplitude for a down spin to hop from ``x`` to ``x'``
with the ferromagnetic energy and the magnon gap stripped off, i.e. the
propagator of the nearest-neighbour hopping band ``-2 cos p``. Sites are
1-based throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bessel import bessel_j
from .chain import ChainSpec
from .states import InitialState

_I_POWERS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


@dataclass(frozen=True, eq=False)
class Propagator:
    """Full one-magnon amplitude table; ``amplitudes[x'-1, x-1] = G[x', x]``."""

    chain: ChainSpec
    time: float
    amplitudes: np.ndarray

    @property
    def size(self) -> int:
        return self.amplitudes.shape[0]

    def amplitude(self, x_to: int, x_from: int) -> complex:
        return complex(self.amplitudes[x_to - 1, x_from - 1])

    def column(self, x_from: int = 1) -> np.ndarray:
        return self.amplitudes[:, x_from - 1]

    def column_norm_deviation(self) -> float:
        norms = np.sum(np.abs(self.amplitudes) ** 2, axis=0)
        return float(np.max(np.abs(norms - 1.0)))

    def __matmul__(self, other: "Propagator") -> "Propagator":
        return Propagator(self.chain, self.time + other.time, self.amplitudes @ other.amplitudes)


def band_phases(n_sites: int, t: float) -> np.ndarray:
    """``exp(2 i t cos p)`` for ``p = 2 pi l / N``, ``l = 0..N-1``."""
    p = 2.0 * np.pi * np.arange(n_sites) / n_sites
    return np.exp(2j * t * np.cos(p))


def green_infinite(x_to: int, x_from: int, t: float) -> complex:
    """``i^n J_n(2t)`` with ``n = x_to - x_from``."""
    n = int(x_to) - int(x_from)
    return _I_POWERS[n % 4] * bessel_j(n, 2.0 * t)


def green_finite(chain: ChainSpec, x_to: int, x_from: int, t: float) -> complex:
    """Plane-wave sum ``(1/N) sum_l exp(i p (x_to - x_from)) exp(2 i t cos p)``."""
    n_sites = chain.require_finite("green_finite")
    chain.check_site(x_to, "x_to")
    chain.check_site(x_from, "x_from")
    p = 2.0 * np.pi * np.arange(1, n_sites + 1) / n_sites
    terms = np.exp(1j * p * (x_to - x_from) + 2j * t * np.cos(p))
    return complex(terms.sum() / n_sites)


def green(chain: ChainSpec, x_to: int, x_from: int, t: float) -> complex:
    if chain.is_finite:
        return green_finite(chain, x_to, x_from, t)
    return green_infinite(x_to, x_from, t)


def ring_column(n_sites: int, t: float) -> np.ndarray:
    """``G[x, 1](t)`` for ``x = 1..N``; the ring propagator is circulant."""
    return np.fft.ifft(band_phases(n_sites, t))


def apply_ring_flight(vec: np.ndarray, t: float) -> np.ndarray:
    """Propagate one-magnon amplitudes over time ``t`` (circular convolution)."""
    return np.fft.ifft(band_phases(vec.shape[-1], t) * np.fft.fft(vec, axis=-1), axis=-1)


def propagator_matrix(chain: ChainSpec, t: float) -> Propagator:
    n_sites = chain.require_finite("propagator_matrix")
    col = ring_column(n_sites, t)
    idx = (np.arange(n_sites)[:, None] - np.arange(n_sites)[None, :]) % n_sites
    return Propagator(chain, float(t), col[idx])


def dressed_green(chain: ChainSpec, m: int, t: float, source: int = 1) -> complex:
    """``exp(-i gap t) G[m, source](t)``: the one-magnon amplitude measured
    relative to the ferromagnetic component."""
    chain.check_site(m, "m")
    return complex(np.exp(-1j * chain.magnon_gap * t)) * green(chain, m, source, t)


def combined_K(state: InitialState, chain: ChainSpec, m: int, t: float) -> complex:
    """``alpha G[m, 1](t) + beta G[m, r](t)`` for the entangled state."""
    if not state.is_entangled:
        raise ValueError("combined_K is defined for the entangled initial state only")
    state.check_chain(chain)
    chain.check_site(m, "m")
    return state.alpha * green(chain, m, 1, t) + state.beta * green(chain, m, state.partner, t)


def inverse_participation_ratio(amplitudes: np.ndarray) -> float:
    """``sum |psi_x|^4`` after normalising the profile."""
    w = np.abs(np.asarray(amplitudes)) ** 2
    total = w.sum()
    if total == 0.0:
        raise ValueError("zero amplitude profile")
    w = w / total
    return float(np.sum(w * w))


def participation_ratio(amplitudes: np.ndarray) -> float:
    return 1.0 / inverse_participation_ratio(amplitudes)

