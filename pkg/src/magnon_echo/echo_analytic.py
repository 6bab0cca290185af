"""Loschmidt echoes of local processes on the Heisenberg/XY chain.

The initial states only ever populate ``|F>`` and the one-magnon states, so
a single-site operator ``E`` at site ``m`` has expectation

    <E> = e00 (1 - |b|^2) + e11 |b|^2 + e10 a conj(b) + e01 conj(a) b

where ``a`` is the ``|F>`` amplitude and ``b`` the ``|m>`` amplitude, both
taken relative to the ferromagnetic phase. Every single-QDP echo below is
built from that.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Sequence

import numpy as np

from .chain import ChainSpec
from .channels import CoherentGate, KrausChannel, QdpEvent, QdpSequence, dephasing_probability
from .propagators import combined_K, dressed_green, green_infinite, ring_column
from .series import EchoSeries
from .states import InitialState, SectorDensity


def site_components(state: InitialState, chain: ChainSpec, m: int, t0: float) -> tuple[complex, complex]:
    """``(a, b)``: amplitudes of ``|F>`` and ``|m>`` in the state at ``t0``."""
    state.check_chain(chain)
    chain.check_site(m, "m")
    if state.is_entangled:
        return 0j, combined_K(state, chain, m, t0)
    return state.alpha, state.beta * dressed_green(chain, m, t0)


def local_expectation(op: np.ndarray, a: complex, b: complex) -> complex:
    w = abs(b) ** 2
    return (op[0, 0] * (1.0 - w) + op[1, 1] * w
            + op[1, 0] * a * b.conjugate() + op[0, 1] * a.conjugate() * b)


def kraus_echo(channel: KrausChannel, a: complex, b: complex) -> float:
    """``sum_i |<E_i>|^2`` from the site components."""
    return float(sum(abs(local_expectation(op, a, b)) ** 2 for op in channel.operators))


def gate_echo(gate: CoherentGate, a: complex, b: complex) -> float:
    amp = (gate.gamma - 2j * gate.gamma_imag * abs(b) ** 2
           + 2j * (a * gate.delta * b.conjugate()).imag)
    return abs(amp) ** 2


def expect_sigma_z(state: InitialState, chain: ChainSpec, m: int, t0: float) -> float:
    _, b = site_components(state, chain, m, t0)
    return 1.0 - 2.0 * abs(b) ** 2


def expect_sigma_x(state: InitialState, chain: ChainSpec, m: int, t0: float) -> float:
    if state.is_entangled:
        # one-magnon state; sx changes the magnon number
        state.check_chain(chain)
        chain.check_site(m, "m")
        return 0.0
    a, b = site_components(state, chain, m, t0)
    return 2.0 * (a.conjugate() * b).real


def expect_sigma_y(state: InitialState, chain: ChainSpec, m: int, t0: float) -> float:
    a, b = site_components(state, chain, m, t0)
    return 2.0 * (a.conjugate() * b).imag


def echo_incoherent(state: InitialState, chain: ChainSpec, event: QdpEvent) -> float:
    if not isinstance(event.kind, KrausChannel):
        raise TypeError("echo_incoherent needs a Kraus channel event; use echo_coherent for gates")
    a, b = site_components(state, chain, event.site, event.epoch)
    return kraus_echo(event.kind, a, b)


def echo_coherent(state: InitialState, chain: ChainSpec, m: int, t0: float, gate: CoherentGate) -> float:
    a, b = site_components(state, chain, m, t0)
    return gate_echo(gate, a, b)


def coherent_asymptote(gate: CoherentGate, n: int) -> float:
    """Large-spacing value ``|gamma|^(2n)`` after ``n`` coherent QDPs."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return abs(gate.gamma) ** (2 * n)


# -- multiple QDPs ---------------------------------------------------------

def sector_unitary(chain: ChainSpec, t: float) -> np.ndarray:
    """Evolution over ``t`` on ``[|F>, |1>..|N>]`` with the ferromagnetic phase removed."""
    n_sites = chain.require_finite("sector evolution")
    col = np.exp(-1j * chain.magnon_gap * t) * ring_column(n_sites, t)
    idx = (np.arange(n_sites)[:, None] - np.arange(n_sites)[None, :]) % n_sites
    u = np.zeros((n_sites + 1, n_sites + 1), dtype=complex)
    u[0, 0] = 1.0
    u[1:, 1:] = col[idx]
    return u


def _sector_kraus_diagonals(channel: KrausChannel, m: int, n_sites: int) -> list[np.ndarray]:
    if not channel.preserves_magnon_number:
        raise ValueError(
            f"{channel.describe()} changes the magnon number; use the exact oracle for it")
    diags = []
    for op in channel.operators:
        d = np.full(n_sites + 1, op[0, 0], dtype=complex)
        d[m] = op[1, 1]
        diags.append(d)
    return diags


def _sigma_z_diagonal(m: int, n_sites: int) -> np.ndarray:
    d = np.ones(n_sites + 1)
    d[m] = -1.0
    return d


def echo_multi_exact_z(state: InitialState, chain: ChainSpec, seq: QdpSequence) -> EchoSeries:
    """``L(n)`` after each of the sequence's events, by evolving the sector density.

    Only channels diagonal in the local z basis are accepted: they keep the
    state inside the zero-plus-one-magnon sector, where this is exact.
    """
    n_sites = chain.require_finite("echo_multi_exact_z")
    state.check_chain(chain)
    if not isinstance(seq.kind, KrausChannel):
        raise ValueError("coherent QDP sequences leave the sector; use the exact oracle")
    for m in seq.sites:
        chain.check_site(m, "site")
    u = sector_unitary(chain, seq.spacing)
    ref = state.sector_vector(n_sites)
    rho = SectorDensity.pure(ref)
    samples = []
    for n, m in enumerate(seq.sites, start=1):
        diags = _sector_kraus_diagonals(seq.kind, m, n_sites)
        mask = sum(np.outer(d, d.conj()) for d in diags)
        rho = rho.conjugate_by(u).dephase(mask)
        ref = u @ ref
        samples.append((n, rho.expectation(ref)))
    return EchoSeries("n", samples, {"channel": seq.kind.describe(), "spacing": seq.spacing,
                                     "sites": list(seq.sites), "method": "sector-exact"})


def _cumulative_times(intervals: Sequence[float], n: int) -> list[float]:
    if len(intervals) not in (n, n + 1):
        raise ValueError(f"expected {n} or {n + 1} intervals for {n} sites, got {len(intervals)}")
    if any(t < 0 for t in intervals):
        raise ValueError("intervals must be non-negative")
    times, s = [], 0.0
    for t in intervals[:n]:
        s += t
        times.append(s)
    return times


def string_amplitude_exact(chain: ChainSpec, state: InitialState,
                           sites: Sequence[int], intervals: Sequence[float]) -> complex:
    """``<Psi(T)| U sz_{m_n} ... U sz_{m_1} U |Psi(0)>`` by direct sector evolution."""
    n_sites = chain.require_finite("string_amplitude_exact")
    state.check_chain(chain)
    _cumulative_times(intervals, len(sites))
    vec = state.sector_vector(n_sites)
    ref = vec.copy()
    for m, t in zip(sites, intervals):
        chain.check_site(m, "site")
        u = sector_unitary(chain, t)
        vec = _sigma_z_diagonal(m, n_sites) * (u @ vec)
        ref = u @ ref
    return complex(np.vdot(ref, vec))


class _GreenTable:
    """Green functions and propagated source amplitudes with caching."""

    def __init__(self, chain: ChainSpec, state: InitialState):
        self.chain = chain
        self.sources = state.magnon_sources()
        if chain.is_finite:
            n_sites = chain.size
            self._column = lru_cache(maxsize=None)(lambda t: ring_column(n_sites, t))
        else:
            self._bessel = lru_cache(maxsize=None)(green_infinite)

    def g(self, x_to: int, x_from: int, t: float) -> complex:
        if self.chain.is_finite:
            return complex(self._column(t)[(x_to - x_from) % self.chain.size])
        return self._bessel(x_to, x_from, t)

    def source(self, m: int, t: float) -> complex:
        # G[m,1] beta for |F>+|1>; K^m = alpha G[m,1] + beta G[m,r] when entangled
        return sum(amp * self.g(m, y, t) for y, amp in self.sources)


def _string_terms(table: _GreenTable, sites: Sequence[int], times: Sequence[float],
                  max_insertions: int) -> dict[tuple[int, ...], complex]:
    """``(-2)^q * (Green-function chain)`` for every insertion subset of size 1..max_insertions.

    A subset of ``q`` projector insertions carries ``q + 1`` Green functions.
    """
    terms = {}
    n = len(sites)
    for q in range(1, min(max_insertions, n) + 1):
        for subset in itertools.combinations(range(n), q):
            first, last = subset[0], subset[-1]
            value = table.source(sites[first], times[first])
            for j, k in zip(subset, subset[1:]):
                value *= table.g(sites[k], sites[j], times[k] - times[j])
            value *= table.source(sites[last], times[last]).conjugate()
            terms[subset] = (-2.0) ** q * value
    return terms


def _check_order(order: int) -> int:
    if int(order) != order or order < 2:
        raise ValueError(f"order must be an integer >= 2, got {order!r}")
    return int(order)


def string_amplitude_truncated(chain: ChainSpec, state: InitialState, sites: Sequence[int],
                               intervals: Sequence[float], order: int) -> complex:
    """Green-function expansion of the sz-string amplitude kept to ``order`` factors.

    ``intervals[j]`` is the free evolution before the ``j``-th insertion; a
    trailing interval after the last insertion is accepted and has no
    effect. ``order >= len(sites) + 1`` keeps every term.
    """
    order = _check_order(order)
    state.check_chain(chain)
    for m in sites:
        chain.check_site(m, "site")
    times = _cumulative_times(intervals, len(sites))
    terms = _string_terms(_GreenTable(chain, state), list(sites), times, order - 1)
    return complex(1.0 + sum(terms.values()))


def _subset_sums(n: int, terms: dict[tuple[int, ...], complex]) -> np.ndarray:
    """``f[A] = sum_{S subset of A} terms[S]`` over bitmasks ``A``."""
    f = np.zeros(1 << n, dtype=complex)
    for subset, value in terms.items():
        f[sum(1 << j for j in subset)] = value
    for bit in range(n):
        step = 1 << bit
        for mask in range(1 << n):
            if mask & step:
                f[mask] += f[mask ^ step]
    return f


def echo_multi_truncated(state: InitialState, chain: ChainSpec, seq: QdpSequence,
                         order: int) -> EchoSeries:
    """``L(n)`` assembled from ``2^n`` sz-strings, each expanded to ``order`` Green functions.

    The channel must act as a phase flip (``project_z`` is ``p = 1/2``).
    Truncated amplitudes need not give a value inside [0, 1], so the series
    is not range-checked.
    """
    order = _check_order(order)
    if not isinstance(seq.kind, KrausChannel):
        raise ValueError("the truncated expansion covers phase-flip type channels only")
    p = dephasing_probability(seq.kind)
    state.check_chain(chain)
    for m in seq.sites:
        chain.check_site(m, "site")
    n_max = len(seq.sites)
    times = [(j + 1) * seq.spacing for j in range(n_max)]
    terms = _string_terms(_GreenTable(chain, state), list(seq.sites), times, order - 1)
    amp = 1.0 + _subset_sums(n_max, terms)
    weight = abs(amp) ** 2
    popcount = np.array([bin(a).count("1") for a in range(1 << n_max)])
    samples = []
    for n in range(1, n_max + 1):
        masks = np.arange(1 << n)
        k = popcount[masks]
        total = np.sum(p ** (n - k) * (1.0 - p) ** k * weight[masks])
        samples.append((n, float(total)))
    return EchoSeries("n", samples, {"channel": seq.kind.describe(), "spacing": seq.spacing,
                                     "sites": list(seq.sites), "order": order,
                                     "method": "truncated"}, check_range=False)
