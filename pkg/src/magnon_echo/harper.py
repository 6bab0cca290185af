"""Kicked Harper chain in the one-magnon sector.

Between kicks the magnon hops with the XY ring propagator; each kick
multiplies the amplitude at site ``x`` by ``exp(2 i tau g cos(2 pi eta x / N))``.
One period is taken as flight followed by kick, so ``n`` periods give
the composite Green function with the kick phase attached to the arrival
site of every flight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .chain import ChainSpec
from .channels import CoherentGate, KrausChannel
from .echo_analytic import gate_echo, kraus_echo
from .propagators import Propagator, apply_ring_flight, propagator_matrix, ring_column
from .series import EchoSeries
from .states import InitialState

COMMENSURATE_TOL = 1e-9


@dataclass(frozen=True)
class HarperParams:
    g: float
    tau: float
    size: int
    eta: int = 1

    def __post_init__(self):
        if not self.g >= 0:
            raise ValueError(f"kick strength g must be >= 0, got {self.g!r}")
        if not self.tau > 0:
            raise ValueError(f"kick period tau must be > 0, got {self.tau!r}")
        if int(self.size) != self.size or self.size < 3:
            raise ValueError(f"size must be an integer >= 3, got {self.size!r}")
        if int(self.eta) != self.eta or not 1 <= self.eta <= self.size - 1:
            raise ValueError(f"eta must be an integer in 1..N-1, got {self.eta!r}")
        object.__setattr__(self, "size", int(self.size))
        object.__setattr__(self, "eta", int(self.eta))

    @property
    def xy_chain(self) -> ChainSpec:
        return ChainSpec(self.size, anisotropy=0.0)

    def with_tau(self, tau: float) -> "HarperParams":
        return HarperParams(self.g, tau, self.size, self.eta)


def kick_phases(params: HarperParams) -> np.ndarray:
    x = np.arange(1, params.size + 1)
    return np.exp(2j * params.tau * params.g * np.cos(2.0 * np.pi * params.eta * x / params.size))


def harper_step(params: HarperParams) -> Propagator:
    flight = propagator_matrix(params.xy_chain, params.tau)
    return Propagator(params.xy_chain, params.tau,
                      kick_phases(params)[:, None] * flight.amplitudes)


def harper_green(params: HarperParams, kicks: int) -> Propagator:
    """Composite Green function after ``kicks`` periods (full table)."""
    if int(kicks) != kicks or kicks < 0:
        raise ValueError(f"kick count must be a non-negative integer, got {kicks!r}")
    step = harper_step(params).amplitudes
    table = np.linalg.matrix_power(step, int(kicks))
    return Propagator(params.xy_chain, kicks * params.tau, table)


def _check_kicks(kicks: Iterable[int]) -> list[int]:
    out = []
    for n in kicks:
        if int(n) != n or n < 0:
            raise ValueError(f"kick counts must be non-negative integers, got {n!r}")
        out.append(int(n))
    return out


def harper_columns(params: HarperParams, kicks: Sequence[int], source: int = 1) -> np.ndarray:
    """Rows ``G~[:, source](n tau)`` for each ``n`` in ``kicks``.

    Propagates one column with FFT flights, so long kick trains on large
    rings stay cheap.
    """
    kicks = _check_kicks(kicks)
    if not 1 <= source <= params.size:
        raise ValueError(f"source site {source} outside 1..{params.size}")
    out = np.zeros((len(kicks), params.size), dtype=complex)
    if not kicks:
        return out
    order = np.argsort(kicks, kind="stable")
    phases = kick_phases(params)
    vec = np.zeros(params.size, dtype=complex)
    vec[source - 1] = 1.0
    done = 0
    for i in order:
        for _ in range(kicks[i] - done):
            vec = phases * apply_ring_flight(vec, params.tau)
        done = kicks[i]
        out[i] = vec
    return out


def _xy_columns(n_sites: int, times: Iterable[float]) -> np.ndarray:
    return np.array([ring_column(n_sites, t) for t in times])


def _require_unentangled(state: InitialState) -> None:
    if state.is_entangled:
        raise ValueError("this echo is defined for the alpha|F> + beta|1> initial state")


def fixed_state_echo(state: InitialState, overlap: complex) -> float:
    return abs(abs(state.alpha) ** 2 + abs(state.beta) ** 2 * overlap) ** 2


def averaged_echo(overlap: complex) -> float:
    """Mean of ``|u + (1-u) S|^2`` for ``u`` uniform on [0, 1]."""
    return (1.0 + overlap.real + abs(overlap) ** 2) / 3.0


def echo_xy_vs_harper_series(state: InitialState, params: HarperParams, kicks: Sequence[int],
                             averaged: bool = False) -> EchoSeries:
    """Forward kicked evolution, backward XY evolution, sampled after each kick count."""
    _require_unentangled(state)
    kicks = _check_kicks(kicks)
    kicked = harper_columns(params, kicks)
    free = _xy_columns(params.size, [n * params.tau for n in kicks])
    overlaps = np.sum(kicked * free.conj(), axis=1)
    values = [averaged_echo(s) if averaged else fixed_state_echo(state, s) for s in overlaps]
    return EchoSeries.from_arrays("t", [n * params.tau for n in kicks], values,
                                  g=params.g, tau=params.tau, size=params.size,
                                  eta=params.eta, averaged=averaged)


def echo_xy_vs_harper(state: InitialState, params: HarperParams, kicks: int,
                      averaged: bool = False) -> float:
    return echo_xy_vs_harper_series(state, params, [kicks], averaged).values[0]


def _harper_site_components(state: InitialState, params: HarperParams, m: int,
                            kicks: Sequence[int]) -> list[tuple[complex, complex]]:
    if not 1 <= m <= params.size:
        raise ValueError(f"site {m} outside 1..{params.size}")
    comps = []
    if state.is_entangled:
        if not 2 <= state.partner <= params.size:
            raise ValueError(f"partner {state.partner} outside 2..{params.size}")
        from_1 = harper_columns(params, kicks, 1)[:, m - 1]
        from_r = harper_columns(params, kicks, state.partner)[:, m - 1]
        for g1, gr in zip(from_1, from_r):
            comps.append((0j, state.alpha * g1 + state.beta * gr))
    else:
        # the kicks leave |F> unchanged for integer eta and XY has no magnon gap
        for g1 in harper_columns(params, kicks, 1)[:, m - 1]:
            comps.append((state.alpha, state.beta * g1))
    return comps


def echo_harper_qdp_series(state: InitialState, params: HarperParams,
                           process: KrausChannel | CoherentGate, m: int,
                           kicks: Sequence[int]) -> EchoSeries:
    """Echo of one QDP at site ``m`` after ``n0`` kicks, for each ``n0`` in ``kicks``."""
    kicks = _check_kicks(kicks)
    comps = _harper_site_components(state, params, m, kicks)
    if isinstance(process, CoherentGate):
        values = [gate_echo(process, a, b) for a, b in comps]
    else:
        values = [kraus_echo(process, a, b) for a, b in comps]
    return EchoSeries.from_arrays("t0", [n * params.tau for n in kicks], values,
                                  g=params.g, tau=params.tau, size=params.size,
                                  eta=params.eta, m=m, qdp=process.describe())


def echo_harper_qdp(state: InitialState, params: HarperParams,
                    channel: KrausChannel | CoherentGate, m: int, n0: int) -> float:
    return echo_harper_qdp_series(state, params, channel, m, [n0]).values[0]


def _kick_count(t: float, tau: float) -> int | None:
    n = round(t / tau)
    if abs(n * tau - t) <= COMMENSURATE_TOL * max(1.0, abs(t)):
        return int(n)
    return None


def commensurate_times(tau1: float, tau2: float, t_max: float) -> list[tuple[float, int, int]]:
    """Times ``t = n1 tau1 = n2 tau2`` in ``(0, t_max]``.

    The ratio is reduced to ``p/q`` with ``q tau1 <= t_max``; it must match
    within 1e-9, otherwise no commensurate time exists in range.
    """
    if not (tau1 > 0 and tau2 > 0):
        raise ValueError("kick periods must be positive")
    max_den = int(math.floor(t_max / tau1 * (1 + COMMENSURATE_TOL)))
    if max_den < 1:
        return []
    ratio = tau1 / tau2
    frac = Fraction(ratio).limit_denominator(max_den)
    if abs(ratio - float(frac)) > COMMENSURATE_TOL * max(1.0, ratio):
        return []
    p, q = frac.numerator, frac.denominator
    out = []
    k = 1
    while True:
        n1, n2 = k * q, k * p
        t = n1 * tau1
        if t > t_max * (1 + COMMENSURATE_TOL):
            return out
        out.append((t, n1, n2))
        k += 1


def echo_harper_reverse(state: InitialState, forward: HarperParams, backward: HarperParams,
                        t: float) -> float:
    """Forward kicked evolution with period ``forward.tau``, backward with ``backward.tau``."""
    _check_pair(forward, backward)
    n1 = _kick_count(t, forward.tau)
    n2 = _kick_count(t, backward.tau)
    if n1 is None or n2 is None:
        raise ValueError(f"t = {t} is not a common multiple of {forward.tau} and {backward.tau}")
    return _reverse_values(state, forward, backward, [(t, n1, n2)])[0]


def _check_pair(forward: HarperParams, backward: HarperParams) -> None:
    if (forward.g, forward.size, forward.eta) != (backward.g, backward.size, backward.eta):
        raise ValueError("forward and backward evolutions must share g, N and eta")


def _reverse_values(state, forward, backward, points) -> list[float]:
    _require_unentangled(state)
    fw = harper_columns(forward, [n1 for _, n1, _ in points])
    bw = harper_columns(backward, [n2 for _, _, n2 in points])
    overlaps = np.sum(fw * bw.conj(), axis=1)
    return [fixed_state_echo(state, s) for s in overlaps]


def echo_harper_reverse_series(state: InitialState, forward: HarperParams,
                               backward: HarperParams, t_max: float) -> EchoSeries:
    _check_pair(forward, backward)
    points = commensurate_times(forward.tau, backward.tau, t_max)
    values = _reverse_values(state, forward, backward, points) if points else []
    return EchoSeries.from_arrays("t", [t for t, _, _ in points], values,
                                  g=forward.g, tau1=forward.tau, tau2=backward.tau,
                                  size=forward.size, eta=forward.eta)


def light_cone(params: HarperParams, kicks: Sequence[int], source: int = 1) -> list[tuple[int, int, complex]]:
    """``(x, n, G~[x, source](n tau))`` rows for a site-time map."""
    kicks = _check_kicks(kicks)
    cols = harper_columns(params, kicks, source)
    return [(x, n, complex(cols[i, x - 1]))
            for i, n in enumerate(kicks) for x in range(1, params.size + 1)]
