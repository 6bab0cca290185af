"""Dispatch a :class:`RunConfig` to the echo and propagator routines."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np

from .chain import ChainSpec
from .channels import (CoherentGate, KrausChannel, QdpEvent, QdpSequence, bit_flip, coherent,
                       phase_flip, project_x, project_z)
from .config import RunConfig
from .echo_analytic import (echo_coherent, echo_incoherent, echo_multi_exact_z, echo_multi_truncated,
                            string_amplitude_exact, string_amplitude_truncated)
from .exact_oracle import Scenario, oracle_echo
from .harper import (HarperParams, echo_harper_qdp_series, echo_harper_reverse_series,
                     echo_xy_vs_harper_series, light_cone)
from .series import EchoSeries
from .states import InitialState

THREADS_ENV = "MAGNON_ECHO_THREADS"


@dataclass
class AmplitudeSeries:
    """Complex values over one sweep axis."""

    axis: str
    params: np.ndarray
    values: np.ndarray


@dataclass
class LightCone:
    rows: list[tuple[int, int, complex]]


Curve = Union[EchoSeries, AmplitudeSeries, LightCone]


@dataclass
class RunResult:
    config: RunConfig
    curves: list[tuple[str, Curve]]


class ScenarioError(RuntimeError):
    pass


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# -- model pieces --------------------------------------------------------------

def _chain(cfg: RunConfig) -> ChainSpec:
    return ChainSpec(cfg.size, cfg.anisotropy, cfg.gap)


def _harper(cfg: RunConfig, tau: float | None = None) -> HarperParams:
    if cfg.size is None:
        raise ValueError("the kicked Harper chain needs a finite N")
    return HarperParams(cfg.g, cfg.tau if tau is None else tau, cfg.size, cfg.eta)


def _state(cfg: RunConfig) -> InitialState:
    return InitialState(cfg.alpha, cfg.beta, cfg.partner if cfg.state == "entangled" else None)


def _process(cfg: RunConfig) -> KrausChannel | CoherentGate:
    if cfg.channel == "phase-flip":
        return phase_flip(cfg.p)
    if cfg.channel == "bit-flip":
        return bit_flip(cfg.p)
    if cfg.channel == "project-z":
        return project_z()
    if cfg.channel == "project-x":
        return project_x()
    return coherent(cfg.gamma, cfg.delta)


def _sites(cfg: RunConfig, count: int) -> tuple[int, ...]:
    if cfg.random_sites is not None:
        lo, hi = cfg.random_sites
        rng = np.random.default_rng(cfg.seed)
        return tuple(int(x) for x in rng.integers(lo, hi + 1, count))
    if len(cfg.sites) < count:
        raise ValueError(f"{count} QDP sites needed, {len(cfg.sites)} given")
    return cfg.sites[:count]


def _need(cfg: RunConfig, name: str):
    v = getattr(cfg, name)
    if v is None:
        raise ValueError(f"--{name} must be fixed when sweeping {cfg.axis}")
    return v


def _kicks_from_times(times, tau: float) -> list[int]:
    out = []
    for t in times:
        n = round(t / tau)
        if abs(n * tau - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not a whole number of kick periods {tau}")
        out.append(int(n))
    return out


def _axis_values(cfg: RunConfig, allowed: tuple[str, ...]) -> list[float]:
    if cfg.axis not in allowed:
        raise ValueError(f"{cfg.scenario} sweeps {'/'.join(allowed)}, not {cfg.axis}")
    return list(cfg.grid)


# -- scenarios -----------------------------------------------------------------

def _single_point(cfg: RunConfig, process, m: int, t0: float) -> float:
    state, chain = _state(cfg), _chain(cfg)
    if isinstance(process, CoherentGate):
        return echo_coherent(state, chain, m, t0, process)
    return echo_incoherent(state, chain, QdpEvent(m, t0, process))


def _run_single(cfg: RunConfig, coherent_only: bool) -> EchoSeries:
    # echo-coherent always applies the gamma/delta gate, whatever --channel says
    process = coherent(cfg.gamma, cfg.delta) if coherent_only else _process(cfg)
    if isinstance(process, CoherentGate) and not coherent_only:
        raise ValueError("the coherent gate belongs to the echo-coherent scenario")
    grid = _axis_values(cfg, ("t0", "m"))
    if cfg.axis == "t0":
        values = [_single_point(cfg, process, cfg.m, t0) for t0 in grid]
    else:
        t0 = _need(cfg, "t0")
        values = [_single_point(cfg, process, int(m), t0) for m in grid]
    return EchoSeries.from_arrays(cfg.axis, grid, values, qdp=process.describe())


def _run_multi(cfg: RunConfig) -> Curve:
    state, chain = _state(cfg), _chain(cfg)
    if cfg.quantity == "amplitude":
        grid = _axis_values(cfg, ("t0",))
        sites = _sites(cfg, len(cfg.sites) or 3)
        values = []
        for t0 in grid:
            intervals = [t0] * len(sites)
            if cfg.order is None:
                values.append(string_amplitude_exact(chain, state, sites, intervals))
            else:
                values.append(string_amplitude_truncated(chain, state, sites, intervals, cfg.order))
        return AmplitudeSeries("t0", np.array(grid), np.array(values))
    grid = _axis_values(cfg, ("n",))
    process = _process(cfg)
    if isinstance(process, CoherentGate):
        raise ValueError("coherent QDP sequences are covered by the oracle scenario")
    seq = QdpSequence(cfg.spacing, _sites(cfg, int(grid[-1])), process)
    if cfg.order is None:
        full = echo_multi_exact_z(state, chain, seq)
    else:
        full = echo_multi_truncated(state, chain, seq, cfg.order)
    wanted = {int(n) for n in grid}
    return EchoSeries("n", [s for s in full.samples if int(s[0]) in wanted],
                      full.metadata, check_range=cfg.order is None)


def _run_harper_green(cfg: RunConfig) -> LightCone:
    grid = _axis_values(cfg, ("kicks",))
    return LightCone(light_cone(_harper(cfg), [int(k) for k in grid], source=cfg.m))


def _harper_kicks(cfg: RunConfig, time_axis: str) -> list[int]:
    grid = _axis_values(cfg, ("kicks", time_axis))
    if cfg.axis == "kicks":
        return [int(k) for k in grid]
    return _kicks_from_times(grid, cfg.tau)


def _run_harper_echo(cfg: RunConfig) -> EchoSeries:
    return echo_xy_vs_harper_series(_state(cfg), _harper(cfg), _harper_kicks(cfg, "t"), cfg.averaged)


def _run_harper_qdp(cfg: RunConfig) -> EchoSeries:
    params, state, process = _harper(cfg), _state(cfg), _process(cfg)
    if cfg.axis == "m":
        n0 = _need(cfg, "kicks")
        values = [echo_harper_qdp_series(state, params, process, int(m), [n0]).values[0]
                  for m in cfg.grid]
        return EchoSeries.from_arrays("m", cfg.grid, values, kicks=n0, qdp=process.describe())
    return echo_harper_qdp_series(state, params, process, cfg.m, _harper_kicks(cfg, "t0"))


def _run_harper_reverse(cfg: RunConfig) -> EchoSeries:
    backward = cfg.tau if cfg.tau2 is None else cfg.tau2
    return echo_harper_reverse_series(_state(cfg), _harper(cfg), _harper(cfg, backward), cfg.t_max)


def _run_oracle(cfg: RunConfig) -> EchoSeries:
    model = _harper(cfg) if cfg.model == "harper" else _chain(cfg)
    state, process = _state(cfg), _process(cfg)
    if cfg.axis == "n":
        n_max = int(cfg.grid[-1])
        events = QdpSequence(cfg.spacing, _sites(cfg, n_max), process).events()
        if cfg.model == "harper" and cfg.spacing != int(cfg.spacing):
            raise ValueError("for the Harper oracle the spacing is a kick count")
        values = [oracle_echo(Scenario(model, state, events[:int(n)])) for n in cfg.grid]
        return EchoSeries.from_arrays("n", cfg.grid, values, qdp=process.describe(), model=cfg.model)
    if cfg.axis == "m":
        if cfg.model == "harper":
            epoch = _need(cfg, "kicks")
        else:
            epoch = _need(cfg, "t0")
        points = [(int(m), epoch) for m in cfg.grid]
        axis, params = "m", list(cfg.grid)
    elif cfg.model == "harper":
        # same t0 = n0 tau axis as harper-echo-qdp, so the two outputs diff directly
        kicks = _harper_kicks(cfg, "t0")
        points = [(cfg.m, k) for k in kicks]
        axis, params = "t0", [k * cfg.tau for k in kicks]
    else:
        points = [(cfg.m, e) for e in _axis_values(cfg, ("t0",))]
        axis, params = "t0", list(cfg.grid)
    values = [oracle_echo(Scenario(model, state, [QdpEvent(m, e, process)])) for m, e in points]
    return EchoSeries.from_arrays(axis, params, values, qdp=process.describe(), model=cfg.model)


_DISPATCH = {
    "echo-single": lambda c: _run_single(c, coherent_only=False),
    "echo-coherent": lambda c: _run_single(c, coherent_only=True),
    "echo-multi": _run_multi,
    "harper-green": _run_harper_green,
    "harper-echo": _run_harper_echo,
    "harper-echo-qdp": _run_harper_qdp,
    "harper-reverse": _run_harper_reverse,
    "oracle": _run_oracle,
}


def _run_curve(label: str, cfg: RunConfig) -> Curve:
    try:
        return _DISPATCH[cfg.scenario](cfg)
    except (ValueError, TypeError, ArithmeticError) as exc:
        where = f"{cfg.scenario}" + (f" [{label}]" if label else "")
        raise ScenarioError(f"{where}: {exc}") from exc


def run_scenario(cfg: RunConfig) -> RunResult:
    """Evaluate every curve of ``cfg``; curves run in a thread pool, results keep their order."""
    jobs = cfg.expand()
    workers = min(worker_count(), len(jobs))
    if workers <= 1:
        curves = [_run_curve(label, c) for label, c in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            curves = list(pool.map(lambda job: _run_curve(*job), jobs))
    return RunResult(cfg, [(label, curve) for (label, _), curve in zip(jobs, curves)])
