"""Run configuration: flags, INI files and named presets.

Precedence is preset < config file < command-line flags. A preset may
carry several curves; each curve is a set of overrides applied on top of
the base configuration, except for keys the user set explicitly.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

GRID_TOL = 1e-12

SCENARIOS = ("echo-single", "echo-coherent", "echo-multi", "harper-green",
             "harper-echo", "harper-echo-qdp", "harper-reverse", "oracle")
CHANNELS = ("phase-flip", "bit-flip", "project-z", "project-x", "coherent")
STATES = ("unentangled", "entangled")
QUANTITIES = ("echo", "amplitude")
MODELS = ("xxz", "harper")
# flags that take start:stop:step grids; "m" doubles as a fixed site
SWEEP_KEYS = ("t0", "t", "n", "m", "kicks")
INTEGER_AXES = ("n", "m", "kicks")

_R2 = 1.0 / math.sqrt(2.0)
_R3 = 1.0 / math.sqrt(3.0)


class ConfigError(ValueError):
    """Invalid or incomplete configuration (usage error)."""


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    size: int | None = 1000
    anisotropy: float = 1.0
    gap: float | None = None
    g: float = 1.0
    tau: float = 0.1
    tau2: float | None = None
    eta: int = 1
    state: str = "unentangled"
    alpha: complex = complex(_R2)
    beta: complex = complex(_R2)
    partner: int = 5
    channel: str = "project-z"
    p: float = 0.5
    gamma: complex = complex(_R3, _R3)
    delta: complex = complex(_R3)
    m: int = 1
    t0: float | None = None
    t: float | None = None
    n: int | None = None
    kicks: int | None = None
    sites: tuple[int, ...] = ()
    random_sites: tuple[int, int] | None = None
    seed: int = 0
    spacing: float = 1.0
    order: int | None = None
    quantity: str = "echo"
    averaged: bool = False
    model: str = "xxz"
    t_max: float | None = None
    axis: str | None = None
    grid: tuple[float, ...] = ()
    out: str | None = None
    preset: str | None = None
    curves: tuple[tuple[str, tuple[tuple[str, Any], ...]], ...] = field(default=(), compare=False)

    def expand(self) -> list[tuple[str, "RunConfig"]]:
        """One configuration per curve (a single unnamed curve if there are none)."""
        if not self.curves:
            return [("", self)]
        return [(label, validate(dataclasses.replace(self, curves=(), **dict(over))))
                for label, over in self.curves]

    def as_dict(self) -> dict[str, Any]:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, complex):
                v = [v.real, v.imag]
            elif f.name == "curves":
                v = [[label, {k: _jsonable(x) for k, x in over}] for label, over in v]
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, tuple):
        return list(v)
    return v


# -- parsing helpers ---------------------------------------------------------

def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` with both endpoints included (stop within 1e-12)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid {text!r}: expected start:stop:step")
    try:
        start, stop, step = (float(x) for x in parts)
    except ValueError:
        raise ConfigError(f"grid {text!r}: non-numeric entry") from None
    if not all(math.isfinite(x) for x in (start, stop, step)):
        raise ConfigError(f"grid {text!r}: non-finite entry")
    if step <= 0:
        raise ConfigError(f"grid {text!r}: step must be positive")
    if stop < start:
        raise ConfigError(f"grid {text!r}: stop is below start")
    count = int(math.floor((stop - start) / step)) + 1
    if start + count * step <= stop + GRID_TOL:
        count += 1
    values = [start + k * step for k in range(count)]
    values = [v for v in values if v <= stop + GRID_TOL]
    if abs(values[-1] - stop) <= GRID_TOL:
        values[-1] = stop
    return tuple(values)


def _parse_size(text: str) -> int | None:
    if text.strip().lower() in ("inf", "infinite"):
        return None
    try:
        n = int(text)
    except ValueError:
        raise ConfigError(f"N: expected an integer or 'inf', got {text!r}") from None
    return n


def _parse_sites(text: str) -> tuple[tuple[int, ...], tuple[int, int] | None]:
    text = text.strip()
    if text.startswith("random:"):
        try:
            _, lo, hi = text.split(":")
            return (), (int(lo), int(hi))
        except ValueError:
            raise ConfigError(f"sites: expected random:LO:HI, got {text!r}") from None
    try:
        return tuple(int(x) for x in text.split(",") if x.strip()), None
    except ValueError:
        raise ConfigError(f"sites: expected comma-separated integers, got {text!r}") from None


def _parse_bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"averaged: expected a boolean, got {text!r}")


def _float(name: str):
    def conv(text: str) -> float:
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{name}: expected a number, got {text!r}") from None
    return conv


def _int(name: str):
    def conv(text: str) -> int:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{name}: expected an integer, got {text!r}") from None
    return conv


# key -> (converter, RunConfig field); complex parts and grids are handled separately
_SIMPLE = {
    "scenario": (str, "scenario"),
    "preset": (str, "preset"),
    "N": (_parse_size, "size"),
    "anisotropy": (_float("anisotropy"), "anisotropy"),
    "gap": (_float("gap"), "gap"),
    "g": (_float("g"), "g"),
    "tau": (_float("tau"), "tau"),
    "tau2": (_float("tau2"), "tau2"),
    "eta": (_int("eta"), "eta"),
    "state": (str, "state"),
    "r": (_int("r"), "partner"),
    "channel": (str, "channel"),
    "p": (_float("p"), "p"),
    "seed": (_int("seed"), "seed"),
    "spacing": (_float("spacing"), "spacing"),
    "order": (_int("order"), "order"),
    "quantity": (str, "quantity"),
    "averaged": (_parse_bool, "averaged"),
    "model": (str, "model"),
    "t-max": (_float("t-max"), "t_max"),
    "out": (str, "out"),
}
_COMPLEX = {"alpha-re": ("alpha", 0), "alpha-im": ("alpha", 1), "beta-re": ("beta", 0),
            "beta-im": ("beta", 1), "gamma-re": ("gamma", 0), "gamma-im": ("gamma", 1),
            "delta-re": ("delta", 0), "delta-im": ("delta", 1)}
_ALIASES = {"Delta": "anisotropy", "size": "N", "partner": "r",
            "t_max": "t-max"}
KNOWN_KEYS = tuple(_SIMPLE) + tuple(_COMPLEX) + SWEEP_KEYS + ("beta2", "sites")


def _canonical(key: str) -> str:
    key = key.strip()
    key = _ALIASES.get(key, key)
    if key not in KNOWN_KEYS:
        alt = key.replace("_", "-")
        key = _ALIASES.get(alt, alt)
    if key not in KNOWN_KEYS:
        raise ConfigError(f"unknown key {key!r}")
    return key


def _apply(values: dict[str, Any], key: str, text: str) -> None:
    """Fold one raw ``key = text`` pair into the field dict ``values``."""
    key = _canonical(key)
    if key in _SIMPLE:
        conv, name = _SIMPLE[key]
        values[name] = conv(text)
    elif key in _COMPLEX:
        name, part = _COMPLEX[key]
        x = _float(key)(text)
        old = complex(values.get(name, getattr(RunConfig, name)))
        values[name] = complex(x, old.imag) if part == 0 else complex(old.real, x)
    elif key == "beta2":
        b2 = _float("beta2")(text)
        if not 0.0 <= b2 <= 1.0:
            raise ConfigError(f"beta2: value {b2} outside [0, 1]")
        values["alpha"] = complex(math.sqrt(1.0 - b2))
        values["beta"] = complex(math.sqrt(b2))
    elif key == "sites":
        values["sites"], values["random_sites"] = _parse_sites(text)
    else:  # sweep keys
        if ":" in text:
            values["axis"] = key
            values["grid"] = parse_grid(text)
            values.setdefault("_grids", []).append(key)
        elif key in INTEGER_AXES:
            values[key] = _int(key)(text)
        else:
            values[key] = _float(key)(text)


# -- validation --------------------------------------------------------------

def _check_range(name: str, value: float, lo: float, hi: float) -> None:
    if not lo <= value <= hi:
        raise ConfigError(f"{name}: value {value} outside [{lo}, {hi}]")


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"scenario: unknown value {cfg.scenario!r}; expected one of {SCENARIOS}")
    if cfg.state not in STATES:
        raise ConfigError(f"state: unknown value {cfg.state!r}; expected one of {STATES}")
    if cfg.channel not in CHANNELS:
        raise ConfigError(f"channel: unknown value {cfg.channel!r}; expected one of {CHANNELS}")
    if cfg.quantity not in QUANTITIES:
        raise ConfigError(f"quantity: unknown value {cfg.quantity!r}")
    if cfg.model not in MODELS:
        raise ConfigError(f"model: unknown value {cfg.model!r}; expected one of {MODELS}")
    _check_range("p", cfg.p, 0.0, 1.0)
    if cfg.size is not None and cfg.size < 3:
        raise ConfigError(f"N: value {cfg.size} must be at least 3")
    if cfg.tau <= 0 or (cfg.tau2 is not None and cfg.tau2 <= 0):
        raise ConfigError("tau: kick periods must be positive")
    if cfg.g < 0:
        raise ConfigError(f"g: value {cfg.g} must be non-negative")
    if cfg.spacing <= 0:
        raise ConfigError(f"spacing: value {cfg.spacing} must be positive")
    if cfg.order is not None and cfg.order < 2:
        raise ConfigError(f"order: value {cfg.order} must be at least 2")
    if cfg.t_max is not None and cfg.t_max <= 0:
        raise ConfigError(f"t-max: value {cfg.t_max} must be positive")
    for name in ("alpha", "beta"):
        v = getattr(cfg, name)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ConfigError(f"{name}: non-finite amplitude")
    norm = abs(cfg.alpha) ** 2 + abs(cfg.beta) ** 2
    if abs(norm - 1.0) > 1e-9:
        raise ConfigError(f"alpha, beta: |alpha|^2 + |beta|^2 = {norm:.12g}, expected 1")

    n_sites = cfg.size
    sites = [cfg.m] + list(cfg.sites)
    if cfg.state == "entangled":
        sites.append(cfg.partner)
        if cfg.partner < 2:
            raise ConfigError(f"r: value {cfg.partner} must be at least 2")
    if cfg.random_sites is not None:
        lo, hi = cfg.random_sites
        if lo > hi:
            raise ConfigError(f"sites: empty random range {lo}..{hi}")
        sites += [lo, hi]
    if cfg.axis == "m":
        sites += [int(cfg.grid[0]), int(cfg.grid[-1])]
    for s in sites:
        if s < 1 or (n_sites is not None and s > n_sites):
            raise ConfigError(f"site {s} outside 1..{'inf' if n_sites is None else n_sites}")

    if cfg.curves:
        return cfg
    if cfg.scenario == "harper-reverse":
        if cfg.axis is not None:
            raise ConfigError("harper-reverse sweeps commensurate times; give --t-max instead of a grid")
        if cfg.t_max is None:
            raise ConfigError("harper-reverse needs --t-max")
        return cfg
    if cfg.axis is None:
        raise ConfigError("no sweep axis: give exactly one of --t0/--t/--n/--m/--kicks as start:stop:step")
    if not cfg.grid:
        raise ConfigError("the sweep grid is empty")
    if any(b <= a for a, b in zip(cfg.grid, cfg.grid[1:])):
        raise ConfigError("the sweep grid must be strictly increasing")
    if cfg.axis in INTEGER_AXES and any(v != int(v) for v in cfg.grid):
        raise ConfigError(f"{cfg.axis}: grid values must be integers")
    if cfg.axis in ("t0", "t") and cfg.grid[0] < 0:
        raise ConfigError(f"{cfg.axis}: grid values must be non-negative")
    if cfg.axis in INTEGER_AXES and cfg.grid[0] < (1 if cfg.axis in ("n", "m") else 0):
        raise ConfigError(f"{cfg.axis}: grid starts below its minimum")
    return cfg


# -- presets -----------------------------------------------------------------

def _curves(*items: tuple[str, dict[str, Any]]):
    return tuple((label, tuple(sorted(over.items()))) for label, over in items)


def _kick_grid(tau: float, t_end: float) -> tuple[float, ...]:
    return tuple(float(k) for k in range(int(round(t_end / tau)) + 1))


_ENTANGLED = {"state": "entangled", "partner": 5}


def _preset_table() -> dict[str, dict[str, Any]]:
    t0_single = parse_grid("0:20:0.05")
    fig3_taus, fig4_taus = (0.1, 0.3, 0.8), (0.1, 0.3, 0.8, 0.9)
    return {
        # projective sz / sx measurement, both initial states
        "fig1a": dict(scenario="echo-single", size=1000, axis="t0", grid=t0_single, m=1,
                      curves=_curves(*[(f"{ch},{st}", dict(channel=ch, **(_ENTANGLED if st == "entangled" else {})))
                                       for ch in ("project-z", "project-x")
                                       for st in STATES])),
        # sz string on sites 1, 2, 3 kept to 2, 3 and 4 Green functions
        "fig1b": dict(scenario="echo-multi", quantity="amplitude", size=1000, sites=(1, 2, 3),
                      axis="t0", grid=parse_grid("0:10:0.05"),
                      curves=_curves(*[(f"order={k}", dict(order=k)) for k in (2, 3, 4)])),
        # repeated sz measurements on random sites 1..9, quadratic truncation
        "fig1c": dict(scenario="echo-multi", channel="project-z", size=1000, random_sites=(1, 9),
                      seed=0, order=2, axis="n", grid=parse_grid("1:10:1"),
                      curves=_curves(*[(f"t0={s:g}", dict(spacing=s)) for s in (0.1, 0.5, 1.0, 5.0)])),
        "fig1d": dict(scenario="echo-coherent", size=1000, axis="t0", grid=parse_grid("0:50:0.05"),
                      m=1, channel="coherent",
                      curves=_curves(("unentangled", {}), ("entangled", dict(_ENTANGLED)))),
        "fig2": dict(scenario="harper-green", size=200, axis="kicks", grid=parse_grid("0:100:1"),
                     curves=_curves(*[(f"tau={tau:g},g={g:g}", dict(tau=tau, g=g))
                                      for tau in (0.1, 0.9) for g in (0.1, 1.0, 5.0)])),
        "fig3": dict(scenario="harper-echo", size=1000, axis="kicks",
                     curves=_curves(*[(f"tau={tau:g},g={g:g}", dict(tau=tau, g=g, grid=_kick_grid(tau, 100.0)))
                                      for g in (0.1, 1.0) for tau in fig3_taus])),
        # sz tends to 1 at late t0, sx to 1/2
        "fig4": dict(scenario="harper-echo-qdp", size=1000, g=1.0, m=1, axis="kicks",
                     curves=_curves(*[(f"{ch},tau={tau:g}", dict(channel=ch, tau=tau, grid=_kick_grid(tau, 50.0)))
                                      for ch in ("project-z", "project-x") for tau in fig4_taus])),
        "fig5": dict(scenario="harper-reverse", size=1000, g=1.0, t_max=100.0,
                     curves=_curves(*[(f"tau1={a:g},tau2={b:g}", dict(tau=a, tau2=b))
                                      for a, b in ((0.1, 0.2), (0.3, 0.4), (0.8, 0.9), (0.1, 0.4), (0.1, 0.9))])),
    }


PRESET_NAMES = ("fig1a", "fig1b", "fig1c", "fig1d", "fig2", "fig3", "fig4", "fig5")


def preset(name: str) -> RunConfig:
    """Named figure configuration; unstated parameters keep the defaults (eta = 1, Delta = 1).

    ``fig4`` pairs the sz measurement with the unit large-t0 limit and sx with
    1/2. The figure caption names sz for both curves; the two limits only
    make sense with one curve per basis.
    """
    table = _preset_table()
    if name not in table:
        raise ConfigError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
    return validate(RunConfig(preset=name, **table[name]))


# -- command line --------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="magnon-echo", description="Loschmidt echo sweeps for magnon spin chains.",
                argument_default=argparse.SUPPRESS, allow_abbrev=False)
    p.add_argument("--config", help="INI file with key = value lines under [run]")
    p.add_argument("--preset", help=f"one of {', '.join(PRESET_NAMES)}")
    p.add_argument("--scenario", help=", ".join(SCENARIOS))
    p.add_argument("--N", help="ring size or 'inf'")
    p.add_argument("--anisotropy", "--Delta", dest="anisotropy")
    p.add_argument("--gap", help="magnon gap (default 2*Delta)")
    for name in ("g", "tau", "tau2", "eta", "p", "spacing", "seed", "order"):
        p.add_argument(f"--{name}")
    p.add_argument("--state", help="unentangled or entangled")
    for name in _COMPLEX:
        p.add_argument(f"--{name}", dest=name)
    p.add_argument("--beta2", help="real amplitudes with |beta|^2 = beta2")
    p.add_argument("--r", help="partner site of the entangled state")
    p.add_argument("--channel", help=", ".join(CHANNELS))
    p.add_argument("--sites", help="comma list or random:LO:HI")
    p.add_argument("--quantity", help="echo or amplitude (echo-multi)")
    p.add_argument("--averaged", action="store_const", const="true")
    p.add_argument("--model", help="xxz or harper (oracle)")
    p.add_argument("--t-max", dest="t-max")
    for name in SWEEP_KEYS:
        p.add_argument(f"--{name}", help="value or start:stop:step")
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    return p


def _read_file(path: str) -> list[tuple[str, str]]:
    parser = configparser.ConfigParser(comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
                                       interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"config file {path}: {exc}") from None
    pairs = []
    for section in parser.sections():
        if section != "run":
            raise ConfigError(f"config file {path}: unknown section [{section}]")
        pairs.extend(parser.items(section))
    return pairs


def parse_config(argv: Sequence[str] | None = None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    config_path = ns.pop("config", None)
    flag_pairs = list(ns.items())

    base: dict[str, Any] = {}
    name = ns.get("preset")
    if config_path is not None:
        file_pairs = _read_file(config_path)
        name = dict((_canonical(k), v) for k, v in file_pairs).get("preset", name)
        name = ns.get("preset", name)
    else:
        file_pairs = []
    if name is not None:
        base = {f.name: getattr(preset(name), f.name) for f in dataclasses.fields(RunConfig)}

    explicit: dict[str, Any] = {}
    for source in (file_pairs, flag_pairs):
        layer: dict[str, Any] = {}
        for key, text in source:
            _apply(layer, key, str(text))
        grids = layer.pop("_grids", [])
        if len(grids) > 1:
            raise ConfigError(f"more than one sweep axis: {', '.join(grids)}")
        if grids:
            explicit.pop("axis", None)
            explicit.pop("grid", None)
        explicit.update(layer)

    values = {**base, **explicit}
    if "scenario" not in values:
        raise ConfigError("missing --scenario (or --preset)")
    if values.get("curves"):
        # user-set keys win over the preset's per-curve overrides
        values["curves"] = tuple((label, tuple((k, v) for k, v in over if k not in explicit))
                                 for label, over in values["curves"])
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    cfg = validate(cfg)
    for _, curve in cfg.expand():
        validate(curve)
    return cfg
