"""JSON run configuration.

One file describes a scenario (grid, patterns, spikes, noise) and the knobs
of every solver. All sections are optional except where a command needs
them. Example::

    {
      "preset": "figure1",
      "alpha": 0.05,
      "solver": {"fp_tol": 1e-8},
      "certify": {"gap_tol": 1e-3}
    }

Unknown keys are rejected; every error names the offending field and, when
it can be found, the line it sits on.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

from .baselines import FwConfig
from .errors import ConfigError
from .measures import SparseMeasure
from .operators import Grid
from .patterns import pattern_from_spec
from .prox_solver import SolverConfig
from .synthesis import NoiseSpec, ScenarioSpec, figure1

__all__ = ["FistaConfig", "CertifyConfig", "RunConfig", "parse_config", "load_config"]

_TOP_KEYS = {"preset", "grid", "patterns", "spikes", "noise", "alpha", "solver", "fw",
             "grid_fista", "certify"}
_PRESETS = {"figure1": figure1}


@dataclass(frozen=True)
class FistaConfig:
    iters: int = 50000
    tol: float = 1e-10
    restart: bool = True


@dataclass(frozen=True)
class CertifyConfig:
    gap_tol: float = 1e-3            # relative to 1 + |primal|
    witness_rel_alpha: float = 1e-2


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioSpec | None
    alpha: float | None
    solver: dict = field(default_factory=dict)     # raw overrides, validated in solver_config
    fw: FwConfig = field(default_factory=FwConfig)
    fista: FistaConfig = field(default_factory=FistaConfig)
    certify: CertifyConfig = field(default_factory=CertifyConfig)
    raw: dict = field(default_factory=dict)

    @property
    def n(self) -> int | None:
        return None if self.scenario is None else len(self.scenario.patterns)

    def require_scenario(self) -> ScenarioSpec:
        if self.scenario is None:
            raise ConfigError("grid/patterns: the config must describe a scenario (or a preset)")
        return self.scenario

    def require_alpha(self) -> float:
        if self.alpha is None:
            raise ConfigError("alpha: required for this command")
        return self.alpha

    def solver_config(self) -> SolverConfig:
        cfg = _build(SolverConfig, {"alpha": self.require_alpha(), **self.solver}, "solver")
        n = len(self.require_scenario().patterns)
        if cfg.step is not None and cfg.step > 1.0 / n * (1 + 1e-12):
            raise ConfigError(f"solver.step: {cfg.step} exceeds the descent bound 1/n = {1.0 / n}")
        return cfg


class _Ctx:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def line_of(self, key: str) -> int | None:
        m = re.search(r'"%s"\s*:' % re.escape(key), self.text)
        return None if m is None else self.text.count("\n", 0, m.start()) + 1

    def error(self, path: str, msg: str) -> ConfigError:
        key = path.split(".")[-1].split("[")[0]
        line = self.line_of(key)
        where = f"{self.source}:{line}: " if line else f"{self.source}: "
        return ConfigError(f"{where}{path}: {msg}")


def _number(ctx, path, value, *, positive=False, integer=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ctx.error(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ctx.error(path, "must be finite")
    if integer and int(value) != value:
        raise ctx.error(path, f"expected an integer, got {value!r}")
    if positive and not value > 0:
        raise ctx.error(path, f"must be positive, got {value!r}")
    return int(value) if integer else float(value)


def _section(ctx, raw, name, cls, extra=()):
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ctx.error(name, "expected an object")
    allowed = {f.name for f in fields(cls)} - set(extra)
    for k in sec:
        if k not in allowed:
            raise ctx.error(f"{name}.{k}", f"unknown field; expected one of {sorted(allowed)}")
    return dict(sec)


def _build(cls, kwargs, name):
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{name}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _grid(ctx, raw):
    g = raw["grid"]
    if not isinstance(g, dict):
        raise ctx.error("grid", "expected an object")
    for k in g:
        if k not in ("start", "stop", "step", "count"):
            raise ctx.error(f"grid.{k}", "unknown field; expected start, step and stop or count")
    if "start" not in g or "step" not in g or ("stop" in g) == ("count" in g):
        raise ctx.error("grid", "needs start, step and exactly one of stop/count")
    start = _number(ctx, "grid.start", g["start"])
    step = _number(ctx, "grid.step", g["step"], positive=True)
    try:
        if "stop" in g:
            return Grid.from_interval(start, _number(ctx, "grid.stop", g["stop"]), step)
        return Grid(start, step, _number(ctx, "grid.count", g["count"], integer=True))
    except ValueError as exc:
        raise ctx.error("grid", str(exc)) from None


def _scenario(ctx, raw):
    preset = raw.get("preset")
    noise_raw = raw.get("noise", {})
    if not isinstance(noise_raw, dict):
        raise ctx.error("noise", "expected an object")
    for k in noise_raw:
        if k not in ("kind", "sigma", "seed"):
            raise ctx.error(f"noise.{k}", "unknown field; expected kind, sigma, seed")
    if "sigma" in noise_raw:
        if _number(ctx, "noise.sigma", noise_raw["sigma"]) < 0:
            raise ctx.error("noise.sigma", "must be >= 0")
    if "seed" in noise_raw:
        seed = _number(ctx, "noise.seed", noise_raw["seed"], integer=True)
        if seed < 0:
            raise ctx.error("noise.seed", "must be a non-negative integer")
    if noise_raw.get("kind", "gaussian") != "gaussian":
        raise ctx.error("noise.kind", f"only 'gaussian' is supported, got {noise_raw['kind']!r}")
    noise = NoiseSpec(float(noise_raw.get("sigma", 0.0)), int(noise_raw.get("seed", 0)))

    if preset is not None:
        if preset not in _PRESETS:
            raise ctx.error("preset", f"unknown preset {preset!r}; expected one of {sorted(_PRESETS)}")
        for k in ("grid", "patterns", "spikes"):
            if k in raw:
                raise ctx.error(k, "cannot be combined with a preset")
        base = _PRESETS[preset]()
        return ScenarioSpec(base.grid, base.patterns, base.spikes, noise)

    if "grid" not in raw and "patterns" not in raw:
        if "spikes" in raw:
            raise ctx.error("spikes", "given without grid and patterns")
        return None
    if "grid" not in raw:
        raise ctx.error("grid", "missing")
    if "patterns" not in raw:
        raise ctx.error("patterns", "missing")
    grid = _grid(ctx, raw)
    pats_raw = raw["patterns"]
    if not isinstance(pats_raw, list) or not pats_raw:
        raise ctx.error("patterns", "expected a non-empty list")
    patterns = []
    for i, p in enumerate(pats_raw):
        try:
            patterns.append(pattern_from_spec(p))
        except ConfigError as exc:
            raise ctx.error(f"patterns[{i}]", str(exc)) from None
    spikes_raw = raw.get("spikes", [[] for _ in patterns])
    if not isinstance(spikes_raw, list) or len(spikes_raw) != len(patterns):
        raise ctx.error("spikes", f"expected a list of {len(patterns)} spike lists (one per pattern)")
    spikes = []
    for i, lst in enumerate(spikes_raw):
        if not isinstance(lst, list):
            raise ctx.error(f"spikes[{i}]", "expected a list of [position, amplitude] pairs")
        pairs = []
        for j, pair in enumerate(lst):
            if not (isinstance(pair, list) and len(pair) == 2):
                raise ctx.error(f"spikes[{i}][{j}]", f"expected [position, amplitude], got {pair!r}")
            pairs.append((_number(ctx, f"spikes[{i}][{j}]", pair[0]),
                          _number(ctx, f"spikes[{i}][{j}]", pair[1])))
        spikes.append(SparseMeasure.from_pairs(pairs))
    return ScenarioSpec(grid, tuple(patterns), tuple(spikes), noise)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    ctx = _Ctx(text, source)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be an object")
    for k in raw:
        if k not in _TOP_KEYS:
            raise ctx.error(k, f"unknown field; expected one of {sorted(_TOP_KEYS)}")

    scenario = _scenario(ctx, raw)
    alpha = None
    if "alpha" in raw:
        alpha = _number(ctx, "alpha", raw["alpha"], positive=True)

    solver = _section(ctx, raw, "solver", SolverConfig, extra=("alpha",))
    if alpha is not None:
        _build(SolverConfig, {"alpha": alpha, **solver}, "solver")
        if scenario is not None and solver.get("step") is not None:
            n = len(scenario.patterns)
            if _number(ctx, "solver.step", solver["step"], positive=True) > 1.0 / n * (1 + 1e-12):
                raise ctx.error("solver.step", f"{solver['step']} exceeds the descent bound 1/n = {1.0 / n}")
    fw = _build(FwConfig, _section(ctx, raw, "fw", FwConfig), "fw")
    fista = _build(FistaConfig, _section(ctx, raw, "grid_fista", FistaConfig), "grid_fista")
    cert = _build(CertifyConfig, _section(ctx, raw, "certify", CertifyConfig), "certify")
    if not cert.gap_tol > 0:
        raise ctx.error("certify.gap_tol", "must be positive")
    return RunConfig(scenario, alpha, solver, fw, fista, cert, raw)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path))
