"""Scenario configuration: schema, YAML I/O, the CIGRE benchmark and synthetic loads.

A config file is YAML with the top-level blocks ``feeder``, ``schedule``,
``substation``, ``design``, ``sim`` and ``loads``; see ``docs/config.md``.
Only ``feeder`` and ``schedule`` are required. Unknown keys are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .design import DesignResult, WindowSchedule, design_all_windows
from .errors import ConfigParseError, ConfigValidationError
from .feeder import FeederParams, SubstationProfile
from .simulation import LoadProfiles, Scenario

__all__ = [
    "ScenarioConfig",
    "LoadGenSpec",
    "load_config",
    "parse_config",
    "dump_config",
    "builtin_cigre",
    "generate_loads",
    "build_scenario",
]

# European LV benchmark, residential feeder (customers R11, R15, R16, R17, R18)
CIGRE_R = [0.00343, 0.00172, 0.00343, 0.00515, 0.00172]
CIGRE_X = [0.04711, 0.02356, 0.04711, 0.07067, 0.02356]
CIGRE_R_PRIME = [0.00147, 0.00662, 0.00147, 0.00147, 0.00147]
CIGRE_X_PRIME = [0.02157, 0.09707, 0.02157, 0.02157, 0.02157]
CIGRE_S_BAR = [4200.0, 6500.0, 4700.0, 5300.0, 3600.0]
CIGRE_T = [0.0, 100.0, 200.0, 300.0]
CIGRE_DELTA_RHO = [460.0, 1300.0, 750.0]
CIGRE_DELTA_C = [360.0, 1200.0, 960.0]
DEFAULT_SEED = 2020


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FeederBlock(_Block):
    v_bar: float = Field(230.0, gt=0)
    R: list[float]
    X: list[float]
    R_prime: list[float]
    X_prime: list[float]
    s_bar: list[float]
    tau: Union[float, list[float]] = 100.0

    @model_validator(mode="after")
    def _check(self):
        n = len(self.R)
        if n < 1:
            raise ValueError("feeder needs at least one customer")
        for name in ("X", "R_prime", "X_prime", "s_bar"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries, R has {n}")
        for name in ("R", "X", "R_prime", "X_prime"):
            if any(v < 0 for v in getattr(self, name)):
                raise ValueError(f"impedances must be >= 0 ({name})")
        if any(v <= 0 for v in self.s_bar):
            raise ValueError("s_bar entries must be > 0")
        taus = self.tau if isinstance(self.tau, list) else [self.tau]
        if isinstance(self.tau, list) and len(taus) != n:
            raise ValueError(f"tau has {len(taus)} entries, R has {n}")
        if any(v <= 0 for v in taus):
            raise ValueError("tau must be > 0")
        return self


class ScheduleBlock(_Block):
    t: list[float]
    delta_c: list[float]
    delta_rho: list[float]

    @model_validator(mode="after")
    def _check(self):
        WindowSchedule(self.t, self.delta_c, self.delta_rho)
        return self


class SubstationBlock(_Block):
    offset: Optional[float] = Field(None, gt=0)
    amplitude: float = 0.0
    omega: float = 1.0


class DesignBlock(_Block):
    delta: Optional[float] = Field(None, ge=0)
    delta_fraction: Optional[float] = Field(None, ge=0, lt=1)
    safety: float = Field(1.0, gt=0, le=1)
    mode: Literal["adaptive", "non-adaptive"] = "adaptive"
    index_range: Literal["interior", "all"] = "interior"

    @model_validator(mode="after")
    def _check(self):
        if self.delta is not None and self.delta_fraction is not None:
            raise ValueError("give either delta or delta_fraction, not both")
        return self


class SimBlock(_Block):
    h: float = Field(0.01, gt=0)
    horizon: Optional[float] = Field(None, gt=0)
    seed: int = DEFAULT_SEED


class GeneratorBlock(_Block):
    dwell: float = Field(10.0, gt=0)
    fraction: float = Field(1.0, ge=0, le=1)


class InlineLoads(_Block):
    times: list[float]
    q_c: list[list[float]]
    rho_c: list[list[float]]
    rho_g: list[list[float]]


class LoadsBlock(_Block):
    generator: Optional[GeneratorBlock] = None
    inline: Optional[InlineLoads] = None

    @model_validator(mode="after")
    def _check(self):
        if self.generator is None and self.inline is None:
            self.generator = GeneratorBlock()
        if self.generator is not None and self.inline is not None:
            raise ValueError("give either loads.generator or loads.inline, not both")
        return self


class ScenarioConfig(_Block):
    feeder: FeederBlock
    schedule: ScheduleBlock
    substation: SubstationBlock = Field(default_factory=SubstationBlock)
    design: DesignBlock = Field(default_factory=DesignBlock)
    sim: SimBlock = Field(default_factory=SimBlock)
    loads: LoadsBlock = Field(default_factory=LoadsBlock)

    @model_validator(mode="after")
    def _defaults(self):
        if self.substation.offset is None:
            self.substation.offset = self.feeder.v_bar
        if self.design.delta is None and self.design.delta_fraction is None:
            self.design.delta_fraction = 0.1
        if self.substation.offset - abs(self.substation.amplitude) <= 0:
            raise ValueError("substation voltage must stay positive")
        n = len(self.feeder.R)
        if self.loads.inline is not None:
            for name in ("q_c", "rho_c", "rho_g"):
                rows = getattr(self.loads.inline, name)
                if len(rows) != len(self.loads.inline.times) or any(len(r) != n for r in rows):
                    raise ValueError(f"loads.inline.{name} must be one row of {n} values per time")
        return self

    # conversions to domain objects

    def feeder_params(self) -> FeederParams:
        f = self.feeder
        return FeederParams(f.R, f.X, f.R_prime, f.X_prime, f.s_bar, f.v_bar)

    def window_schedule(self) -> WindowSchedule:
        s = self.schedule
        return WindowSchedule(s.t, s.delta_c, s.delta_rho)

    def substation_profile(self) -> SubstationProfile:
        s = self.substation
        return SubstationProfile(s.offset, s.amplitude, s.omega)

    def delta_volts(self) -> float:
        if self.design.delta is not None:
            return self.design.delta
        return self.design.delta_fraction * self.feeder.v_bar

    def tau_array(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.feeder.tau, dtype=float), (len(self.feeder.R),)).copy()


def _validation_message(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "; ".join(parts)


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        raise ConfigParseError(f"{source}:{where}: {getattr(exc, 'problem', exc)}") from exc
    if not isinstance(raw, dict):
        raise ConfigParseError(f"{source}: top level must be a mapping of blocks")
    try:
        return ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigValidationError(f"{source}: {_validation_message(exc)}") from exc


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    return parse_config(path.read_text(), source=str(path))


def dump_config(config: ScenarioConfig) -> str:
    data = config.model_dump(exclude_none=True)
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None)


def builtin_cigre() -> ScenarioConfig:
    """Five-customer residential feeder with the three-window load schedule."""
    return ScenarioConfig.model_validate(
        {
            "feeder": {
                "v_bar": 230.0,
                "R": CIGRE_R,
                "X": CIGRE_X,
                "R_prime": CIGRE_R_PRIME,
                "X_prime": CIGRE_X_PRIME,
                "s_bar": CIGRE_S_BAR,
                "tau": 100.0,
            },
            "schedule": {"t": CIGRE_T, "delta_c": CIGRE_DELTA_C, "delta_rho": CIGRE_DELTA_RHO},
            "substation": {"offset": 230.0, "amplitude": 5.0, "omega": 1.0},
            "design": {"delta_fraction": 0.1},
            "sim": {"h": 0.01, "seed": DEFAULT_SEED},
            "loads": {"generator": {"dwell": 10.0, "fraction": 1.0}},
        }
    )


@dataclass(frozen=True)
class LoadGenSpec:
    seed: int = DEFAULT_SEED
    dwell: float = 10.0
    fraction: float = 1.0

    def __post_init__(self):
        if not self.dwell > 0:
            raise ValueError("dwell must be > 0")
        if not 0 <= self.fraction <= 1:
            raise ValueError("fraction must lie in [0, 1]")


def generate_loads(config: ScenarioConfig, gen: LoadGenSpec) -> LoadProfiles:
    """Seeded piecewise-constant loads that respect every window's bounds.

    Pieces never straddle an update instant. Per piece and customer:
    ``q_c ~ U(-1, 1) * f * delta_c``, ``rho_c ~ U(0, 1) * f * delta_rho`` and
    the desired generation ``rho_g = rho_c + u`` with ``u ~ U(-1, 1) * f * delta_rho``
    clipped so that ``rho_g >= 0``.
    """
    if gen.dwell < config.sim.h:
        raise ValueError("dwell must be at least one step")
    sched = config.window_schedule()
    n = len(config.feeder.R)
    rng = np.random.default_rng(gen.seed)
    times, qc, rc, rg = [], [], [], []
    for k in range(sched.n_windows):
        t0, t1 = sched.t[k], sched.t[k + 1]
        starts = t0 + gen.dwell * np.arange(int(np.ceil((t1 - t0) / gen.dwell - 1e-9)))
        for s in starts:
            q = rng.uniform(-1.0, 1.0, n) * gen.fraction * sched.delta_c[k]
            r = rng.uniform(0.0, 1.0, n) * gen.fraction * sched.delta_rho[k]
            u = rng.uniform(-1.0, 1.0, n) * gen.fraction * sched.delta_rho[k]
            times.append(s)
            qc.append(q)
            rc.append(r)
            rg.append(r + np.maximum(u, -r))
    return LoadProfiles(np.array(times), np.array(qc), np.array(rc), np.array(rg))


def build_scenario(
    config: ScenarioConfig,
    *,
    non_adaptive: Optional[bool] = None,
    seed: Optional[int] = None,
    h: Optional[float] = None,
    safety: Optional[float] = None,
    strict: bool = True,
) -> tuple[Scenario, DesignResult]:
    """Design the droop specs and assemble a runnable scenario.

    Loads always follow the configured schedule, so adaptive and non-adaptive
    runs with the same seed see identical loads. Keyword overrides take
    precedence over the config.
    """
    seed = config.sim.seed if seed is None else seed
    h = config.sim.h if h is None else h
    safety = config.design.safety if safety is None else safety
    if non_adaptive is None:
        non_adaptive = config.design.mode == "non-adaptive"

    feeder = config.feeder_params()
    schedule = config.window_schedule()
    design_schedule = schedule.non_adaptive() if non_adaptive else schedule
    substation = config.substation_profile()
    tau = config.tau_array()
    result = design_all_windows(
        feeder,
        design_schedule,
        config.delta_volts(),
        substation,
        tau,
        safety=safety,
        index_range=config.design.index_range,
        strict=strict,
    )
    if config.loads.inline is not None:
        il = config.loads.inline
        loads = LoadProfiles(il.times, il.q_c, il.rho_c, il.rho_g)
    else:
        g = config.loads.generator
        loads = generate_loads(config, LoadGenSpec(seed=seed, dwell=g.dwell, fraction=g.fraction))
    scenario = Scenario(
        feeder=feeder,
        schedule=design_schedule,
        specs=result.specs,
        loads=loads,
        substation=substation,
        tau=tau,
        h=h,
        horizon=config.sim.horizon,
        seed=seed,
    )
    return scenario, result
