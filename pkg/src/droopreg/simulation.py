"""Fixed-step RK4 simulation of the droop-controlled feeder.

The plant output is algebraic in the controller state, so the closed loop is
a plain ODE in ``q_g`` between window instants. At each ``t_k`` the states are
zeroed and the droop specs of window ``k`` are swapped in, before the first
step of that window. Loads are piecewise constant; every RK4 stage of a step
uses the load piece in force at the step midpoint, so a load change that falls
on the step grid is integrated exactly. The substation voltage is evaluated at
the true stage times.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .design import WindowSchedule
from .droop import ControllerBank
from .errors import InfeasibleScenario
from .feeder import (
    FeederParams,
    SubstationProfile,
    build_H,
    build_H_resistive,
    voltages_from_y,
)

__all__ = [
    "LoadProfiles",
    "Scenario",
    "SimTrace",
    "ClosedLoop",
    "curtail",
    "rk4_step",
    "run",
    "read_trace_csv",
]

INTEGRATOR = "rk4"


def curtail(rho_g_desired, q_g, s_bar):
    """Active power an inverter can still deliver next to ``q_g``."""
    headroom = np.sqrt(np.maximum(0.0, np.square(s_bar) - np.square(q_g)))
    out = np.minimum(rho_g_desired, headroom)
    return np.where(np.abs(q_g) >= s_bar, 0.0, out)


def rk4_step(f, t, x, h):
    """One classical Runge-Kutta step of ``x' = f(t, x)``."""
    if h == 0:
        return np.array(x, dtype=float, copy=True)
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class LoadProfiles:
    """Piecewise-constant per-customer loads.

    Row ``p`` of each array holds the values on ``[times[p], times[p+1])``; the
    last row extends to the end of the simulation.
    """

    times: np.ndarray
    q_c: np.ndarray
    rho_c: np.ndarray
    rho_g: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).reshape(-1)
        for name in ("q_c", "rho_c", "rho_g"):
            arr = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if arr.shape[0] != self.times.shape[0]:
                raise ValueError(f"{name} needs one row per piece")
            setattr(self, name, arr)
        if self.q_c.shape != self.rho_c.shape or self.q_c.shape != self.rho_g.shape:
            raise ValueError("load arrays must share a shape")
        if self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("piece start times must begin at 0 and increase strictly")

    @classmethod
    def constant(cls, n: int, q_c=0.0, rho_c=0.0, rho_g=0.0) -> "LoadProfiles":
        row = lambda v: np.broadcast_to(np.asarray(v, dtype=float), (n,)).reshape(1, n).copy()
        return cls(np.zeros(1), row(q_c), row(rho_c), row(rho_g))

    @property
    def N(self) -> int:
        return self.q_c.shape[1]

    def piece_at(self, t) -> np.ndarray:
        return np.searchsorted(self.times, t, side="right") - 1


@dataclass
class Scenario:
    feeder: FeederParams
    schedule: WindowSchedule
    specs: list
    loads: LoadProfiles
    substation: SubstationProfile = field(default_factory=SubstationProfile)
    tau: np.ndarray = 100.0
    h: float = 0.01
    horizon: float = None
    seed: int = None

    def __post_init__(self):
        n = self.feeder.N
        self.tau = np.broadcast_to(np.asarray(self.tau, dtype=float), (n,)).copy()
        if self.horizon is None:
            self.horizon = self.schedule.horizon
        if not self.h > 0:
            raise ValueError("step h must be > 0")
        if self.horizon > self.schedule.horizon:
            raise ValueError("horizon runs past the last update instant")
        for t in (self.horizon,) + self.schedule.t:
            if t <= self.horizon and abs(t / self.h - round(t / self.h)) > 1e-9:
                raise ValueError(f"instant {t} does not lie on the step grid h = {self.h}")
        if len(self.specs) != self.schedule.n_windows or any(len(s) != n for s in self.specs):
            raise ValueError("need one droop spec per customer per window")
        if self.loads.N != n:
            raise ValueError("load profiles and feeder sizes differ")
        self.validate_loads()

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.h))

    def validate_loads(self) -> None:
        """Raise :class:`InfeasibleScenario` if any load piece breaks its windows' bounds."""
        sched, L = self.schedule, self.loads
        ends = np.append(L.times[1:], max(self.horizon, L.times[-1] + self.h))
        for p, (start, end) in enumerate(zip(L.times, ends)):
            if start >= self.horizon and p > 0:
                break
            for k in range(sched.n_windows):
                active = sched.t[k] < end and sched.t[k + 1] > start
                if not active or (sched.t[k] >= self.horizon and k > 0):
                    continue
                dc, dr = sched.delta_c[k], sched.delta_rho[k]
                checks = {
                    "|q_c| <= delta_c": np.abs(L.q_c[p]) <= dc,
                    "0 <= rho_c <= delta_rho": (L.rho_c[p] >= 0) & (L.rho_c[p] <= dr),
                    "rho_g >= 0": L.rho_g[p] >= 0,
                    "|rho_g - rho_c| <= delta_rho": np.abs(L.rho_g[p] - L.rho_c[p]) <= dr,
                }
                for what, ok in checks.items():
                    if not np.all(ok):
                        i = int(np.flatnonzero(~ok)[0])
                        raise InfeasibleScenario(
                            f"load piece starting at t = {start:g} s violates {what} "
                            f"for customer {i + 1} in window {k}"
                        )


@dataclass
class SimTrace:
    times: np.ndarray
    q_g: np.ndarray
    rho_g: np.ndarray
    v_cust: np.ndarray
    y: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    rho: np.ndarray
    q_c: np.ndarray
    v0: np.ndarray
    window: np.ndarray
    events: list
    metadata: dict

    @property
    def N(self) -> int:
        return self.q_g.shape[1]

    def columns(self) -> tuple[list[str], np.ndarray]:
        n = self.N
        names = ["t"] + [f"{p}_{i}" for p in ("qg", "rhog", "v", "y") for i in range(1, n + 1)]
        data = np.column_stack([self.times, self.q_g, self.rho_g, self.v_cust, self.y])
        return names, data

    def to_csv(self, path, write_metadata: bool = True) -> None:
        """Write the trace at full double precision; metadata goes to ``<path>.meta.json``."""
        names, data = self.columns()
        path = Path(path)
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(names) + "\n")
            np.savetxt(fh, data, fmt="%.17g", delimiter=",")
        if write_metadata:
            meta = Path(str(path) + ".meta.json")
            meta.write_text(json.dumps(self.metadata, indent=2, sort_keys=True) + "\n")


def read_trace_csv(path) -> dict:
    """Load a trace CSV into ``{"t": ..., "qg": (n, N), "rhog": ..., "v": ..., "y": ...}``."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    out = {"t": data[:, header.index("t")]}
    for prefix in ("qg", "rhog", "v", "y"):
        cols = [j for j, name in enumerate(header) if name.startswith(prefix + "_")]
        out[prefix] = data[:, cols]
    return out


class ClosedLoop:
    """Vector field and stepping for one scenario."""

    def __init__(self, scenario: Scenario):
        self.scenario = sc = scenario
        f = sc.feeder
        self.H = build_H(f)
        self.H_R = build_H_resistive(f)
        self.s_bar = np.asarray(f.s_bar)
        self.v_bar2 = f.v_bar**2
        L = sc.loads
        # load-only part of y, per piece: -H q_c - H_R rho_c
        self._y_load = -(L.q_c @ self.H.T) - (L.rho_c @ self.H_R.T)
        self.bank = ControllerBank(sc.tau, sc.specs[0])
        self.window = 0

    def enter_window(self, k: int) -> np.ndarray:
        """Swap in window ``k`` specs and return the pre-reset state."""
        before = self.bank.q_g.copy()
        self.window = k
        self.bank.set_specs(self.scenario.specs[k])
        self.bank.q_g = np.zeros(self.bank.N)
        return before

    def output(self, q_g, t, piece):
        """(y, curtailed rho_g) at state ``q_g``, time ``t`` and load piece ``piece``."""
        sub = self.scenario.substation
        v0 = sub.offset + sub.amplitude * math.sin(sub.omega * t)
        rho_g = curtail(self.scenario.loads.rho_g[piece], q_g, self.s_bar)
        y = self.H @ q_g + self.H_R @ rho_g + self._y_load[piece] + (self.v_bar2 - v0 * v0)
        return y, rho_g

    def vector_field(self, piece):
        def f(t, q_g):
            y, _ = self.output(q_g, t, piece)
            return self.bank.rhs(q_g, y)

        return f

    def step(self, q_g, t, h):
        piece = int(self.scenario.loads.piece_at(t + 0.5 * h))
        return rk4_step(self.vector_field(piece), t, q_g, h)


def run(scenario: Scenario) -> SimTrace:
    sc = scenario
    loop = ClosedLoop(sc)
    n, N, h = sc.n_steps, sc.feeder.N, sc.h
    reset_steps = {int(round(t / h)): k for k, t in enumerate(sc.schedule.t[:-1]) if t <= sc.horizon}

    q_hist = np.empty((n + 1, N))
    window = np.empty(n + 1, dtype=int)
    events = []
    q = np.zeros(N)
    for m in range(n + 1):
        if m in reset_steps:
            k = reset_steps[m]
            before = loop.enter_window(k)
            events.append({"t": m * h, "window": k, "q_g_before": before.tolist()})
            q = loop.bank.q_g
        q_hist[m] = q
        window[m] = loop.window
        if m < n:
            q = loop.step(q, m * h, h)
            loop.bank.q_g = q

    return _assemble(sc, q_hist, window, events)


def _assemble(sc: Scenario, q_hist, window, events) -> SimTrace:
    f = sc.feeder
    n = q_hist.shape[0] - 1
    times = np.arange(n + 1) * sc.h
    L = sc.loads
    pieces = L.piece_at(times)
    last = np.array(
        [int(L.piece_at(t - 1e-9 * sc.h)) for t in sc.schedule.t[1:]]
    )
    pieces = np.minimum(pieces, last[window])

    rho_g = curtail(L.rho_g[pieces], q_hist, f.s_bar)
    rho = rho_g - L.rho_c[pieces]
    q_c = L.q_c[pieces]
    v0 = sc.substation(times)
    H = build_H(f)
    phi = rho @ build_H_resistive(f).T - q_c @ H.T
    y = q_hist @ H.T + phi + (f.v_bar**2 - v0**2)[:, None]
    v_cust = voltages_from_y(y, f.v_bar)

    net_q = q_hist - q_c
    P = np.zeros((n + 1, f.N + 1))
    Q = np.zeros((n + 1, f.N + 1))
    P[:, :-1] = -np.cumsum(rho[:, ::-1], axis=1)[:, ::-1]
    Q[:, :-1] = -np.cumsum(net_q[:, ::-1], axis=1)[:, ::-1]

    metadata = {
        "integrator": INTEGRATOR,
        "h": sc.h,
        "horizon": sc.horizon,
        "seed": sc.seed,
        "N": f.N,
        "update_instants": list(sc.schedule.t),
        "specs": [[s.to_dict() for s in w] for w in sc.specs],
    }
    return SimTrace(
        times=times,
        q_g=q_hist,
        rho_g=rho_g,
        v_cust=v_cust,
        y=y,
        P=P,
        Q=Q,
        rho=rho,
        q_c=q_c,
        v0=v0,
        window=window,
        events=events,
        metadata=metadata,
    )
