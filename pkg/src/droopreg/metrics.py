"""Trace post-processing: effort metrics, band check, adaptive-vs-baseline comparison."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MismatchedScenario
from .simulation import SimTrace

__all__ = [
    "MetricsReport",
    "Comparison",
    "metric_q",
    "metric_rho",
    "check_regulation",
    "report",
    "compare",
]


def _inf_norm_integral(times, values) -> float:
    # sup-norm across customers, not a sum: a sum would inflate values ~N-fold
    norm = np.max(np.abs(np.asarray(values, dtype=float)), axis=1)
    return float(np.trapezoid(norm, np.asarray(times, dtype=float)))


def metric_q(trace: SimTrace) -> float:
    """Time integral of ``max_i |q_g,i|`` (var*s)."""
    return _inf_norm_integral(trace.times, trace.q_g)


def metric_rho(trace: SimTrace) -> float:
    """Time integral of ``max_i |rho_g,i|`` of the curtailed generation (W*s)."""
    return _inf_norm_integral(trace.times, trace.rho_g)


def check_regulation(v, v_bar: float, delta: float) -> tuple[bool, float]:
    """Whether every voltage sample lies in ``[v_bar - delta, v_bar + delta]``.

    ``v`` is a trace or an array of voltages. The margin is the smallest
    distance to a band edge, negative when the band is left.
    """
    v = np.asarray(v.v_cust if isinstance(v, SimTrace) else v, dtype=float)
    margin = float(np.min(np.minimum(v - (v_bar - delta), (v_bar + delta) - v)))
    return margin >= 0, margin


@dataclass
class MetricsReport:
    P_q: float
    P_rho: float
    regulation_ok: bool
    worst_margin: float
    max_abs_y: float
    seed: object = None
    horizon: float = None


def report(trace: SimTrace, v_bar: float, delta: float) -> MetricsReport:
    ok, margin = check_regulation(trace, v_bar, delta)
    return MetricsReport(
        P_q=metric_q(trace),
        P_rho=metric_rho(trace),
        regulation_ok=ok,
        worst_margin=margin,
        max_abs_y=float(np.max(np.abs(trace.y))),
        seed=trace.metadata.get("seed"),
        horizon=float(trace.times[-1]),
    )


@dataclass
class Comparison:
    adaptive: MetricsReport
    baseline: MetricsReport
    less_reactive: bool
    more_active: bool

    def to_text(self) -> str:
        a, b = self.adaptive, self.baseline
        rows = [
            f"{'':<14}{'P_q [kJ]':>12}{'P_rho [MJ]':>12}{'in band':>9}{'margin [V]':>12}",
            f"{'adaptive':<14}{a.P_q / 1e3:>12.5g}{a.P_rho / 1e6:>12.5g}{str(a.regulation_ok):>9}{a.worst_margin:>12.4g}",
            f"{'non-adaptive':<14}{b.P_q / 1e3:>12.5g}{b.P_rho / 1e6:>12.5g}{str(b.regulation_ok):>9}{b.worst_margin:>12.4g}",
            f"adaptive uses less reactive power: {self.less_reactive}",
            f"adaptive injects at least as much active power: {self.more_active}",
        ]
        return "\n".join(rows)


def compare(adaptive: MetricsReport, baseline: MetricsReport) -> Comparison:
    if adaptive.seed != baseline.seed or adaptive.horizon != baseline.horizon:
        raise MismatchedScenario(
            f"reports differ in seed/horizon: ({adaptive.seed}, {adaptive.horizon}) vs "
            f"({baseline.seed}, {baseline.horizon})"
        )
    return Comparison(
        adaptive=adaptive,
        baseline=baseline,
        less_reactive=adaptive.P_q < baseline.P_q,
        more_active=adaptive.P_rho >= baseline.P_rho,
    )
