"""Per-window droop design from the sufficient regulation condition.

For every observation window ``[t_k, t_{k+1})`` the load bounds give a worst
case disturbance ``delta_phi``; if ``eps >= delta_phi + eps_y`` the common droop
slope may be as large as::

    (eps - delta_phi - eps_y) * exp(-t_k / tau_max)
    -------------------------------------------------------------------------
    r * |H| * (delta_phi + eps_y) + r**2 * |H|**2 * K_bar,   r = tau_max / tau_min

``t_k`` is absolute time, so later windows get exponentially smaller slopes.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .droop import DroopSpec
from .errors import IndexRangeUnavailable, Infeasible, ZeroDenominator
from .feeder import FeederParams, SubstationProfile, build_H, mat_inf_norm

__all__ = [
    "WindowSchedule",
    "DesignResult",
    "epsilon_from_delta",
    "epsilon_y_bound",
    "impedance_maxima",
    "delta_phi",
    "feasibility",
    "d_bound",
    "synthesize_specs",
    "design_all_windows",
]


@dataclass(frozen=True)
class WindowSchedule:
    """Update instants ``t[0..K]`` and per-window load bounds ``delta_*[0..K-1]``.

    ``t[-1]`` closes the last window. ``delta_c`` bounds ``|q_c,i|`` (var) and
    ``delta_rho`` bounds the net active injection ``|rho_i|`` (W).
    """

    t: tuple
    delta_c: tuple
    delta_rho: tuple

    def __post_init__(self):
        t = tuple(float(x) for x in self.t)
        dc = tuple(float(x) for x in self.delta_c)
        dr = tuple(float(x) for x in self.delta_rho)
        if len(t) < 2:
            raise ValueError("schedule needs at least one window (two instants)")
        if t[0] != 0.0:
            raise ValueError("first update instant must be 0")
        if len(dc) != len(t) - 1 or len(dr) != len(t) - 1:
            raise ValueError("need one delta_c and one delta_rho per window")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("update instants must be strictly increasing")
        if any(x < 0 for x in dc + dr):
            raise ValueError("load bounds must be >= 0")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "delta_c", dc)
        object.__setattr__(self, "delta_rho", dr)

    @property
    def n_windows(self) -> int:
        return len(self.delta_c)

    @property
    def min_dwell(self) -> float:
        return float(np.min(np.diff(self.t)))

    @property
    def horizon(self) -> float:
        return self.t[-1]

    def window_of(self, time: float) -> int:
        """Index k with ``t[k] <= time < t[k+1]``; the closing instant maps to the last window."""
        k = int(np.searchsorted(self.t, time, side="right")) - 1
        return min(max(k, 0), self.n_windows - 1)

    def non_adaptive(self) -> "WindowSchedule":
        """One window over the whole horizon with the largest bounds."""
        return WindowSchedule((0.0, self.t[-1]), (max(self.delta_c),), (max(self.delta_rho),))


@dataclass
class DesignResult:
    schedule: WindowSchedule
    epsilon: float
    epsilon_y: float
    H_norm: float
    d: list
    K_bar: list
    delta_phi: list
    feasible: list
    margin: list
    specs: list

    def report_rows(self) -> list[dict]:
        rows = []
        for k in range(self.schedule.n_windows):
            row = {
                "k": k,
                "t_k": self.schedule.t[k],
                "delta_c": self.schedule.delta_c[k],
                "delta_rho": self.schedule.delta_rho[k],
                "delta_phi": self.delta_phi[k],
                "margin": self.margin[k],
                "d": self.d[k],
                "feasible": self.feasible[k],
            }
            for i, spec in enumerate(self.specs[k] or []):
                row[f"w_max_{i + 1}"] = spec.w_max
            rows.append(row)
        return rows

    def to_csv(self) -> str:
        rows = self.report_rows()
        fields = list(rows[0].keys())
        for row in rows:
            fields += [f for f in row if f not in fields]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [
            f"eps = {self.epsilon:.6g} V^2, eps_y = {self.epsilon_y:.6g} V^2, |H| = {self.H_norm:.6g} ohm",
        ]
        for row in self.report_rows():
            status = "feasible" if row["feasible"] else "INFEASIBLE"
            lines.append(
                f"window {row['k']}: t_k = {row['t_k']:g} s, delta_c = {row['delta_c']:g} var, "
                f"delta_rho = {row['delta_rho']:g} W, delta_phi = {row['delta_phi']:.6g} V^2, "
                f"margin = {row['margin']:.6g} V^2, {status}"
            )
            if row["feasible"]:
                w = ", ".join(f"{v:.6g}" for k, v in row.items() if k.startswith("w_max_"))
                lines.append(f"    d = {row['d']:.6g} var/V^2, w_max = [{w}]")
        return "\n".join(lines)

    @property
    def all_feasible(self) -> bool:
        return all(self.feasible)


def epsilon_from_delta(delta: float, v_bar: float) -> float:
    """Width of the band ``|v_bar**2 - v**2| <= eps`` matching a voltage margin ``delta``."""
    if not 0 <= delta <= v_bar:
        raise ValueError("need 0 <= delta <= v_bar")
    return 2.0 * v_bar * delta - delta * delta


def epsilon_y_bound(v_bar: float, profile) -> float:
    """Worst ``|v_bar**2 - v0**2|`` over the substation voltage range.

    ``profile`` is a :class:`SubstationProfile` or a ``(v_lo, v_hi)`` pair.
    """
    lo, hi = profile.range() if isinstance(profile, SubstationProfile) else profile
    if not 0 < lo <= hi:
        raise ValueError("need 0 < v_lo <= v_hi")
    return max(abs(v_bar**2 - lo**2), abs(v_bar**2 - hi**2))


def impedance_maxima(feeder: FeederParams, index_range: str = "interior") -> tuple[float, float, float, float]:
    """(R_bar, X_bar, R'_bar, X'_bar).

    ``"interior"`` takes main-line maxima over segments 1..N-1 and service-line
    maxima over 0..N-2; ``"all"`` uses every segment, which is never smaller.
    """
    if index_range == "all":
        sl_main = sl_srv = slice(None)
    elif index_range == "interior":
        if feeder.N < 2:
            raise IndexRangeUnavailable("N = 1 leaves the maxima ranges empty; use index_range='all'")
        sl_main, sl_srv = slice(1, None), slice(0, -1)
    else:
        raise ValueError(f"unknown index_range {index_range!r}")
    return (
        float(np.max(feeder.R[sl_main])),
        float(np.max(feeder.X[sl_main])),
        float(np.max(feeder.R_prime[sl_srv])),
        float(np.max(feeder.X_prime[sl_srv])),
    )


def delta_phi(feeder: FeederParams, delta_rho: float, delta_c: float, index_range: str = "interior") -> float:
    n = feeder.N
    R_bar, X_bar, Rp_bar, Xp_bar = impedance_maxima(feeder, index_range)
    return n * (n + 1) * (R_bar * delta_rho + X_bar * delta_c) + 2 * (2 * n - 1) * (
        Rp_bar * delta_rho + Xp_bar * delta_c
    )


def feasibility(eps: float, delta_phi: float, epsilon_y: float) -> bool:
    return eps >= delta_phi + epsilon_y


def d_bound(
    eps: float,
    delta_phi: float,
    epsilon_y: float,
    H_norm: float,
    tau_max: float,
    tau_min: float,
    K_bar: float,
    t_k: float,
) -> float:
    if not tau_max >= tau_min > 0:
        raise ValueError("need tau_max >= tau_min > 0")
    slack = eps - delta_phi - epsilon_y
    if slack < 0:
        raise Infeasible(f"eps falls short of delta_phi + eps_y by {-slack:.6g} V^2", margin=slack)
    r = tau_max / tau_min
    denom = r * H_norm * (delta_phi + epsilon_y) + r * r * H_norm * H_norm * K_bar
    if denom == 0:
        raise ZeroDenominator("slope bound denominator vanishes (|H| = 0 or K_bar = delta_phi + eps_y = 0)")
    return slack * math.exp(-t_k / tau_max) / denom


def synthesize_specs(d: float, feeder: FeederParams) -> list[DroopSpec]:
    """Symmetric droop per inverter, saturating at its rating with slope ``d``."""
    if not d > 0:
        raise Infeasible(f"slope must be positive to place breakpoints, got {d!r}")
    return [DroopSpec.symmetric(float(s) / d, float(s)) for s in feeder.s_bar]


def design_all_windows(
    feeder: FeederParams,
    schedule: WindowSchedule,
    delta: float,
    substation,
    tau,
    safety: float = 1.0,
    index_range: str = "interior",
    strict: bool = True,
) -> DesignResult:
    """Design droop specs for every window of ``schedule``.

    With ``strict`` the first infeasible window raises :class:`Infeasible`
    (carrying the margin); otherwise it is flagged and its specs are ``None``.
    """
    if not 0 < safety <= 1:
        raise ValueError("safety factor must lie in (0, 1]")
    tau = np.broadcast_to(np.asarray(tau, dtype=float), (feeder.N,))
    eps = epsilon_from_delta(delta, feeder.v_bar)
    eps_y = epsilon_y_bound(feeder.v_bar, substation)
    H_norm = mat_inf_norm(build_H(feeder))
    K_bar = float(np.max(feeder.s_bar))
    tau_max, tau_min = float(tau.max()), float(tau.min())

    out = DesignResult(schedule, eps, eps_y, H_norm, [], [], [], [], [], [])
    for k in range(schedule.n_windows):
        dphi = delta_phi(feeder, schedule.delta_rho[k], schedule.delta_c[k], index_range)
        margin = eps - dphi - eps_y
        ok = feasibility(eps, dphi, eps_y)
        out.delta_phi.append(dphi)
        out.margin.append(margin)
        out.K_bar.append(K_bar)
        out.feasible.append(ok)
        if not ok:
            if strict:
                raise Infeasible(
                    f"window {k}: eps = {eps:.6g} < delta_phi + eps_y = {dphi + eps_y:.6g} "
                    f"(margin {margin:.6g} V^2)",
                    margin=margin,
                    window=k,
                )
            out.d.append(float("nan"))
            out.specs.append(None)
            continue
        d = safety * d_bound(eps, dphi, eps_y, H_norm, tau_max, tau_min, K_bar, schedule.t[k])
        if d <= 0:
            # zero slack: only the zero droop is certified
            out.d.append(0.0)
            out.specs.append([DroopSpec(0.0, 0.0, 0.0, 0.0, 0.0) for _ in range(feeder.N)])
            continue
        out.d.append(d)
        out.specs.append(synthesize_specs(d, feeder))
    return out
