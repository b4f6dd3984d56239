"""Piecewise-linear droop functions and the first-order inverter lag around them."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateSegment

__all__ = [
    "DroopSpec",
    "ControllerBank",
    "droop_eval",
    "slope_of",
    "min_ramp_slope",
    "verify_slope_restriction",
    "controller_derivative",
    "reset",
]


@dataclass(frozen=True)
class DroopSpec:
    """Breakpoints (V^2) and saturation level (var) of one droop function.

    Ordering ``w_min <= w_m <= 0 <= w_n <= w_max`` is required, and both ramps
    must have positive width unless ``Q_bar == 0``.
    """

    w_min: float
    w_m: float
    w_n: float
    w_max: float
    Q_bar: float

    def __post_init__(self):
        for name in ("w_min", "w_m", "w_n", "w_max", "Q_bar"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.w_min <= self.w_m <= 0.0 <= self.w_n <= self.w_max):
            raise ValueError(
                f"breakpoints must satisfy w_min <= w_m <= 0 <= w_n <= w_max, got "
                f"({self.w_min}, {self.w_m}, {self.w_n}, {self.w_max})"
            )
        if self.Q_bar < 0:
            raise ValueError("Q_bar must be >= 0")
        if self.Q_bar > 0 and (self.w_m - self.w_min <= 0 or self.w_max - self.w_n <= 0):
            raise DegenerateSegment("zero-width ramp with positive Q_bar gives an infinite slope")

    @classmethod
    def symmetric(cls, w_max: float, Q_bar: float) -> "DroopSpec":
        """No dead band, ramps mirrored about zero."""
        return cls(-w_max, 0.0, 0.0, w_max, Q_bar)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("w_min", "w_m", "w_n", "w_max", "Q_bar")}

    def __call__(self, w):
        return droop_eval(self, w)


def droop_eval(spec: DroopSpec, w):
    """Evaluate the saturated droop characteristic at ``w`` (scalar or array).

    Intervals are half-open on the left as in the usual textbook statement:
    ``(w_min, w_m]``, ``(w_m, w_n]``, ``(w_n, w_max]``.
    """
    w_arr = np.asarray(w, dtype=float)
    Q = spec.Q_bar
    if Q == 0.0:
        out = np.zeros_like(w_arr)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            lower = -(1.0 - (w_arr - spec.w_min) / (spec.w_m - spec.w_min)) * Q
            upper = (w_arr - spec.w_n) / (spec.w_max - spec.w_n) * Q
        out = np.select(
            [
                w_arr <= spec.w_min,
                w_arr <= spec.w_m,
                w_arr <= spec.w_n,
                w_arr <= spec.w_max,
            ],
            [-Q, lower, 0.0, upper],
            default=Q,
        )
    return float(out) if np.ndim(w) == 0 else out


def _ramp_slopes(spec: DroopSpec):
    if spec.Q_bar == 0.0:
        return 0.0, 0.0
    if spec.w_m - spec.w_min <= 0 or spec.w_max - spec.w_n <= 0:
        raise DegenerateSegment("zero-width ramp with positive Q_bar")
    return spec.Q_bar / (spec.w_m - spec.w_min), spec.Q_bar / (spec.w_max - spec.w_n)


def slope_of(spec: DroopSpec) -> float:
    """Certified Lipschitz constant: the steeper of the two ramps."""
    return max(_ramp_slopes(spec))


def min_ramp_slope(spec: DroopSpec) -> float:
    """The gentler of the two ramps.

    Kept for comparison with published designs, which quote this value. It is
    only a valid slope certificate when both ramps are equally steep.
    """
    return min(_ramp_slopes(spec))


def verify_slope_restriction(spec: DroopSpec, d: float, grid: int = 10_000, rtol: float = 1e-9) -> bool:
    """Check ``0 <= (K(v) - K(w)) / (v - w) <= d`` and ``|K| <= Q_bar`` on a grid.

    The grid spans ``[w_min - Q_bar, w_max + Q_bar]``. Any difference quotient
    over a pair of grid points is a weighted mean of the quotients between
    neighbours, so checking neighbours covers every pair.
    """
    if grid < 2:
        raise ValueError("grid must have at least 2 points")
    lo = spec.w_min - spec.Q_bar
    hi = spec.w_max + spec.Q_bar
    if hi == lo:
        hi = lo + 1.0
    w = np.linspace(lo, hi, grid)
    K = droop_eval(spec, w)
    quot = np.diff(K) / np.diff(w)
    tol = rtol * max(d, spec.Q_bar / (hi - lo), 1e-300)
    if np.any(np.abs(K) > spec.Q_bar * (1 + rtol)):
        return False
    return bool(np.all(quot >= -tol) and np.all(quot <= d + tol))


@dataclass
class ControllerBank:
    """Inverter time constants, reactive-power states and active droop specs."""

    tau: np.ndarray
    specs: list
    q_g: np.ndarray = None
    _coef: tuple = field(init=False, repr=False, default=None)

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float).reshape(-1)
        n = self.tau.shape[0]
        if np.any(self.tau <= 0):
            raise ValueError("time constants must be > 0")
        self.q_g = np.zeros(n) if self.q_g is None else np.asarray(self.q_g, dtype=float).copy()
        if self.q_g.shape != (n,):
            raise ValueError("q_g and tau lengths differ")
        self.set_specs(self.specs)

    @property
    def N(self) -> int:
        return self.tau.shape[0]

    def set_specs(self, specs) -> None:
        specs = list(specs)
        if len(specs) != self.N:
            raise ValueError(f"need {self.N} droop specs, got {len(specs)}")
        self.specs = specs
        w_m = np.array([s.w_m for s in specs])
        w_n = np.array([s.w_n for s in specs])
        Q = np.array([s.Q_bar for s in specs])
        slopes = np.array([_ramp_slopes(s) for s in specs])
        self._coef = (w_m, w_n, Q, slopes[:, 0], slopes[:, 1])

    def droop(self, y) -> np.ndarray:
        """All droop functions at once; equals :func:`droop_eval` per customer."""
        w_m, w_n, Q, down, up = self._coef
        y = np.asarray(y, dtype=float)
        return np.minimum(Q, up * np.maximum(y - w_n, 0.0)) - np.minimum(Q, down * np.maximum(w_m - y, 0.0))

    def rhs(self, q_g, y) -> np.ndarray:
        return (self.droop(y) - q_g) / self.tau


def controller_derivative(bank: ControllerBank, y) -> np.ndarray:
    """dq_g/dt at the bank's current state for measured ``y``."""
    y = np.asarray(y, dtype=float)
    if y.shape != (bank.N,):
        raise ValueError("y and bank sizes differ")
    return bank.rhs(bank.q_g, y)


def reset(bank: ControllerBank) -> ControllerBank:
    """Zero every controller state, keeping the active specs."""
    return replace(bank, q_g=np.zeros(bank.N))
