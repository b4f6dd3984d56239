"""Linearized DistFlow model of a radial low-voltage feeder.

Indexing: customers are numbered 1..N in the physics, but every array here is
0-based. ``R[i]``/``X[i]`` is the main-line segment between connection points
i and i+1 (i = 0..N-1), ``R_prime[i]``/``X_prime[i]`` is the service line of
customer i+1, and ``s_bar[i]`` is the inverter rating of customer i+1.

Two routes compute customer voltages:

* :func:`forward_sweep` runs the branch-flow recursion node by node;
* :func:`output_map` uses the compact form ``y = H q_g + phi + y0 * 1`` in the
  squared-error coordinates ``y_i = v_bar**2 - v_i**2``.

They must agree to rounding, which the test-suite checks on random feeders.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonPhysicalVoltage

__all__ = [
    "FeederParams",
    "SubstationProfile",
    "Injections",
    "FlowState",
    "CompactForm",
    "forward_sweep",
    "build_H",
    "build_H_resistive",
    "build_phi",
    "output_map",
    "compact_form",
    "voltages_from_y",
    "vec_inf_norm",
    "mat_inf_norm",
]


def _as_vector(values, n, name):
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True)
class FeederParams:
    """Physical constants of an N-customer line feeder (SI units)."""

    R: np.ndarray
    X: np.ndarray
    R_prime: np.ndarray
    X_prime: np.ndarray
    s_bar: np.ndarray
    v_bar: float = 230.0

    def __post_init__(self):
        n = np.asarray(self.R).reshape(-1).shape[0]
        if n < 1:
            raise ValueError("feeder needs at least one customer")
        for name in ("R", "X", "R_prime", "X_prime", "s_bar"):
            arr = _as_vector(getattr(self, name), n, name)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("R", "X", "R_prime", "X_prime"):
            if np.any(getattr(self, name) < 0):
                raise ValueError(f"{name} entries must be >= 0")
        if np.any(self.s_bar <= 0):
            raise ValueError("s_bar entries must be > 0")
        if not self.v_bar > 0:
            raise ValueError("v_bar must be > 0")
        object.__setattr__(self, "v_bar", float(self.v_bar))

    @property
    def N(self) -> int:
        return self.R.shape[0]


@dataclass
class Injections:
    """Per-customer generated and consumed powers; net values are derived."""

    rho_g: np.ndarray
    rho_c: np.ndarray
    q_g: np.ndarray
    q_c: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.rho_g).reshape(-1).shape[0]
        for name in ("rho_g", "rho_c", "q_g", "q_c"):
            setattr(self, name, _as_vector(getattr(self, name), n, name))

    @classmethod
    def zeros(cls, n: int) -> "Injections":
        z = np.zeros(n)
        return cls(z, z.copy(), z.copy(), z.copy())

    @property
    def rho(self) -> np.ndarray:
        return self.rho_g - self.rho_c

    @property
    def q(self) -> np.ndarray:
        return self.q_g - self.q_c


@dataclass
class FlowState:
    """Branch flows ``P[i], Q[i]`` for i = 0..N plus node and customer voltages."""

    P: np.ndarray
    Q: np.ndarray
    v_node: np.ndarray
    v_cust: np.ndarray


@dataclass
class CompactForm:
    H: np.ndarray
    phi: np.ndarray
    y0: float = 0.0
    H_norm: float = field(init=False)

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        self.H_norm = mat_inf_norm(self.H)


def vec_inf_norm(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.max(np.abs(x))) if x.size else 0.0


def mat_inf_norm(A) -> float:
    """Max row sum of absolute entries."""
    A = np.asarray(A, dtype=float)
    return float(np.max(np.sum(np.abs(A), axis=1)))


def _sqrt_checked(v2, what):
    v2 = np.asarray(v2, dtype=float)
    if np.any(~(v2 > 0)):
        bad = int(np.flatnonzero(~(v2 > 0))[0])
        raise NonPhysicalVoltage(f"squared {what} voltage at index {bad} is {v2[bad]:.6g} V^2")
    return np.sqrt(v2)


def forward_sweep(feeder: FeederParams, inj: Injections, v0: float) -> FlowState:
    """Evaluate the branch-flow recursion from the substation to the line end.

    No power flows past the last customer, so ``P[N] = Q[N] = 0`` and each
    upstream flow is minus the net injection of everyone further down.
    """
    if not v0 > 0:
        raise ValueError("substation voltage must be > 0")
    n = feeder.N
    rho, q = inj.rho, inj.q
    if rho.shape != (n,):
        raise ValueError(f"injections sized {rho.shape[0]}, feeder has {n} customers")

    P = np.empty(n + 1)
    Q = np.empty(n + 1)
    P[0] = -rho.sum()
    Q[0] = -q.sum()
    for i in range(n):
        P[i + 1] = P[i] + rho[i]
        Q[i + 1] = Q[i] + q[i]
    # the running sums leave rounding residue at the open end
    P[n] = 0.0
    Q[n] = 0.0

    vn2 = np.empty(n + 1)
    vn2[0] = v0 * v0
    for i in range(n):
        vn2[i + 1] = vn2[i] - 2.0 * (feeder.R[i] * P[i] + feeder.X[i] * Q[i])
    vc2 = vn2[1:] + 2.0 * (feeder.R_prime * rho + feeder.X_prime * q)

    return FlowState(P=P, Q=Q, v_node=_sqrt_checked(vn2, "node"), v_cust=_sqrt_checked(vc2, "customer"))


def _ladder(series, service):
    c = np.cumsum(series)
    idx = np.arange(len(series))
    M = -2.0 * c[np.minimum.outer(idx, idx)]
    M[idx, idx] -= 2.0 * np.asarray(service)
    return M


def build_H(feeder: FeederParams) -> np.ndarray:
    """Sensitivity of ``y`` to generated reactive power, in ohm.

    Entry (j, l) is ``-2 * sum(X[:min(j, l)])`` (1-based j, l) with an extra
    ``-2 * X_prime[j-1]`` on the diagonal.
    """
    return _ladder(feeder.X, feeder.X_prime)


def build_H_resistive(feeder: FeederParams) -> np.ndarray:
    """Same construction with resistances; maps net active power to ``y``."""
    return _ladder(feeder.R, feeder.R_prime)


def build_phi(feeder: FeederParams, rho, q_c) -> np.ndarray:
    """Load-dependent offset of the compact form, in V^2.

    Entry j sums ``2 X_i * (q_c downstream of i) - 2 R_i * (rho downstream of i)``
    over segments i < j, then adds ``2 X'_{j-1} q_c,j - 2 R'_{j-1} rho_j``.
    The service-line term enters as ``+2 X' q_c``; writing it as ``-2 X' q_c``
    breaks agreement with :func:`forward_sweep`, which is authoritative.
    """
    n = feeder.N
    rho = _as_vector(rho, n, "rho")
    q_c = _as_vector(q_c, n, "q_c")
    tail_rho = np.cumsum(rho[::-1])[::-1]
    tail_qc = np.cumsum(q_c[::-1])[::-1]
    per_segment = 2.0 * feeder.X * tail_qc - 2.0 * feeder.R * tail_rho
    return np.cumsum(per_segment) + 2.0 * feeder.X_prime * q_c - 2.0 * feeder.R_prime * rho


def compact_form(feeder: FeederParams, rho, q_c, v0: float) -> CompactForm:
    return CompactForm(H=build_H(feeder), phi=build_phi(feeder, rho, q_c), y0=feeder.v_bar**2 - v0**2)


def output_map(cf: CompactForm, q_g) -> np.ndarray:
    q_g = np.asarray(q_g, dtype=float)
    return cf.H @ q_g + cf.phi + cf.y0


def voltages_from_y(y, v_bar: float) -> np.ndarray:
    return _sqrt_checked(v_bar**2 - np.asarray(y, dtype=float), "customer")


@dataclass(frozen=True)
class SubstationProfile:
    """Head-of-line voltage ``v0(t) = offset + amplitude * sin(omega * t)``."""

    offset: float = 230.0
    amplitude: float = 0.0
    omega: float = 1.0

    def __post_init__(self):
        if not self.offset - abs(self.amplitude) > 0:
            raise ValueError("substation voltage must stay positive")

    def __call__(self, t):
        return self.offset + self.amplitude * np.sin(self.omega * np.asarray(t, dtype=float))

    def range(self) -> tuple[float, float]:
        a = abs(self.amplitude)
        return self.offset - a, self.offset + a
