"""Agent dynamics in canonical (integrator-chain) coordinates.

An agent is ``rho' = A rho + B (F(rho, z, w, t) + u)``, ``z' = Z(rho, z, w, t)``,
``y = rho[0]``, where ``F`` lumps every nonlinearity and disturbance acting on
the last channel. The five-pendulum benchmark is provided as a preset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np

Lumped = Callable[[np.ndarray, np.ndarray, float, float], float]
ZeroDyn = Callable[[np.ndarray, np.ndarray, float, float], np.ndarray]


def sin2t(t: float) -> float:
    return math.sin(2.0 * t)


def no_disturbance(t: float) -> float:
    return 0.0


DISTURBANCES: dict[str, Callable[[float], float]] = {
    "sin2t": sin2t,
    "zero": no_disturbance,
}


def _no_zero_dynamics(rho, z, w, t):
    return np.empty(0)


@dataclass(frozen=True)
class AgentModel:
    """One agent in canonical form.

    ``F`` and ``Z`` must be pure functions of their arguments. ``to_canonical``
    maps an original-coordinate state to ``rho`` and is used only for drawing
    initial conditions.
    """

    r: int
    F: Lumped
    disturbance: Callable[[float], float] = DISTURBANCES["zero"]
    zero_dim: int = 0
    Z: ZeroDyn = _no_zero_dynamics
    label: str = "agent"
    to_canonical: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.r < 1:
            raise ValueError(f"relative degree must be >= 1, got {self.r}")
        if self.zero_dim < 0:
            raise ValueError("zero_dim must be nonnegative")

    def lumped(self, rho, z, t: float) -> float:
        return float(self.F(rho, z, self.disturbance(t), t))

    def canonical_state(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x.copy() if self.to_canonical is None else np.asarray(self.to_canonical(x), float)


def canonical_rhs(m: AgentModel, rho, z, t: float, u: float):
    """Time derivative ``(d rho, d z)`` of the canonical-form agent."""
    rho = np.asarray(rho, dtype=float)
    z = np.asarray(z, dtype=float)
    if rho.shape != (m.r,):
        raise ValueError(f"rho has shape {rho.shape}, expected ({m.r},)")
    if z.shape != (m.zero_dim,):
        raise ValueError(f"z has shape {z.shape}, expected ({m.zero_dim},)")
    w = m.disturbance(t)
    drho = np.empty(m.r)
    drho[:-1] = rho[1:]
    drho[-1] = m.F(rho, z, w, t) + u
    dz = np.asarray(m.Z(rho, z, w, t), dtype=float).reshape(m.zero_dim)
    return drho, dz


def _zero_lumped(rho, z, w, t):
    return 0.0


def integrator_chain(r: int, label: str = "chain") -> AgentModel:
    return AgentModel(r=r, F=_zero_lumped, label=label)


# --- five-pendulum benchmark ------------------------------------------------

@dataclass(frozen=True)
class PendulumParams:
    index: int
    p: float = field(init=False)
    q: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "p", 10.0 + self.index)
        object.__setattr__(self, "q", 2.0 + 0.2 * self.index)


def pendulum_transform(x, params: PendulumParams) -> np.ndarray:
    """Original pendulum/motor state ``(angle, rate, shaft)`` to canonical ``rho``."""
    x1, x2, x3 = (float(v) for v in x)
    return np.array([x1, x2, x3 - params.p * math.sin(x1) - params.q * math.cos(x1)])


def pendulum_inverse_transform(rho, params: PendulumParams) -> np.ndarray:
    r1, r2, r3 = (float(v) for v in rho)
    return np.array([r1, r2, r3 + params.p * math.sin(r1) + params.q * math.cos(r1)])


def pendulum_original_rhs(x, t: float, u: float, params: PendulumParams,
                          disturbance: Callable[[float], float] = DISTURBANCES["sin2t"]) -> np.ndarray:
    """Pendulum with motor dynamics in its physical coordinates."""
    x1, x2, x3 = (float(v) for v in x)
    return np.array([
        x2,
        x3 - params.p * math.sin(x1) - params.q * math.cos(x1),
        -x3 + u + disturbance(t),
    ])


@dataclass(frozen=True)
class PendulumLumped:
    """Lumped nonlinearity of the pendulum in canonical coordinates."""

    params: PendulumParams

    def __call__(self, rho, z, w, t):
        p, q = self.params.p, self.params.q
        r1, r2, r3 = rho[0], rho[1], rho[2]
        s1, c1 = math.sin(r1), math.cos(r1)
        return -r3 - p * s1 - q * c1 - p * r2 * c1 + q * r2 * s1 + w


def pendulum_model(i: int, disturbance: str = "sin2t") -> AgentModel:
    params = PendulumParams(i)
    return AgentModel(
        r=3,
        F=PendulumLumped(params),
        disturbance=DISTURBANCES[disturbance],
        label=f"pendulum{i}",
        to_canonical=partial(pendulum_transform, params=params),
    )


# --- composite variable and linear counterpart ------------------------------

def check_hurwitz_gains(k_gains: Sequence[float]) -> np.ndarray:
    """Validate ``k1 + k2*l + ... + l^(r-1)`` is Hurwitz; return the gains as an array."""
    k = np.asarray(k_gains, dtype=float).reshape(-1)
    if k.size == 0:
        return k
    # numpy.roots wants highest degree first
    roots = np.roots(np.concatenate(([1.0], k[::-1])))
    if not np.all(roots.real < 0):
        raise ValueError(f"k-gains {tuple(k)} are not Hurwitz (roots {roots})")
    return k


def composite_s(rho, k_gains) -> float:
    rho = np.asarray(rho, dtype=float)
    k = np.asarray(k_gains, dtype=float)
    if k.shape != (rho.shape[-1] - 1,):
        raise ValueError(f"need {rho.shape[-1] - 1} k-gains, got {k.size}")
    return float(k @ rho[:-1] + rho[-1])


@dataclass(frozen=True)
class LinearCounterpart:
    """Chain of integrators with the ``-k`` feedback row that full-information
    control produces; the reference system for performance recovery."""

    k_gains: tuple[float, ...]

    @property
    def r(self) -> int:
        return len(self.k_gains) + 1

    @property
    def A(self) -> np.ndarray:
        r = self.r
        a = np.eye(r, k=1)
        a[-1, 1:] = -np.asarray(self.k_gains)
        return a

    @property
    def B(self) -> np.ndarray:
        b = np.zeros(self.r)
        b[-1] = 1.0
        return b


def linear_counterpart_rhs(lc: LinearCounterpart, rho, u: float) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    d = np.empty_like(rho)
    d[:-1] = rho[1:]
    d[-1] = u - float(np.dot(lc.k_gains, rho[1:]))
    return d
