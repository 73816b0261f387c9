"""Consensus control laws: full-information and ESO-based output feedback.

Both laws cancel the agent's own drift on the composite variable and add the
sum of decoded neighbour values minus the agent's own encoder state. The
neighbour term is frozen over each sampling interval; the cancellation term is
continuous in time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .codec import ScalingSchedule
from .plant import AgentModel, check_hurwitz_gains
from .quantizer import Quantizer


@dataclass(frozen=True)
class ProtocolParams:
    T: float
    k_gains: tuple[float, ...]
    K: int
    schedule: ScalingSchedule
    Cs: float = 40.0
    quantizer: Quantizer = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"sampling period must be positive, got {self.T}")
        if not self.Cs > 0:
            raise ValueError(f"Cs must be positive, got {self.Cs}")
        object.__setattr__(self, "k_gains", tuple(float(v) for v in self.k_gains))
        check_hurwitz_gains(self.k_gains)
        object.__setattr__(self, "quantizer", Quantizer(self.K))

    @property
    def r(self) -> int:
        return len(self.k_gains) + 1


def theta_full(m: AgentModel, rho, z, t: float, k_gains) -> float:
    """Drift of the composite variable: ``sum k_m rho_{m+1} + F``."""
    rho = np.asarray(rho, dtype=float)
    return float(np.dot(k_gains, rho[1:])) + m.lumped(rho, z, t)


def theta_bar(est_sat, k_gains) -> float:
    """Drift estimate from saturated ESO outputs (``r`` states and the extended state)."""
    est_sat = np.asarray(est_sat, dtype=float)
    return float(np.dot(k_gains, est_sat[1:-1])) + float(est_sat[-1])


def consensus_term(neighbor_terms: Iterable[float]) -> float:
    return float(sum(neighbor_terms))


def control_full_info(theta: float, neighbor_terms: Iterable[float]) -> float:
    return -theta + consensus_term(neighbor_terms)


def control_eso(theta_est: float, neighbor_terms: Iterable[float]) -> float:
    return -theta_est + consensus_term(neighbor_terms)
