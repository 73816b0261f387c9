"""High-gain extended state observer (ESO) with saturated outputs."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np


def gains_from_pole(r: int, pole: float) -> np.ndarray:
    """Gains placing all ``r+1`` observer eigenvalues at ``pole``.

    These are the coefficients of ``(s - pole)^(r+1)``, so ``r=3, pole=-1``
    gives ``(4, 6, 4, 1)``.
    """
    if not pole < 0:
        raise ValueError(f"pole must be negative, got {pole}")
    return np.array([comb(r + 1, m) * (-pole) ** m for m in range(1, r + 2)], dtype=float)


def companion(L: Sequence[float]) -> np.ndarray:
    """Error-dynamics matrix: first column ``-L``, identity on the superdiagonal."""
    L = np.asarray(L, dtype=float)
    n = L.size
    E = np.eye(n, k=1)
    E[:, 0] = -L
    return E


@dataclass(frozen=True)
class EsoConfig:
    r: int
    gains: tuple[float, ...]
    epsilon: float
    sat_bounds: tuple[float, ...]

    def __post_init__(self):
        gains = tuple(float(v) for v in self.gains)
        bounds = tuple(float(v) for v in self.sat_bounds)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "sat_bounds", bounds)
        if len(gains) != self.r + 1 or len(bounds) != self.r + 1:
            raise ValueError(f"ESO for r={self.r} needs {self.r + 1} gains and saturation bounds")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if min(bounds) <= 0:
            raise ValueError("saturation bounds must be positive")
        eig = np.linalg.eigvals(companion(gains))
        if not np.all(eig.real < 0):
            raise ValueError(f"ESO gains {gains} are not Hurwitz (eigenvalues {eig})")

    @classmethod
    def from_pole(cls, r: int, epsilon: float, sat_bounds, pole: float = -1.0) -> "EsoConfig":
        return cls(r, tuple(gains_from_pole(r, pole)), epsilon, tuple(sat_bounds))

    @property
    def scaled_gains(self) -> np.ndarray:
        """``l_m / eps^m`` for ``m = 1..r+1``."""
        m = np.arange(1, self.r + 2)
        return np.asarray(self.gains) / self.epsilon ** m


def initial_estimate(cfg: EsoConfig) -> np.ndarray:
    return np.zeros(cfg.r + 1)


def eso_rhs(cfg: EsoConfig, est: np.ndarray, y: float, u: float) -> np.ndarray:
    """Observer vector field for one agent; ``est`` holds ``r`` states plus the extended state."""
    est = np.asarray(est, dtype=float)
    d = cfg.scaled_gains * (y - est[0])
    d[:-1] += est[1:]
    d[cfg.r - 1] += u
    return d


def saturate(cfg: EsoConfig, est: np.ndarray) -> np.ndarray:
    M = np.asarray(cfg.sat_bounds)
    return np.clip(est, -M, M)
