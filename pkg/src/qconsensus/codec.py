"""Dynamic encoder/decoder pair driven by a shared scaling schedule.

The encoder quantizes the innovation ``(s - xi) / beta`` and integrates the
quantized value back into its own state ``xi``; every decoder runs the same
recursion on the received symbols, so decoder and encoder states coincide
exactly at every round.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .quantizer import Quantizer, quantize


class ScheduleMode(enum.Enum):
    GEOMETRIC = "geometric"
    FLOORED = "floored"


@dataclass(frozen=True)
class ScalingSchedule:
    beta0: float
    gamma: float
    mode: ScheduleMode = ScheduleMode.GEOMETRIC
    floor: float = 0.0

    def __post_init__(self):
        if not self.beta0 > 0:
            raise ValueError(f"beta0 must be positive, got {self.beta0}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.mode is ScheduleMode.FLOORED and not self.floor > 0:
            raise ValueError("a floored schedule needs a positive floor")
        if self.mode is ScheduleMode.GEOMETRIC and self.floor != 0.0:
            raise ValueError("a geometric schedule has no floor")

    @classmethod
    def floored(cls, beta0: float, gamma: float, epsilon: float) -> "ScalingSchedule":
        """Schedule that stops shrinking at ``sqrt(epsilon)``."""
        return cls(beta0, gamma, ScheduleMode.FLOORED, math.sqrt(epsilon))

    def crossing_step(self) -> int | None:
        """First ``k`` with ``beta_k == floor``; ``None`` for geometric schedules."""
        if self.mode is ScheduleMode.GEOMETRIC:
            return None
        if self.beta0 <= self.floor:
            return 0
        k = math.ceil(math.log(self.floor / self.beta0) / math.log(self.gamma))
        # guard the closed form against rounding at the crossing
        while self.beta0 * self.gamma ** k > self.floor:
            k += 1
        while k > 0 and self.beta0 * self.gamma ** (k - 1) <= self.floor:
            k -= 1
        return k


def scaling_at(sch: ScalingSchedule, k: int) -> float:
    if k < 0:
        raise ValueError("step index must be nonnegative")
    beta = sch.beta0 * sch.gamma ** k
    if sch.mode is ScheduleMode.FLOORED:
        return max(beta, sch.floor)
    return beta


@dataclass
class EncoderState:
    xi: float = 0.0
    k: int = 0


@dataclass
class DecoderState:
    s_hat: float = 0.0
    k: int = 0


def encode_step(enc: EncoderState, s_new: float, beta_k: float, qz: Quantizer):
    """Return ``(symbol, new_state, scaled_input)``.

    ``scaled_input`` is the value handed to the quantizer; the caller flags
    saturation when its magnitude exceeds ``K + 1/2``.
    """
    if not beta_k > 0:
        raise ValueError(f"scaling must be positive, got {beta_k}")
    v = (s_new - enc.xi) / beta_k
    symbol = quantize(qz, v)
    return symbol, EncoderState(enc.xi + beta_k * symbol, enc.k + 1), v


def decode_step(dec: DecoderState, symbol: int, beta_k: float, qz: Quantizer | None = None) -> DecoderState:
    if qz is not None and abs(symbol) > qz.K:
        raise ValueError(f"received symbol {symbol} outside [-{qz.K}, {qz.K}]")
    if not beta_k > 0:
        raise ValueError(f"scaling must be positive, got {beta_k}")
    return DecoderState(dec.s_hat + beta_k * symbol, dec.k + 1)
