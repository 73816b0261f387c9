"""Finite-level uniform quantizer with ``2K+1`` symbols and its bit cost."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Quantizer:
    """Symmetric uniform quantizer with unit step and symbols ``-K..K``.

    Values in ``(-1/2, 1/2)`` map to 0, band ``[(2i-1)/2, (2i+1)/2)`` maps to
    ``i`` and everything at or above ``(2K-1)/2`` maps to ``K``. Negative
    inputs use the odd extension ``q(v) = -q(-v)``.
    """

    K: int

    def __post_init__(self):
        if not isinstance(self.K, int) or isinstance(self.K, bool) or self.K < 1:
            raise ValueError(f"quantizer half-range K must be an integer >= 1, got {self.K!r}")

    def __call__(self, v: float) -> int:
        return quantize(self, v)

    @property
    def levels(self) -> int:
        return 2 * self.K + 1

    @property
    def saturation_threshold(self) -> float:
        return self.K + 0.5

    def is_saturated(self, v: float) -> bool:
        return abs(v) > self.K + 0.5


def quantize(qz: Quantizer, v: float) -> int:
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"cannot quantize non-finite value {v}")
    mag = abs(v)
    if mag < 0.5:
        return 0
    # floor(mag + 1/2) is the band index for the inclusive lower edges
    level = min(int(math.floor(mag + 0.5)), qz.K)
    return level if v > 0 else -level


def bits_per_symbol(qz: Quantizer) -> int:
    """Bits needed for a nonzero symbol; zero symbols are never sent."""
    # exact integer ceil(log2(2K))
    return (2 * qz.K - 1).bit_length()
