"""Closed-form parameter conditions for quantized consensus.

Three condition sets are supported:

``THEOREM1``
    full-information protocol with a geometric scaling schedule;
``THEOREM2``
    ESO-based protocol, same sampling/gamma/K conditions, scaling floored at
    ``sqrt(epsilon)``;
``THEOREM3``
    ESO-based protocol at any fixed ``K`` (down to one bit), with the sampling
    period bounded by ``T_m`` and ``gamma`` pinned to ``1 - (1 - eps0) T lambda2``.

:func:`validate` never raises on an infeasible tuple; it reports every
violated condition by name together with its margin.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .codec import ScalingSchedule, ScheduleMode
from .graph import GraphError, SpectralData, rho_h
from .protocol import ProtocolParams

REL_SLACK = 1e-12


class CertMode(enum.Enum):
    THEOREM1 = "theorem1"
    THEOREM2 = "theorem2"
    THEOREM3 = "theorem3"


class CertificationError(ValueError):
    pass


def _require_connected(s: SpectralData):
    if not s.connected:
        raise GraphError("parameter conditions need a connected graph")


def K1(T: float, gamma: float, s: SpectralData, N: int | None = None) -> float:
    """Worst-case scaled quantizer input; ``K`` must exceed ``K1 - 1/2``."""
    _require_connected(s)
    N = s.n_agents if N is None else N
    rho = rho_h(s, T)
    if not gamma > rho:
        raise CertificationError(f"gamma={gamma} must exceed rho_h={rho}")
    lamN = s.lambdaN
    return (math.sqrt(N) * T**2 * lamN**2 / (2 * gamma * (gamma - rho))
            + (1 + 2 * T * s.max_degree) / (2 * gamma))


def K_min(T: float, gamma: float, s: SpectralData, N: int | None = None) -> int:
    return math.floor(K1(T, gamma, s, N) - 0.5) + 1


def beta0_terms(T: float, gamma: float, K: int, Cs: float, s: SpectralData) -> tuple[float, float, float]:
    _require_connected(s)
    rho = rho_h(s, T)
    if not gamma > rho:
        raise CertificationError(f"gamma={gamma} must exceed rho_h={rho}")
    TlamN = T * s.lambdaN
    return (
        2 * TlamN * Cs / (gamma * (K + 0.5)),
        Cs / (K + 0.5),
        2 * Cs * (gamma - rho) * (2 * gamma + TlamN) / TlamN,
    )


def beta0_min(T: float, gamma: float, K: int, Cs: float, s: SpectralData) -> float:
    """Strict lower bound for the initial scaling ``beta0``."""
    return max(beta0_terms(T, gamma, K, Cs, s))


def alpha_bar(T: float, gamma: float, beta0: float, Cs: float, s: SpectralData) -> float:
    """Bound on ``||delta(kT)|| / beta(kT)`` for a certified tuple."""
    rho = rho_h(s, T)
    N = s.n_agents
    return max(2 * math.sqrt(N) * Cs / beta0,
               T * math.sqrt(N) * s.lambdaN / (2 * gamma * (gamma - rho)))


def T_max_one_bit(K: int, eps0: float, s: SpectralData, N: int | None = None) -> float:
    """Largest sampling period for which the fixed-``K`` conditions hold."""
    _require_connected(s)
    if not 0 < eps0 < 1:
        raise CertificationError(f"eps0 must lie in (0, 1), got {eps0}")
    N = s.n_agents if N is None else N
    lam2, lamN = s.lambda2, s.lambdaN
    denom = (math.sqrt(N) * lamN**2 + 2 * eps0 * lam2 * s.max_degree
             + (2 * K + 1) * (1 - eps0) * eps0 * lam2**2)
    return 2 * K * eps0 * lam2 / denom


def T_window_fixed_K(K: int, eps0: float, s: SpectralData) -> tuple[float, float]:
    """Open interval of admissible sampling periods at fixed ``K``."""
    return 0.0, min(2 / (s.lambda2 + s.lambdaN), T_max_one_bit(K, eps0, s))


def gamma_fixed_K(T: float, eps0: float, s: SpectralData) -> float:
    return 1 - (1 - eps0) * T * s.lambda2


def theorem1_parameters(s: SpectralData, T: float, gamma: float, Cs: float,
                        margin: float = 0.05) -> tuple[int, float]:
    """Smallest admissible ``K`` and ``beta0 = (1 + margin) * beta0_min`` for a chosen ``(T, gamma)``."""
    K = K_min(T, gamma, s)
    return K, (1 + margin) * beta0_min(T, gamma, K, Cs, s)


def theorem3_parameters(s: SpectralData, K: int, eps0: float, Cs: float,
                        T_fraction: float = 0.8, margin: float = 0.05) -> tuple[float, float, float]:
    """``(T, gamma, beta0)`` for a fixed ``K``; ``T`` is ``T_fraction`` of the window's upper end."""
    if not 0 < T_fraction < 1:
        raise CertificationError("T_fraction must lie in (0, 1)")
    T = T_fraction * T_window_fixed_K(K, eps0, s)[1]
    gamma = gamma_fixed_K(T, eps0, s)
    return T, gamma, (1 + margin) * beta0_min(T, gamma, K, Cs, s)


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    margin: float
    detail: str


@dataclass
class CertReport:
    mode: CertMode
    rho_h: float
    K1: float
    K_min: int | None
    beta0_min: float
    T_window: tuple[float, float]
    gamma_window: tuple[float, float]
    T_m: float
    checks: list[Check] = field(default_factory=list)

    @property
    def violated_conditions(self) -> list[str]:
        return [c.name for c in self.checks if not c.ok]

    @property
    def feasible(self) -> bool:
        return not self.violated_conditions

    def as_text(self) -> str:
        lines = [
            f"certification mode   {self.mode.value}",
            f"rho_h                {self.rho_h:.12g}",
            f"K1                   {self.K1:.12g}",
            f"K_min                {self.K_min if self.K_min is not None else 'n/a'}",
            f"beta0_min            {self.beta0_min:.12g}",
            f"T_window             ({self.T_window[0]:.12g}, {self.T_window[1]:.12g})",
            f"gamma_window         ({self.gamma_window[0]:.12g}, {self.gamma_window[1]:.12g})",
            f"T_m                  {self.T_m:.12g}",
        ]
        width = max(len(c.name) for c in self.checks) if self.checks else 0
        for c in self.checks:
            status = "ok  " if c.ok else "FAIL"
            lines.append(f"[{status}] {c.name:<{width}}  margin={c.margin:.6g}  {c.detail}")
        lines.append(f"feasible             {'yes' if self.feasible else 'no'}")
        return "\n".join(lines)

    def as_key_values(self) -> str:
        kv = {
            "mode": self.mode.value,
            "rho_h": f"{self.rho_h:.12g}",
            "K1": f"{self.K1:.12g}",
            "K_min": "nan" if self.K_min is None else str(self.K_min),
            "beta0_min": f"{self.beta0_min:.12g}",
            "T_window_hi": f"{self.T_window[1]:.12g}",
            "gamma_window_lo": f"{self.gamma_window[0]:.12g}",
            "T_m": f"{self.T_m:.12g}",
            "feasible": str(self.feasible).lower(),
            "violated": ",".join(self.violated_conditions),
        }
        for c in self.checks:
            kv[f"margin.{c.name.replace(' ', '_')}"] = f"{c.margin:.12g}"
        return "\n".join(f"{k}={v}" for k, v in kv.items())


def _less(a: float, b: float) -> tuple[bool, float]:
    """Strict ``a < b`` with a relative slack; returns the decision and ``b - a``."""
    margin = b - a
    return margin > REL_SLACK * max(abs(a), abs(b), 1.0), margin


def validate(p: ProtocolParams, s: SpectralData, mode: CertMode, *,
             epsilon: float | None = None, eps0: float | None = None,
             Cs: float | None = None) -> CertReport:
    """Check a parameter tuple against one of the three condition sets."""
    _require_connected(s)
    Cs = p.Cs if Cs is None else Cs
    T, gamma, K = p.T, p.schedule.gamma, p.K
    beta0 = p.schedule.beta0
    rho = rho_h(s, T)
    checks: list[Check] = []
    nan = float("nan")

    if mode is CertMode.THEOREM3:
        if eps0 is None:
            raise CertificationError("THEOREM3 validation needs eps0")
        T_m = T_max_one_bit(K, eps0, s)
        T_hi = min(2 / (s.lambda2 + s.lambdaN), T_m)
        ok, m = _less(T, T_hi)
        checks.append(Check("sampling period", ok and T > 0, m, f"T={T:.6g} in (0, {T_hi:.6g})"))
        g_req = gamma_fixed_K(T, eps0, s)
        dev = abs(gamma - g_req)
        checks.append(Check("gamma formula", dev <= 1e-9, -dev,
                            f"gamma={gamma:.6g}, required 1-(1-eps0)T*lambda2={g_req:.10g}"))
    else:
        T_m = nan
        T_hi = 2 / s.lambdaN
        ok, m = _less(T, T_hi)
        checks.append(Check("sampling period", ok and T > 0, m, f"T={T:.6g} in (0, {T_hi:.6g})"))

    ok_lo, m_lo = _less(rho, gamma)
    ok_hi, m_hi = _less(gamma, 1.0)
    checks.append(Check("gamma window", ok_lo and ok_hi, min(m_lo, m_hi),
                        f"gamma={gamma:.6g} in ({rho:.6g}, 1)"))

    if gamma > rho:
        k1 = K1(T, gamma, s)
        kmin = math.floor(k1 - 0.5) + 1
        b_min = beta0_min(T, gamma, K, Cs, s)
        checks.append(Check("quantizer levels", K >= kmin, K - kmin, f"K={K} >= K_min={kmin} (K1={k1:.6g})"))
        ok, m = _less(b_min, beta0)
        checks.append(Check("initial scaling", ok, m, f"beta0={beta0:.6g} > {b_min:.6g}"))
    else:
        k1, kmin, b_min = nan, None, nan
        checks.append(Check("quantizer levels", False, nan, "K1 undefined: gamma <= rho_h"))
        checks.append(Check("initial scaling", False, nan, "beta0 bound undefined: gamma <= rho_h"))

    sch = p.schedule
    if mode is CertMode.THEOREM1:
        ok = sch.mode is ScheduleMode.GEOMETRIC
        checks.append(Check("schedule mode", ok, 0.0 if ok else nan, f"{sch.mode.value}, geometric required"))
    else:
        if epsilon is None:
            raise CertificationError(f"{mode.value} validation needs epsilon")
        want = math.sqrt(epsilon)
        ok = sch.mode is ScheduleMode.FLOORED and abs(sch.floor - want) <= 1e-12 * want
        checks.append(Check("schedule mode", ok, 0.0 if ok else nan,
                            f"{sch.mode.value} floor={sch.floor:.6g}, floored at sqrt(eps)={want:.6g} required"))

    return CertReport(mode=mode, rho_h=rho, K1=k1, K_min=kmin, beta0_min=b_min,
                      T_window=(0.0, T_hi), gamma_window=(rho, 1.0), T_m=T_m, checks=checks)


def schedule_for(mode: CertMode, beta0: float, gamma: float, epsilon: float | None) -> ScalingSchedule:
    if mode is CertMode.THEOREM1:
        return ScalingSchedule(beta0, gamma)
    return ScalingSchedule.floored(beta0, gamma, epsilon)
