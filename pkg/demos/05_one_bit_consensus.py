"""
Consensus with one bit per transmission
=======================================

With K = 1 every message is -1, 0 or +1 and only nonzero symbols cost a bit.
The sampling period and scaling rate come from the fixed-K conditions.
"""

import numpy as np

from qconsensus.config import parse_config
from qconsensus.engine import run

spec = parse_config("preset = cycle5_onebit\n")
cfg = spec.sim_config()
print(f"T = {cfg.protocol.T:.5f}, gamma = {cfg.protocol.schedule.gamma:.5f}, "
      f"beta0 = {cfg.protocol.schedule.beta0:.3f}, epsilon = {cfg.epsilon}")

res = run(cfg)
print("symbols used:", sorted(np.unique(res.symbols).tolist()))
print("max bits per agent per round:", int(res.bits.max()))
print(f"initial disagreement {res.max_pairwise[0]:.3f} -> steady state {res.steady_state_disagreement():.4f}")
print("bits per agent over the run:", res.total_bits)
print("saturation events:", len(res.audit), res.audit[:3])

# A faster observer (epsilon = 0.001) finishes its transient before the
# first transmissions; a few seconds are enough to see the difference.
fast = run(spec.sim_config(epsilon=0.001).replace(duration=round(3 / cfg.protocol.T) * cfg.protocol.T))
print("epsilon = 0.001, first 3 s: saturation events =", len(fast.audit))
