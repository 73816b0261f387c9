"""
Checking a parameter tuple against the convergence conditions
=============================================================

Sampling period T, scaling rate gamma, quantizer size K and initial scaling
beta0 have to satisfy closed-form conditions on the graph spectrum. The
certify module reports every condition with its margin instead of a bare
yes/no.
"""

from qconsensus import certify, graph
from qconsensus.codec import ScalingSchedule
from qconsensus.protocol import ProtocolParams

s = graph.spectral(graph.cycle(5))

# The five-pendulum tuple (T=0.05, gamma=0.93, K=10, beta0=10) checked on the 5-cycle.
# gamma sits just below rho_h here, so the report flags it.
p = ProtocolParams(0.05, (4, 4), 10, ScalingSchedule.floored(10.0, 0.93, 0.01), Cs=40.0)
print(certify.validate(p, s, certify.CertMode.THEOREM2, epsilon=0.01).as_text())
print()

# Pick T and gamma, and let the module choose the smallest K and a beta0 with 5% margin.
T, gamma = 0.2, 0.9
K, beta0 = certify.theorem1_parameters(s, T, gamma, Cs=40.0)
print(f"T={T}, gamma={gamma}: K1 = {certify.K1(T, gamma, s):.4f} -> K = {K}, beta0 = {beta0:.3f}")
p1 = ProtocolParams(T, (4, 4), K, ScalingSchedule(beta0, gamma), Cs=40.0)
print("full-information conditions hold:", certify.validate(p1, s, certify.CertMode.THEOREM1).feasible)
print()

# One-bit regime: T is bounded by T_m and gamma is fixed by T.
for K in (1, 2, 3):
    print(f"K = {K}: T_m = {certify.T_max_one_bit(K, 0.5, s):.6f}")
T, gamma, beta0 = certify.theorem3_parameters(s, K=1, eps0=0.5, Cs=40.0)
p3 = ProtocolParams(T, (4, 4), 1, ScalingSchedule.floored(beta0, gamma, 0.01), Cs=40.0)
rep = certify.validate(p3, s, certify.CertMode.THEOREM3, epsilon=0.01, eps0=0.5)
print(f"one-bit tuple: T={T:.5f}, gamma={gamma:.5f}, beta0={beta0:.3f}, feasible={rep.feasible}")
print(f"K1(T, gamma) = {certify.K1(T, gamma, s):.4f}  (inside (1/2, 3/2))")
