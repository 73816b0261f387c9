"""
Communication graph and finite-level quantizer
==============================================

The consensus protocol lives on an undirected graph; everything the
parameter conditions need comes from its Laplacian spectrum. Agents talk
through a uniform quantizer with 2K+1 levels.
"""

import numpy as np

from qconsensus import graph
from qconsensus.quantizer import Quantizer, bits_per_symbol, quantize

# A 5-cycle: every agent hears its two neighbours.
g = graph.cycle(5)
s = graph.spectral(g)
print("edges:", g.edges())
print("Laplacian eigenvalues:", np.round(s.eigenvalues, 6))
print(f"lambda2 = {s.lambda2:.6f}, lambdaN = {s.lambdaN:.6f}, max degree = {s.max_degree}")

# rho_h is the contraction factor of the sampled consensus recursion.
# Below 2/(lambda2+lambdaN) it equals 1 - T*lambda2.
for T in (0.05, 0.2, 0.5):
    print(f"T = {T:<4}  rho_h = {graph.rho_h(s, T):.6f}   1 - T*lambda2 = {1 - T * s.lambda2:.6f}")

# The same tools work on any connected graph given as an edge list.
h = graph.from_edge_list(4, [(1, 2), (2, 3), (3, 4), (4, 1), (1, 3)])
print("diamond graph spectrum:", np.round(graph.spectral(h).eigenvalues, 6))

# Quantizer: a dead band around zero, unit steps, and saturation at +-K.
qz = Quantizer(2)
v = np.array([-3.0, -1.5, -0.6, -0.3, 0.0, 0.49, 0.5, 1.49, 1.5, 7.0])
print("v      :", v)
print("q(v)   :", [quantize(qz, x) for x in v])
print("saturated:", [bool(qz.is_saturated(x)) for x in v])

# Bits per transmitted symbol: K=1 is the one-bit quantizer.
for K in (1, 2, 3, 10):
    print(f"K = {K:<2} -> {2 * K + 1} levels, {bits_per_symbol(Quantizer(K))} bit(s) per nonzero symbol")
