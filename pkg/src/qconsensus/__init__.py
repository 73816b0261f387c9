"""Quantized output consensus of nonlinear multi-agent systems over finite-rate networks."""

__version__ = "0.1.0"
