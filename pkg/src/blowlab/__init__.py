"""Numerical laboratory for a gradient/nonlocal-perturbed semilinear heat
equation: similarity-variable integration, Hermite mode decomposition,
trap-region shooting, and rate verification."""

__version__ = "0.1.0"
