"""Stability of Bayesian inverse problems under prior and likelihood perturbations.

Particle measures, distance-like costs, likelihood potentials with envelope
metadata, prior families, exact and entropic transport solvers, bound
assembly and a seeded experiment harness.
"""

__version__ = "0.1.0"

from .measure import ParticleMeasure, SeedSpec, reweight

__all__ = ["ParticleMeasure", "SeedSpec", "reweight", "__version__"]
