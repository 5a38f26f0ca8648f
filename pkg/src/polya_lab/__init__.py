"""Numerical laboratory for torsion-eigenvalue shape functionals around the ball."""

__version__ = "0.1.0"
