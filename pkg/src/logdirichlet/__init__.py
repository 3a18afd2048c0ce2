"""Logarithmic Dirichlet Laplacian on Ahlfors regular spaces.

Galerkin spectra on shift spaces, intervals and the circle, closed-form oracles,
heat traces and trace thresholds, Dini moduli and commutators, and Möbius actions
on the circle.
"""
from __future__ import annotations

__version__ = "0.1.0"
