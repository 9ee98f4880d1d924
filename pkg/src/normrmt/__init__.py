"""Norm-dependent random matrix ensembles in an external field.

Transforms between ordinary-space and superspace densities, spread
functions, the unitary correlation kernel, k-point correlation functions
and Monte Carlo validation for the orthogonal, unitary and symplectic
classes.
"""

__version__ = "0.1.0"
