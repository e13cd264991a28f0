"""Numerical laboratory for a massless Dirac operator with a matrix potential:
Clifford algebra and sphere-inversion machinery, grid spinor fields, functional
norms, explicit zero-mode diagnostics, inequality-constant searches, and a
coupling-constant scanner, wrapped in a service and CLI."""

__version__ = "0.1.0"
