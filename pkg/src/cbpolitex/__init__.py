"""Primal-dual solvers for tabular and linearly-approximated constrained MDPs."""

__version__ = "0.1.0"
