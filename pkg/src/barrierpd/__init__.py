"""Barrier-preconditioned primal-dual optimization on second-order cones."""

__version__ = "0.1.0"
