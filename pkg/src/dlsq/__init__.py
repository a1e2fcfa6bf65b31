"""Distributed least-squares solver for partitioned linear equations over
undirected multi-agent networks, with spectral convergence checks."""

__version__ = "0.1.0"
