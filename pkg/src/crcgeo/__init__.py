"""Symbolic exterior calculus for 5-dimensional rank-1 Levi degenerate
CR geometry: model structure equations, curvature normalization checks,
and the tube-hypersurface curvature pipeline."""

__version__ = "0.1.0"
