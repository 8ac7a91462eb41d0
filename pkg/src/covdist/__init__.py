"""Covariance-distance analysis of molecular-dynamics trajectories."""

__version__ = "0.1.0"
