"""Stochastic trajectories and synthetic sensor traces."""
