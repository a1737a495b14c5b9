"""Clockwork Ticks - simulation and analysis of microscopic stochastic clocks."""

__version__ = "0.1.0"
