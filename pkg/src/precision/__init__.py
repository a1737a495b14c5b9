"""Empirical clock precision from sliced records."""
