"""Markov generators of the clockwork."""
