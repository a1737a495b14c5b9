"""Entropy budgets of clockwork and measurement."""
