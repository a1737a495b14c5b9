"""Versioned artifact schemas and atomic writers."""
