"""Trace and artifact ingestion with validation."""
