"""Readout calibration and state identification from sensor traces."""
