"""Rate-matrix reconstruction from jump records."""
