"""Tick counting and time estimators."""
