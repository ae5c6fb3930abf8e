"""Calibration provider package."""
