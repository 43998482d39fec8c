"""Conformally calibrated low-to-high DoF assistive teleoperation."""

__version__ = "0.1.0"
