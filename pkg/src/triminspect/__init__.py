"""Automatic trimming-die design inspection on synthetic CAD sections."""

__version__ = "0.1.0"
