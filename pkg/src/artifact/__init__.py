"""Constructive tools for the quartic complex matrix model."""

__version__ = "0.1.0"
