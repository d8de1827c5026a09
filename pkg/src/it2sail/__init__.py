"""Interval type-2 fuzzy heading control for a simulated sailing boat, with
uncertainty-weighted performance metrics and a batch experiment harness."""

__version__ = "0.1.0"
