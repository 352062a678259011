"""Utility modules for bihm."""
