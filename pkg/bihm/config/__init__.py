"""Configuration package for bihm."""
