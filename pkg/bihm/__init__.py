"""bihm - bidirectional Helmholtz machines: training, estimation, sampling and exact oracles."""

__version__ = "0.4.0"
__author__ = "bihm contributors"
