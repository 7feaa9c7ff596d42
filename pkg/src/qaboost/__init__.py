"""Boosting with QUBO oracles on emulated Chimera annealers."""

__version__ = "0.1.0"
