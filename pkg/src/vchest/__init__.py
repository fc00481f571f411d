"""Vehicular channel estimation for IEEE 802.11p: simulator, estimators and tools."""

__version__ = "0.1.0"
