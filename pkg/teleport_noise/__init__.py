"""Coherent noise under teleportation: channel averaging, bounds and foliated-code replacement."""

__version__ = "0.1.0"
