"""Exact quantum decay through a delta-shell barrier, free S-wave packet
evolution, and detection and maximisation of quantum backflow."""

__version__ = "0.1.0"
