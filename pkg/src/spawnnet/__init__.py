"""Deterministic spawning-node scale-free networks: engine, theory and statistics."""

__version__ = "0.1.0"
