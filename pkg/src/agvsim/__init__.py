"""agvsim: deterministic planar ground-vehicle simulation engine for RL research."""

__version__ = "0.1.0"
