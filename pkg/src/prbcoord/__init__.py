"""Coordinated inter-cell PRB allocation: simulator, baselines and RL agents."""

__version__ = "0.1.0"
