"""ltlab: numerical checks for the optimal Leray-Trudinger inequality."""

__version__ = "0.1.0"
