"""Age-of-work mining lab: protocol primitives, chain analytics, simulator."""

__version__ = "0.1.0"
