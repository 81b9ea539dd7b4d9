"""Hurricane / power-grid / household hardship simulation."""

__version__ = "0.1.0"
