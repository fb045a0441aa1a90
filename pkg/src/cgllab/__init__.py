"""Complex Ginzburg-Landau laboratory."""

__version__ = "0.1.0"
