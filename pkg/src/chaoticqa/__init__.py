"""State-vector quantum annealing with transverse-field and bosonic SYK drivers."""

__version__ = "0.1.0"
