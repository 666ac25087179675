"""Learning declarative domain-specific heuristics for ASP from solved instances."""

__version__ = "0.1.0"
