"""Two-time pseudo-spin correlators and temporal Bell scans for two-mode squeezed states."""

__version__ = "0.1.0"
