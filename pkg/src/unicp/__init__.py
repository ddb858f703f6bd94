"""Universal broadband composite pulses for two-level population inversion."""

__version__ = "0.1.0"
