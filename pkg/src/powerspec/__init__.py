"""Mean values and spectra of multiplicative functions supported on powerful numbers."""

__version__ = "0.1.0"
