"""Static security analyzer for a small Java subset."""

__version__ = "0.1.0"
