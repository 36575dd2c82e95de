"""vrmix - online variance reduction with mixtures."""

__version__ = "0.1.0"
