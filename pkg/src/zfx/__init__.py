"""Extractors and dispersers for zero-fixing sources, with an exhaustive
verification harness."""

__version__ = "0.1.0"
