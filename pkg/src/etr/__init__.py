"""A toolkit for a small typed lambda calculus with occurrence typing,
structure type properties and existential method-extraction types."""

__version__ = "0.1.0"
