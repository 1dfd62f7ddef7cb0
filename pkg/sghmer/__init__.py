"""Semantic-graph-regularized handwritten math expression recognition."""

__version__ = '0.1.0'
