"""Semantic graph: co-occurrence counts, correlation matrices and the graph file."""

from sghmer.semgraph.cooccurrence import (
  CooccurCounts,
  build_graph,
  conditional_matrix,
  count_cooccurrence,
  neighbors,
  presence_matrix,
  symmetrize,
)
from sghmer.semgraph.graph_io import GraphFormatError, load_graph, save_graph

__all__ = [
  'CooccurCounts',
  'GraphFormatError',
  'build_graph',
  'conditional_matrix',
  'count_cooccurrence',
  'load_graph',
  'neighbors',
  'presence_matrix',
  'save_graph',
  'symmetrize',
]
