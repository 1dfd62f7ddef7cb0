"""
Vocab and semantic-graph resolution for training, graph building and neighbor lookups.
"""

import logging
import threading
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from cachetools import LRUCache, cached

from sghmer.corpus import Vocab, build_vocab, read_manifest
from sghmer.semgraph import build_graph, load_graph, neighbors, save_graph

logger = logging.getLogger(__name__)


def graph_for_expressions(
  expressions: Sequence[Sequence[str]],
  vocab: Optional[Vocab] = None,
) -> tuple[np.ndarray, Vocab]:
  """
  Symmetrized correlation graph of a token corpus.

  Args:
      expressions: Token sequences
      vocab: Index the graph by this vocab (a superset of the corpus symbols);
          built from the corpus when None

  Raises:
      ValueError: On an empty corpus or a symbol missing from vocab
  """
  vocab = vocab or build_vocab(expressions)
  corpus = [vocab.encode(tokens) for tokens in expressions]
  return build_graph(corpus, len(vocab)), vocab


def build_graph_file(
  manifest: Union[str, Path],
  out: Union[str, Path],
  vocab_path: Optional[Union[str, Path]] = None,
) -> tuple[np.ndarray, Vocab]:
  """Build the graph of a manifest's labels and save it to out."""
  expressions = [entry.tokens for entry in read_manifest(manifest)]
  vocab = Vocab.load(vocab_path) if vocab_path else None
  graph, vocab = graph_for_expressions(expressions, vocab)
  save_graph(graph, vocab, out)
  logger.info(f'Saved {len(vocab)}-symbol graph from {len(expressions)} expressions to {out}')
  return graph, vocab


def resolve_vocab(vocab_path: str, expressions: Iterable[Sequence[str]]) -> Vocab:
  """Load the configured vocab, or build one from the training labels."""
  if vocab_path:
    return Vocab.load(vocab_path)
  return build_vocab(expressions)


def resolve_graph(graph_path: str, vocab: Vocab, expressions: Sequence[Sequence[str]]) -> np.ndarray:
  """
  Load the configured graph, or build one from the training labels.

  Raises:
      ValueError: If a loaded graph is indexed by a different vocab
  """
  if not graph_path:
    graph, _ = graph_for_expressions(expressions, vocab)
    return graph
  graph, graph_vocab = load_graph(graph_path)
  if graph_vocab != vocab:
    missing = sorted(set(vocab.symbols) ^ set(graph_vocab.symbols))[:10]
    raise ValueError(
      f'Semantic graph {graph_path} vocab ({len(graph_vocab)} symbols) does not match the training '
      f'vocab ({len(vocab)} symbols); differing symbols: {missing or "order only"}'
    )
  return graph


@cached(LRUCache(maxsize=4), lock=threading.Lock())
def _load_graph_version(path: str, mtime_ns: int) -> tuple[np.ndarray, Vocab]:
  return load_graph(path)


def load_served_graph(path: Union[str, Path]) -> tuple[np.ndarray, Vocab]:
  """Graph file contents, re-read only when the file changes."""
  resolved = Path(path).resolve()
  return _load_graph_version(str(resolved), resolved.stat().st_mtime_ns)


def graph_neighbors(path: Union[str, Path], symbol: str, k: int = 5) -> list[tuple[str, float]]:
  """
  The k symbols most correlated with symbol in a graph file.

  Raises:
      FileNotFoundError: If the graph file does not exist
      ValueError: If symbol is unknown or k < 1
  """
  graph, vocab = load_served_graph(path)
  return neighbors(graph, vocab, symbol, k)
