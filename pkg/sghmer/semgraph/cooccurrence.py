"""
Symbol co-occurrence statistics and the correlation matrices derived from them.

Counting is presence based: an expression contributes at most once to solo[j]
and to pair[i][j], however often a symbol repeats in it. The raw correlation
matrix holds r[i][j] = P(s_i | s_j) = pair[i][j] / solo[j]; the semantic graph
is its symmetrized form (R + Rᵀ) / 2.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from sghmer.corpus.vocab import EOS_ID, PAD_ID, SOS_ID, Vocab

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CooccurCounts:
  """
  Presence counts over a corpus.

  Attributes:
      n: Vocab size
      pair: n×n, pair[i][j] = #expressions containing both i and j (zero diagonal)
      solo: n, solo[j] = #expressions containing j
      expressions: Number of expressions counted
  """

  n: int
  pair: np.ndarray
  solo: np.ndarray
  expressions: int

  def merge(self, other: 'CooccurCounts') -> 'CooccurCounts':
    """Counts of the union of two disjoint corpus shards."""
    if other.n != self.n:
      raise ValueError(f'Cannot merge counts over {self.n} and {other.n} symbols')
    return CooccurCounts(
      n=self.n,
      pair=self.pair + other.pair,
      solo=self.solo + other.solo,
      expressions=self.expressions + other.expressions,
    )


def presence_matrix(corpus: Iterable[Sequence[int]], vocab_size: int) -> np.ndarray:
  """
  Expressions × symbols 0/1 matrix, eos appended once to every expression.

  Raises:
      ValueError: On ids outside the vocab, or pad/sos ids in an expression
  """
  rows = []
  for number, ids in enumerate(corpus):
    ids = np.asarray(list(ids), dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= vocab_size):
      raise ValueError(f'Expression {number}: id out of range [0, {vocab_size})')
    if np.isin(ids, (PAD_ID, SOS_ID)).any():
      raise ValueError(f'Expression {number}: pad/sos ids are not graph symbols')
    row = np.zeros(vocab_size, dtype=np.int64)
    row[ids] = 1
    row[EOS_ID] = 1
    rows.append(row)
  if not rows:
    raise ValueError('Cannot count co-occurrence over an empty corpus')
  return np.stack(rows)


def count_cooccurrence(corpus: Iterable[Sequence[int]], vocab_size: int) -> CooccurCounts:
  """
  Presence-based pair and solo counts.

  Args:
      corpus: Token-id sequences without sos/eos/pad
      vocab_size: Number of ids n

  Returns:
      CooccurCounts over n symbols (eos included as a node)

  Raises:
      ValueError: On an empty corpus or an out-of-range id
  """
  presence = presence_matrix(corpus, vocab_size)
  pair = presence.T @ presence
  solo = np.diag(pair).copy()
  np.fill_diagonal(pair, 0)
  return CooccurCounts(n=vocab_size, pair=pair, solo=solo, expressions=presence.shape[0])


def conditional_matrix(counts: CooccurCounts) -> np.ndarray:
  """
  Raw correlation matrix r[i][j] = P(s_i | s_j).

  Columns and rows of never-seen symbols are zero, their diagonal included;
  every seen symbol has r[j][j] = 1.
  """
  seen = counts.solo > 0
  r = np.zeros((counts.n, counts.n), dtype=np.float64)
  r[:, seen] = counts.pair[:, seen] / counts.solo[seen]
  r[np.diag_indices(counts.n)] = seen.astype(np.float64)
  return r


def symmetrize(r: np.ndarray) -> np.ndarray:
  """
  (R + Rᵀ) / 2.

  Raises:
      ValueError: If R is not square
  """
  r = np.asarray(r, dtype=np.float64)
  if r.ndim != 2 or r.shape[0] != r.shape[1]:
    raise ValueError(f'symmetrize needs a square matrix, got shape {r.shape}')
  return (r + r.T) / 2.0


def build_graph(corpus: Iterable[Sequence[int]], vocab_size: int) -> np.ndarray:
  """Symmetrized correlation matrix R′ of a corpus."""
  counts = count_cooccurrence(corpus, vocab_size)
  graph = symmetrize(conditional_matrix(counts))
  logger.info(
    f'[GRAPH_BUILD] {counts.expressions} expressions, {int((counts.solo > 0).sum())}/{counts.n} symbols seen'
  )
  return graph


def neighbors(graph: np.ndarray, vocab: Vocab, symbol: str, k: int = 5) -> list[tuple[str, float]]:
  """
  The k symbols most correlated with symbol, strongest first (ties by lower id).

  Raises:
      ValueError: If symbol is not in vocab, k < 1, or the graph does not match vocab
  """
  if graph.shape != (len(vocab), len(vocab)):
    raise ValueError(f'Graph shape {graph.shape} does not match vocab size {len(vocab)}')
  if k < 1:
    raise ValueError(f'k must be positive, got {k}')
  row = vocab.id_of(symbol)
  candidates = [j for j in range(len(vocab)) if j not in (row, PAD_ID, SOS_ID)]
  ranked = sorted(candidates, key=lambda j: (-graph[row, j], j))[:k]
  return [(vocab.symbol_of(j), float(graph[row, j])) for j in ranked]
