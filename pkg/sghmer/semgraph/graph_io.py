"""
Semantic graph file.

Text layout, UTF-8:

    SEMGRAPH1
    <n>
    <n vocab lines, id order>
    <n rows of n space-separated values, 9 significant digits>
    CRC <crc32 of every preceding byte, 8 hex digits>
"""

import logging
import zlib
from pathlib import Path
from typing import Union

import numpy as np

from sghmer.corpus.vocab import Vocab

logger = logging.getLogger(__name__)

HEADER = 'SEMGRAPH1'


class GraphFormatError(ValueError):
  """A graph file is truncated, corrupt or not a graph file."""


def encode_graph(graph: np.ndarray, vocab: Vocab) -> bytes:
  n = len(vocab)
  if graph.shape != (n, n):
    raise ValueError(f'Graph shape {graph.shape} does not match vocab size {n}')
  lines = [HEADER, str(n), *vocab.symbols]
  lines.extend(' '.join(f'{v:.9g}' for v in row) for row in np.asarray(graph, dtype=np.float64))
  body = ('\n'.join(lines) + '\n').encode('utf-8')
  return body + f'CRC {zlib.crc32(body):08x}\n'.encode('ascii')


def decode_graph(data: bytes) -> tuple[np.ndarray, Vocab]:
  cut = data.rfind(b'CRC ')
  if cut < 0:
    raise GraphFormatError('Graph file has no CRC line (truncated?)')
  body, trailer = data[:cut], data[cut:].decode('ascii', errors='replace').strip()
  if trailer != f'CRC {zlib.crc32(body):08x}':
    raise GraphFormatError('Graph file CRC mismatch (corrupt or truncated file)')

  lines = body.decode('utf-8').split('\n')
  if lines[-1] == '':
    lines.pop()
  if not lines or lines[0] != HEADER:
    raise GraphFormatError(f'Not a graph file: expected header {HEADER!r}')
  try:
    n = int(lines[1])
  except (IndexError, ValueError):
    raise GraphFormatError('Graph file has a malformed size line') from None
  if len(lines) != 2 + 2 * n:
    raise GraphFormatError(f'Graph file holds {len(lines)} lines, expected {2 + 2 * n}')
  try:
    vocab = Vocab(lines[2 : 2 + n])
    graph = np.array([[float(v) for v in line.split()] for line in lines[2 + n :]], dtype=np.float64)
  except ValueError as e:
    raise GraphFormatError(f'Graph file is malformed: {e}') from e
  if graph.shape != (n, n):
    raise GraphFormatError(f'Graph matrix shape {graph.shape}, expected {(n, n)}')
  return graph, vocab


def save_graph(graph: np.ndarray, vocab: Vocab, path: Union[str, Path]) -> None:
  Path(path).write_bytes(encode_graph(graph, vocab))
  logger.info(f'Saved {len(vocab)}-symbol graph to {path}')


def load_graph(path: Union[str, Path]) -> tuple[np.ndarray, Vocab]:
  """
  Read a graph file.

  Returns:
      (R′, vocab)

  Raises:
      GraphFormatError: On header, size or checksum mismatch
  """
  return decode_graph(Path(path).read_bytes())
