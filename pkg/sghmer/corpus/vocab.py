"""
Symbol vocabulary.

ids 0, 1, 2 are reserved for padding, start and end of sequence. The vocab file
holds one token per line; the first three lines are the reserved names, so line
number equals id.
"""

import logging
from pathlib import Path
from typing import Iterable, Sequence, Union

logger = logging.getLogger(__name__)

PAD, SOS, EOS = '<pad>', '<sos>', '<eos>'
RESERVED = (PAD, SOS, EOS)
PAD_ID, SOS_ID, EOS_ID = 0, 1, 2


class Vocab:
  """Bijection between symbols and ids; immutable after construction."""

  def __init__(self, symbols: Sequence[str]):
    symbols = tuple(symbols)
    if symbols[:3] != RESERVED:
      raise ValueError(f'Vocab must start with the reserved symbols {RESERVED}, got {symbols[:3]}')
    if len(set(symbols)) != len(symbols):
      raise ValueError('Vocab symbols must be unique')
    self._symbols = symbols
    self._index = {s: i for i, s in enumerate(symbols)}

  @property
  def symbols(self) -> tuple[str, ...]:
    return self._symbols

  def __len__(self) -> int:
    return len(self._symbols)

  def __eq__(self, other) -> bool:
    return isinstance(other, Vocab) and self._symbols == other._symbols

  def __hash__(self) -> int:
    return hash(self._symbols)

  def __contains__(self, symbol: str) -> bool:
    return symbol in self._index

  def __repr__(self) -> str:
    return f'Vocab(size={len(self)})'

  def id_of(self, symbol: str) -> int:
    try:
      return self._index[symbol]
    except KeyError:
      raise ValueError(f'Symbol not in vocab: {symbol!r}') from None

  def symbol_of(self, idx: int) -> str:
    if not 0 <= idx < len(self._symbols):
      raise ValueError(f'Id {idx} out of vocab range [0, {len(self._symbols)})')
    return self._symbols[idx]

  def encode(self, tokens: Iterable[str]) -> list[int]:
    """Ids of real symbols; reserved names are rejected."""
    ids = []
    for token in tokens:
      if token in RESERVED:
        raise ValueError(f'Reserved symbol {token!r} cannot appear in a label')
      ids.append(self.id_of(token))
    return ids

  def decode(self, ids: Iterable[int]) -> list[str]:
    """Symbols up to the first eos, with pad and sos dropped."""
    tokens = []
    for idx in ids:
      idx = int(idx)
      if idx == EOS_ID:
        break
      if idx in (PAD_ID, SOS_ID):
        continue
      tokens.append(self.symbol_of(idx))
    return tokens

  def save(self, path: Union[str, Path]) -> None:
    Path(path).write_text(''.join(f'{s}\n' for s in self._symbols), encoding='utf-8')

  @classmethod
  def load(cls, path: Union[str, Path]) -> 'Vocab':
    lines = Path(path).read_text(encoding='utf-8').splitlines()
    return cls([line for line in lines if line])


def build_vocab(expressions: Iterable[Sequence[str]]) -> Vocab:
  """
  Vocab of every distinct token, sorted lexicographically after the reserved ids.

  Raises:
      ValueError: If the corpus is empty
  """
  seen: set[str] = set()
  count = 0
  for tokens in expressions:
    seen.update(tokens)
    count += 1
  if count == 0:
    raise ValueError('Cannot build a vocab from an empty corpus')
  seen.difference_update(RESERVED)
  logger.info(f'Built vocab: {len(seen)} symbols from {count} expressions')
  return Vocab(RESERVED + tuple(sorted(seen)))
