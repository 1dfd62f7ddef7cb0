"""
Expression recognition rate (ExpRate) and evaluation reports.

A prediction counts only when its token sequence equals the reference exactly,
after stripping eos and padding.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import pandas as pd
from rich.console import Console
from rich.table import Table

from sghmer.corpus import EOS_ID, PAD_ID, Sample, Vocab, make_image_batch
from sghmer.corpus.vocab import EOS, PAD
from sghmer.network import Decoded, Recognizer

logger = logging.getLogger(__name__)

DEFAULT_BOUNDS = (5, 12)
BUCKETS = ('easy', 'moderate', 'hard')


def clean(sequence: Sequence) -> tuple:
  """Cut at the first eos and drop padding; works on symbol names or ids."""
  out = []
  for item in sequence:
    if item in (EOS, EOS_ID):
      break
    if item in (PAD, PAD_ID):
      continue
    out.append(item)
  return tuple(out)


def exprate(predictions: Sequence[Sequence], references: Sequence[Sequence]) -> float:
  """
  Percentage of predictions that exactly match their reference.

  Raises:
      ValueError: On an empty set or unequal counts
  """
  if len(predictions) != len(references):
    raise ValueError(
      f'exprate needs equal counts, got {len(predictions)} predictions and {len(references)} references'
    )
  if not references:
    raise ValueError('exprate of an empty set')
  hits = sum(clean(p) == clean(r) for p, r in zip(predictions, references))
  return 100.0 * hits / len(references)


def length_bucket(length: int, bounds: tuple[int, int] = DEFAULT_BOUNDS) -> str:
  if length <= bounds[0]:
    return BUCKETS[0]
  if length <= bounds[1]:
    return BUCKETS[1]
  return BUCKETS[2]


def exprate_by_length(
  predictions: Sequence[Sequence],
  references: Sequence[Sequence],
  bounds: tuple[int, int] = DEFAULT_BOUNDS,
) -> pd.DataFrame:
  """
  ExpRate per reference-length bucket.

  Args:
      predictions: Predicted token sequences
      references: Reference token sequences
      bounds: Inclusive upper lengths of the easy and moderate buckets

  Returns:
      DataFrame with columns bucket, count, exprate; empty buckets have NaN exprate
  """
  if len(predictions) != len(references):
    raise ValueError(
      f'exprate needs equal counts, got {len(predictions)} predictions and {len(references)} references'
    )
  rows = pd.DataFrame({
    'bucket': [length_bucket(len(clean(r)), bounds) for r in references],
    'correct': [clean(p) == clean(r) for p, r in zip(predictions, references)],
  })
  grouped = rows.groupby('bucket')['correct'].agg(['count', 'mean']).reindex(list(BUCKETS))
  return pd.DataFrame({
    'bucket': list(BUCKETS),
    'count': grouped['count'].fillna(0).astype(int).to_numpy(),
    'exprate': (100.0 * grouped['mean']).to_numpy(),
  })


@dataclass
class EvaluationReport:
  exprate: float
  samples: pd.DataFrame
  buckets: pd.DataFrame

  def write_csv(self, path: Union[str, Path]) -> None:
    self.samples.to_csv(path, index=False)


class EvaluationService:
  """Greedy-decode samples with a recognizer and score them."""

  def __init__(
    self,
    recognizer: Recognizer,
    vocab: Vocab,
    batch_size: int = 8,
    max_len: Optional[int] = None,
  ):
    self.recognizer = recognizer
    self.vocab = vocab
    self.batch_size = batch_size
    self.max_len = max_len

  def decode(self, samples: Sequence[Sample]) -> list[Decoded]:
    results: list[Decoded] = []
    for start in range(0, len(samples), self.batch_size):
      chunk = samples[start : start + self.batch_size]
      batch = make_image_batch([s.image for s in chunk], [s.name for s in chunk])
      results.extend(self.recognizer.recognize(batch, self.max_len))
    return results

  def predict(self, samples: Sequence[Sample]) -> list[list[str]]:
    return [self.vocab.decode(d.ids) for d in self.decode(samples)]

  def evaluate(self, samples: Sequence[Sample], bounds: tuple[int, int] = DEFAULT_BOUNDS) -> EvaluationReport:
    """
    Score samples against their labels.

    Raises:
        ValueError: If samples is empty
    """
    if not samples:
      raise ValueError('Cannot evaluate an empty sample set')
    predictions = self.predict(samples)
    references = [list(s.tokens) for s in samples]
    table = pd.DataFrame({
      'name': [s.name for s in samples],
      'reference': [' '.join(r) for r in references],
      'prediction': [' '.join(p) for p in predictions],
      'length': [len(r) for r in references],
      'correct': [clean(p) == clean(r) for p, r in zip(predictions, references)],
    })
    rate = exprate(predictions, references)
    logger.info(f'[EVAL] ExpRate {rate:.2f}% on {len(samples)} samples')
    return EvaluationReport(rate, table, exprate_by_length(predictions, references, bounds))


def print_buckets(report: EvaluationReport, console: Optional[Console] = None) -> None:
  """Render the per-length ExpRate table."""
  table = Table(title=f'ExpRate by expression length (overall {report.exprate:.2f}%)')
  table.add_column('bucket')
  table.add_column('samples', justify='right')
  table.add_column('ExpRate', justify='right')
  buckets = report.buckets
  for bucket, count, rate in zip(buckets['bucket'], buckets['count'], buckets['exprate']):
    table.add_row(bucket, str(count), '-' if pd.isna(rate) else f'{rate:.2f}')
  (console or Console()).print(table)
