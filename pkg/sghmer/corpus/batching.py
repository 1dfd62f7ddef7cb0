"""Samples and padded, masked batches."""

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from sghmer.corpus.vocab import EOS_ID, PAD_ID, Vocab

logger = logging.getLogger(__name__)

MIN_EXTENT = 32
PAD_MULTIPLE = 16
SOURCES = ('synthetic', 'manifest')


@dataclass(frozen=True, eq=False)
class Sample:
  """
  One labelled expression image.

  The image is H×W in [0, 1] with bright ink on a dark background; tokens are the
  label symbols without sos/eos.
  """

  name: str
  image: np.ndarray
  tokens: tuple[str, ...]
  source: str = 'synthetic'

  def __post_init__(self):
    if self.image.ndim != 2:
      raise ValueError(f'Sample {self.name}: image must be 2-D, got shape {self.image.shape}')
    h, w = self.image.shape
    if h < MIN_EXTENT or w < MIN_EXTENT:
      raise ValueError(f'Sample {self.name}: image {h}x{w} is smaller than {MIN_EXTENT}x{MIN_EXTENT}')
    if not self.tokens:
      raise ValueError(f'Sample {self.name}: empty label')
    if self.source not in SOURCES:
      raise ValueError(f'Sample {self.name}: unknown source {self.source!r}')


@dataclass
class Batch:
  """
  Padded images and targets.

  Attributes:
      images: B×1×H×W, zero outside the original pixels
      image_mask: B×H×W, 1 exactly on original pixels
      targets: B×(T+1) ids, label then eos then pad
      target_mask: B×(T+1), 1 on label tokens and the eos position
      names: Sample names in batch order
  """

  images: np.ndarray
  image_mask: np.ndarray
  targets: np.ndarray
  target_mask: np.ndarray
  names: list[str] = field(default_factory=list)

  @property
  def size(self) -> int:
    return self.images.shape[0]

  @property
  def steps(self) -> int:
    return self.targets.shape[1]

  def select(self, indices: Sequence[int]) -> 'Batch':
    """Sub-batch (or permutation) of the given rows."""
    idx = np.asarray(indices, dtype=np.int64)
    return Batch(
      images=self.images[idx],
      image_mask=self.image_mask[idx],
      targets=self.targets[idx],
      target_mask=self.target_mask[idx],
      names=[self.names[i] for i in idx],
    )


def _round_up(n: int, multiple: int) -> int:
  return int(math.ceil(n / multiple)) * multiple


def make_batch(samples: Sequence[Sample], vocab: Vocab) -> Batch:
  """
  Pad samples to a common multiple-of-16 canvas and a common target length.

  Args:
      samples: At least one sample
      vocab: Vocabulary used to encode the labels

  Returns:
      Batch satisfying the mask invariants

  Raises:
      ValueError: On an empty sample list or a label symbol missing from vocab
  """
  if not samples:
    raise ValueError('make_batch needs at least one sample')

  height = _round_up(max(s.image.shape[0] for s in samples), PAD_MULTIPLE)
  width = _round_up(max(s.image.shape[1] for s in samples), PAD_MULTIPLE)
  encoded = [vocab.encode(s.tokens) for s in samples]
  steps = max(len(ids) for ids in encoded) + 1

  b = len(samples)
  images = np.zeros((b, 1, height, width), dtype=np.float32)
  image_mask = np.zeros((b, height, width), dtype=np.float32)
  targets = np.full((b, steps), PAD_ID, dtype=np.int64)
  target_mask = np.zeros((b, steps), dtype=np.float32)

  for row, (sample, ids) in enumerate(zip(samples, encoded)):
    h, w = sample.image.shape
    images[row, 0, :h, :w] = sample.image
    image_mask[row, :h, :w] = 1.0
    targets[row, : len(ids)] = ids
    targets[row, len(ids)] = EOS_ID
    target_mask[row, : len(ids) + 1] = 1.0

  return Batch(images, image_mask, targets, target_mask, [s.name for s in samples])


def make_image_batch(images: Sequence[np.ndarray], names: Sequence[str] = ()) -> Batch:
  """
  Pad unlabeled images for inference; every target row is a lone eos with zero mask.

  Raises:
      ValueError: On an empty list or an image that is not 2-D and at least 32x32
  """
  if not images:
    raise ValueError('make_image_batch needs at least one image')
  for image in images:
    if image.ndim != 2 or min(image.shape) < MIN_EXTENT:
      raise ValueError(f'image {image.shape} is not a 2-D image of at least {MIN_EXTENT}x{MIN_EXTENT}')
  height = _round_up(max(image.shape[0] for image in images), PAD_MULTIPLE)
  width = _round_up(max(image.shape[1] for image in images), PAD_MULTIPLE)
  b = len(images)
  padded = np.zeros((b, 1, height, width), dtype=np.float32)
  image_mask = np.zeros((b, height, width), dtype=np.float32)
  for row, image in enumerate(images):
    h, w = image.shape
    padded[row, 0, :h, :w] = image
    image_mask[row, :h, :w] = 1.0
  return Batch(
    padded,
    image_mask,
    np.full((b, 1), EOS_ID, dtype=np.int64),
    np.zeros((b, 1), dtype=np.float32),
    list(names) or [f'image{i}' for i in range(b)],
  )
