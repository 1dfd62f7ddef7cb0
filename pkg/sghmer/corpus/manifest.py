"""
Manifest and image I/O.

A manifest lists one sample per line as "relative/image/path<TAB>space-delimited
tokens". Paths are resolved against the manifest's directory. Images are read
with Pillow in any grayscale-convertible format; synthetic output is PGM (P5).
"""

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from sghmer.corpus.batching import MIN_EXTENT, Sample

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass(frozen=True)
class ManifestEntry:
  path: str
  tokens: tuple[str, ...]


def read_manifest(path: PathLike) -> list[ManifestEntry]:
  """
  Parse a manifest file.

  Raises:
      ValueError: On a line without a tab or without tokens, naming the line number
  """
  entries = []
  for number, line in enumerate(Path(path).read_text(encoding='utf-8').splitlines(), start=1):
    if not line.strip():
      continue
    if '\t' not in line:
      raise ValueError(f'{path}:{number}: expected "<image path>\\t<tokens>"')
    image_path, label = line.split('\t', 1)
    tokens = tuple(label.split())
    if not image_path or not tokens:
      raise ValueError(f'{path}:{number}: empty image path or label')
    entries.append(ManifestEntry(image_path, tokens))
  logger.debug(f'Read {len(entries)} manifest entries from {path}')
  return entries


def write_manifest(path: PathLike, entries: Iterable[ManifestEntry]) -> None:
  lines = [f'{e.path}\t{" ".join(e.tokens)}\n' for e in entries]
  Path(path).write_text(''.join(lines), encoding='utf-8')


def read_image(path: PathLike) -> np.ndarray:
  """Grayscale image as float32 in [0, 1]."""
  try:
    with Image.open(path) as img:
      return np.asarray(img.convert('L'), dtype=np.float32) / 255.0
  except (UnidentifiedImageError, OSError) as e:
    raise ValueError(f'Cannot decode image {path}: {e}') from e


def decode_image_bytes(data: bytes) -> np.ndarray:
  """Grayscale image from encoded bytes (PNG, PGM, JPEG ...), float32 in [0, 1]."""
  try:
    with Image.open(io.BytesIO(data)) as img:
      return np.asarray(img.convert('L'), dtype=np.float32) / 255.0
  except (UnidentifiedImageError, OSError) as e:
    raise ValueError(f'Cannot decode image: {e}') from e


def normalize_ink(image: np.ndarray) -> np.ndarray:
  """Invert dark-on-light scans so that ink is bright and background is 0."""
  return 1.0 - image if float(image.mean()) > 0.5 else image


def read_pgm(path: PathLike) -> np.ndarray:
  """Binary PGM (P5, maxval 255) as float32 in [0, 1]."""
  return read_image(path)


def write_pgm(path: PathLike, grid: np.ndarray) -> None:
  """Write a [0, 1] grid as binary PGM (P5, maxval 255)."""
  pixels = np.clip(np.rint(np.asarray(grid, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
  Image.fromarray(pixels).save(path, format='PPM')


def load_sample(root: PathLike, entry: ManifestEntry) -> Sample:
  """
  Load a manifest entry as a Sample.

  Args:
      root: Directory the entry path is relative to
      entry: Manifest entry

  Returns:
      Sample with ink normalized to bright-on-dark

  Raises:
      ValueError: If the image cannot be decoded or is smaller than 32×32
  """
  image = normalize_ink(read_image(Path(root) / entry.path))
  if image.shape[0] < MIN_EXTENT or image.shape[1] < MIN_EXTENT:
    raise ValueError(f'Image {entry.path} is {image.shape[0]}x{image.shape[1]}, below {MIN_EXTENT}x{MIN_EXTENT}')
  return Sample(name=Path(entry.path).stem, image=image, tokens=entry.tokens, source='manifest')


def load_manifest_samples(path: PathLike) -> list[Sample]:
  """Every sample of a manifest, resolved against the manifest's directory."""
  root = Path(path).parent
  return [load_sample(root, entry) for entry in read_manifest(path)]
