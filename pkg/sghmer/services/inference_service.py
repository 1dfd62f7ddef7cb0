"""
Inference over saved checkpoints: recognition and attention dumps.
"""

import logging
import threading
import time
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from cachetools import LRUCache

from sghmer.corpus import Vocab, decode_image_bytes, detokenize, make_image_batch, normalize_ink, write_pgm
from sghmer.models.api_models import Recognition
from sghmer.models.experiment import DOWNSAMPLE
from sghmer.network import Decoded, Recognizer, load_recognizer

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def to_recognition(name: str, decoded: Decoded, vocab: Vocab) -> Recognition:
  tokens = vocab.decode(decoded.ids)
  return Recognition(
    name=name,
    tokens=tokens,
    latex=detokenize(tokens) if tokens else '',
    confidences=[round(c, 6) for c in decoded.confidences],
    symbolCount=len(tokens),
  )


def attention_image(alpha: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
  """
  Upsample an H'×W' attention map to the input grid by nearest neighbour.

  Returns:
      Grid in [0, 1], alpha / max(alpha), cropped to shape
  """
  grid = np.kron(alpha, np.ones((DOWNSAMPLE, DOWNSAMPLE)))[: shape[0], : shape[1]]
  peak = float(grid.max())
  return grid / peak if peak > 0 else grid


class InferenceService:
  """Recognize images with checkpoints held in an LRU cache."""

  def __init__(self, cache_size: int = 4):
    self._cache: LRUCache = LRUCache(maxsize=cache_size)
    self._lock = threading.Lock()

  def load(self, checkpoint: PathLike) -> tuple[Recognizer, Vocab]:
    """
    Recognizer and vocab of a checkpoint, loaded once per file version.

    Raises:
        FileNotFoundError: If the checkpoint does not exist
        CheckpointError: If the checkpoint is corrupt
    """
    path = Path(checkpoint).resolve()
    key = (str(path), path.stat().st_mtime_ns)
    with self._lock:
      cached = self._cache.get(key)
      if cached is not None:
        return cached
      logger.info(f'[INFER] loading checkpoint {path}')
      loaded = load_recognizer(path)
      self._cache[key] = loaded
      return loaded

  def recognize_images(
    self,
    checkpoint: PathLike,
    images: Sequence[np.ndarray],
    names: Sequence[str] = (),
    max_len: Optional[int] = None,
    batch_size: int = 8,
  ) -> list[Recognition]:
    """
    Recognize grayscale [0, 1] images with bright ink on a dark background.

    Raises:
        ValueError: If an image is smaller than 32×32
    """
    recognizer, vocab = self.load(checkpoint)
    names = list(names) or [f'image{i}' for i in range(len(images))]
    results = []
    for start in range(0, len(images), batch_size):
      batch = make_image_batch(images[start : start + batch_size], names[start : start + batch_size])
      for name, decoded in zip(batch.names, recognizer.recognize(batch, max_len)):
        results.append(to_recognition(name, decoded, vocab))
    return results

  def recognize_bytes(
    self,
    checkpoint: PathLike,
    data: bytes,
    name: str = 'upload',
    max_len: Optional[int] = None,
  ) -> Recognition:
    """
    Recognize an encoded image (PNG, PGM, JPEG ...); dark-on-light scans are inverted.

    Raises:
        ValueError: If the bytes cannot be decoded or the image is too small
    """
    start = time.perf_counter()
    image = normalize_ink(decode_image_bytes(data))
    (recognition,) = self.recognize_images(checkpoint, [image], [name], max_len)
    elapsed = (time.perf_counter() - start) * 1000
    logger.info(f'[INFER] {name}: {recognition.latex!r} in {elapsed:.0f}ms')
    return recognition

  def dump_attention(
    self,
    checkpoint: PathLike,
    image: np.ndarray,
    out_dir: PathLike,
    name: str,
    max_len: Optional[int] = None,
  ) -> tuple[Recognition, list[Path]]:
    """
    Write one heatmap PGM per decoding step as `<name>_<t>.pgm`.

    The last map belongs to the step that emitted eos, when one was emitted.
    """
    recognizer, vocab = self.load(checkpoint)
    batch = make_image_batch([image], [name])
    (decoded,) = recognizer.recognize(batch, max_len)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for t, alpha in enumerate(decoded.alphas):
      path = out / f'{name}_{t}.pgm'
      write_pgm(path, attention_image(alpha, image.shape))
      paths.append(path)
    logger.info(f'[INFER] wrote {len(paths)} attention maps for {name} to {out}')
    return to_recognition(name, decoded, vocab), paths
