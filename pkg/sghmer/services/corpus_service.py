"""
Corpus assembly: synthetic rendering and manifest loading.

Synthetic sample i of seed s draws its expression and jitter from
default_rng([s, i]) alone, so the output does not depend on the worker count.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from sghmer.corpus import (
  ManifestEntry,
  Sample,
  load_manifest_samples,
  random_expression,
  render_synthetic,
  write_manifest,
  write_pgm,
)
from sghmer.models.experiment import DataConfig

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.tsv'


def render_one(seed: int, index: int) -> Sample:
  rng = np.random.default_rng([seed, index])
  tokens = random_expression(rng)
  return render_synthetic(tokens, seed=int(rng.integers(2**31)), name=f'synth_{seed}_{index:06d}')


def _render_job(job: tuple[int, int]) -> Sample:
  return render_one(*job)


def synthesize(count: int, seed: int, workers: int = 1, start: int = 0) -> list[Sample]:
  """
  Render count synthetic samples, indices start..start+count-1, in index order.

  Args:
      count: Number of samples
      seed: Corpus seed
      workers: Worker processes; 1 renders in-process
      start: First sample index
  """
  jobs = [(seed, start + i) for i in range(count)]
  if workers <= 1 or count < 2:
    return [_render_job(job) for job in jobs]
  with ProcessPoolExecutor(max_workers=workers) as pool:
    return list(pool.map(_render_job, jobs, chunksize=max(1, count // (4 * workers))))


def write_synthetic(out_dir: Union[str, Path], count: int, seed: int, workers: int = 1) -> Path:
  """
  Write count PGM images plus a manifest into out_dir.

  Returns:
      Path of the manifest
  """
  out = Path(out_dir)
  (out / 'images').mkdir(parents=True, exist_ok=True)
  entries = []
  for sample in synthesize(count, seed, workers):
    relative = f'images/{sample.name}.pgm'
    write_pgm(out / relative, sample.image)
    entries.append(ManifestEntry(relative, sample.tokens))
  manifest = out / MANIFEST_NAME
  write_manifest(manifest, entries)
  logger.info(f'Wrote {count} synthetic samples (seed {seed}) to {out}')
  return manifest


@dataclass
class CorpusSplit:
  train: list[Sample] = field(default_factory=list)
  val: list[Sample] = field(default_factory=list)

  @property
  def validation(self) -> list[Sample]:
    """Validation samples, or the training samples when no validation data exists."""
    return self.val or self.train


class CorpusService:
  """Resolve the train/val samples named by a DataConfig."""

  def __init__(self, config: DataConfig, workers: int = 1):
    self.config = config
    self.workers = workers

  def load(self) -> CorpusSplit:
    """
    Load manifests, falling back to synthetic samples where a manifest is unset.

    Raises:
        ValueError: If no training sample results
    """
    config = self.config
    if config.train_manifest:
      train = load_manifest_samples(config.train_manifest)
    else:
      train = synthesize(config.synth_train, config.synth_seed, self.workers)
    if config.val_manifest:
      val = load_manifest_samples(config.val_manifest)
    else:
      val = synthesize(config.synth_val, config.synth_seed, self.workers, start=config.synth_train)
    if not train:
      raise ValueError('No training samples: set data.train_manifest or data.synth_train')
    logger.info(f'Corpus: {len(train)} train / {len(val)} val samples')
    return CorpusSplit(train, val)
