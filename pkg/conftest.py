"""Shared pytest fixtures."""

import os

import numpy as np
import pytest

from sghmer.tensor import profile


def pytest_collection_modifyitems(config, items):
  if os.environ.get('SGHMER_RUN_SLOW') == '1':
    return
  skip_slow = pytest.mark.skip(reason='set SGHMER_RUN_SLOW=1 to run acceptance runs')
  for item in items:
    if 'slow' in item.keywords:
      item.add_marker(skip_slow)


@pytest.fixture
def float64():
  """Run the test under the 64-bit numeric profile."""
  with profile('float64'):
    yield


@pytest.fixture
def float32():
  with profile('float32'):
    yield


@pytest.fixture
def rng():
  return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
  """A recognizer small enough for per-coordinate gradient checks."""
  from sghmer.models.experiment import DecoderConfig, EncoderConfig, ExperimentConfig, SamConfig

  return ExperimentConfig(
    encoder=EncoderConfig(growth_rate=2, layers_per_block=1, stem_channels=4, stem_kernel=3, out_channels=8),
    decoder=DecoderConfig(hidden=6, embedding=4, attention_dim=5, max_len=10),
    sam=SamConfig(hidden=6, dim=4),
  )


@pytest.fixture(scope='session')
def tiny_corpus():
  """Four rendered training samples and no validation split."""
  from sghmer.services.corpus_service import CorpusSplit, synthesize

  return CorpusSplit(train=synthesize(4, seed=7), val=[])
