"""
Pydantic models: experiment configuration and API payloads.
"""

from sghmer.models.api_models import (
  HealthResponse,
  Neighbor,
  NeighborsResponse,
  Recognition,
  RecognizeResponse,
)
from sghmer.models.experiment import (
  DataConfig,
  DecoderConfig,
  EncoderConfig,
  ExperimentConfig,
  NumericConfig,
  SamConfig,
  TrainConfig,
  list_profiles,
  load_experiment,
)

__all__ = [
  # Experiment configuration
  'DataConfig',
  'DecoderConfig',
  'EncoderConfig',
  'ExperimentConfig',
  'NumericConfig',
  'SamConfig',
  'TrainConfig',
  'list_profiles',
  'load_experiment',
  # API payloads
  'HealthResponse',
  'Neighbor',
  'NeighborsResponse',
  'Recognition',
  'RecognizeResponse',
]
