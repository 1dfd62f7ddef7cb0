"""
Process settings.

Loaded from environment variables with the SGHMER_ prefix and from `.env` /
`.env.local` files. Experiment settings (network sizes, optimizer constants,
data sources) live in `sghmer.models.experiment` instead.
"""

import logging
import sys
from functools import lru_cache
from typing import Optional

from pydantic import field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(levelname)s:%(name)s:%(message)s'


class Settings(BaseSettings):
  """Process-level settings."""

  model_config = SettingsConfigDict(
    env_prefix='SGHMER_',
    env_file=('.env', '.env.local'),
    case_sensitive=False,
    extra='ignore',
  )

  log_level: str = 'INFO'

  # Synthetic rendering
  render_workers: int = 1

  # Serving
  checkpoint_cache_size: int = 4
  checkpoint: Optional[str] = None
  graph: Optional[str] = None

  # Experiment tracking
  mlflow_tracking_uri: Optional[str] = None

  @field_validator('log_level')
  @classmethod
  def validate_log_level(cls, v: str) -> str:
    level = v.strip().upper()
    if level not in logging.getLevelNamesMapping():
      raise ValueError(f'SGHMER_LOG_LEVEL must be a logging level name, got: {v}')
    return level

  @field_validator('render_workers', 'checkpoint_cache_size')
  @classmethod
  def validate_positive_integers(cls, v: int, info) -> int:
    if v <= 0:
      raise ValueError(f'SGHMER_{info.field_name.upper()} must be positive, got: {v}')
    return v

  @field_validator('checkpoint', 'graph', 'mlflow_tracking_uri')
  @classmethod
  def validate_optional_paths(cls, v: Optional[str], info) -> Optional[str]:
    if v is not None and not v.strip():
      raise ValueError(f'SGHMER_{info.field_name.upper()} is set but empty; unset it or give a value')
    return v.strip() if v is not None else None

  @model_validator(mode='after')
  def log_settings(self):
    logger.debug('Settings loaded:')
    logger.debug(f'  Log level: {self.log_level}')
    logger.debug(f'  Render workers: {self.render_workers}')
    logger.debug(f'  Checkpoint: {self.checkpoint} (cache {self.checkpoint_cache_size})')
    logger.debug(f'  Graph: {self.graph}')
    logger.debug(f'  MLflow: {self.mlflow_tracking_uri or "off"}')
    return self


def load_settings() -> Settings:
  """
  Load and validate settings.

  Returns:
      Settings: Validated settings instance

  Raises:
      SystemExit: If configuration is invalid
  """
  try:
    return Settings()
  except Exception as e:
    logger.error('=' * 60)
    logger.error('CONFIGURATION ERROR')
    logger.error('=' * 60)
    logger.error(f'{e}')
    logger.error('')
    logger.error('Check your .env / .env.local files and SGHMER_* environment variables.')
    logger.error('')
    logger.error('Recognized variables:')
    for name in Settings.model_fields:
      logger.error(f'  - SGHMER_{name.upper()}')
    logger.error('=' * 60)
    sys.exit(1)


@lru_cache
def get_settings() -> Settings:
  """Process-wide settings, loaded once."""
  return load_settings()


def configure_logging(level: Optional[str] = None) -> None:
  """Route log records to stderr and set the package log level."""
  logging.basicConfig(level=logging.WARNING, format=LOG_FORMAT)
  logging.getLogger('sghmer').setLevel(level or get_settings().log_level)
