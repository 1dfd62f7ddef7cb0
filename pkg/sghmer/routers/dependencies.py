"""Shared FastAPI dependencies."""

from functools import lru_cache

from fastapi import Depends

from sghmer.config import Settings, get_settings
from sghmer.services.inference_service import InferenceService


@lru_cache
def _inference_service(cache_size: int) -> InferenceService:
  return InferenceService(cache_size)


def get_inference_service(settings: Settings = Depends(get_settings)) -> InferenceService:
  """Dependency injection for the process-wide inference service."""
  return _inference_service(settings.checkpoint_cache_size)
