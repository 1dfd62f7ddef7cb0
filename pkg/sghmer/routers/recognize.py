"""
Recognition API router.

POST /api/recognize takes a multipart image upload and returns the recognized
symbols, their LaTeX string and per-symbol confidences.
"""

import logging
import time
from typing import Optional

from fastapi import APIRouter, Depends, File, HTTPException, Query, UploadFile
from fastapi.concurrency import run_in_threadpool

from sghmer.config import Settings, get_settings
from sghmer.models import RecognizeResponse
from sghmer.routers.dependencies import get_inference_service
from sghmer.services.inference_service import InferenceService
from sghmer.tensor import CheckpointError

logger = logging.getLogger(__name__)

router = APIRouter(prefix='/api', tags=['recognize'])


@router.post('/recognize', response_model=RecognizeResponse)
async def recognize(
  image: UploadFile = File(..., description='Expression image (PNG, PGM, JPEG ...)'),
  max_len: Optional[int] = Query(None, ge=1, description='Greedy decoding step limit'),
  settings: Settings = Depends(get_settings),
  service: InferenceService = Depends(get_inference_service),
):
  """
  Recognize one uploaded expression image.

  Raises:
      HTTPException: 503 without a configured checkpoint, 400 for an image that
          cannot be decoded or is too small, 500 for any other failure
  """
  if not settings.checkpoint:
    raise HTTPException(status_code=503, detail='No checkpoint configured; set SGHMER_CHECKPOINT')
  data = await image.read()
  name = image.filename or 'upload'
  start = time.perf_counter()
  try:
    recognition = await run_in_threadpool(service.recognize_bytes, settings.checkpoint, data, name, max_len)
  except CheckpointError as e:
    logger.error(f'Checkpoint {settings.checkpoint} failed to load: {e}')
    raise HTTPException(status_code=500, detail=f'Checkpoint failed to load: {e}')
  except ValueError as e:
    raise HTTPException(status_code=400, detail=str(e))
  except Exception as e:
    logger.error(f'Recognition of {name} failed: {e}')
    raise HTTPException(status_code=500, detail=f'Recognition failed: {e}')

  return RecognizeResponse(
    recognition=recognition,
    checkpoint=settings.checkpoint,
    elapsedMs=int((time.perf_counter() - start) * 1000),
  )
