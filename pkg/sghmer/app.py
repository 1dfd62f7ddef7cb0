"""FastAPI application serving expression recognition."""

import logging
from contextlib import asynccontextmanager

from fastapi import Depends, FastAPI
from fastapi.middleware.cors import CORSMiddleware

from sghmer import __version__
from sghmer.config import Settings, configure_logging, get_settings
from sghmer.models import HealthResponse
from sghmer.routers import graph_router, recognize_router

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
  """Configure logging and report what is being served."""
  settings = app.dependency_overrides.get(get_settings, get_settings)()
  configure_logging(settings.log_level)
  logger.info(f'Serving checkpoint {settings.checkpoint or "(none)"} with graph {settings.graph or "(none)"}')
  yield


app = FastAPI(
  title='sghmer API',
  description='Handwritten mathematical expression recognition with semantic graph supervision',
  version=__version__,
  lifespan=lifespan,
)

app.add_middleware(
  CORSMiddleware,
  allow_origins=['http://localhost:3000', 'http://127.0.0.1:3000'],
  allow_credentials=True,
  allow_methods=['*'],
  allow_headers=['*'],
)

app.include_router(recognize_router)
app.include_router(graph_router)


@app.get('/health', response_model=HealthResponse)
async def health(settings: Settings = Depends(get_settings)):
  """Health check endpoint."""
  return HealthResponse(checkpoint=settings.checkpoint, graph=settings.graph)
