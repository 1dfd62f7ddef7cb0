"""Semantic graph API router."""

import logging

from fastapi import APIRouter, Depends, HTTPException, Query

from sghmer.config import Settings, get_settings
from sghmer.models import Neighbor, NeighborsResponse
from sghmer.semgraph import GraphFormatError
from sghmer.services.graph_service import graph_neighbors

logger = logging.getLogger(__name__)

router = APIRouter(prefix='/api/graph', tags=['graph'])


@router.get('/neighbors', response_model=NeighborsResponse)
async def get_neighbors(
  symbol: str = Query(..., min_length=1, description='Vocab symbol, e.g. \\frac'),
  k: int = Query(5, ge=1, le=100),
  settings: Settings = Depends(get_settings),
):
  """The k symbols most correlated with symbol in the configured graph."""
  if not settings.graph:
    raise HTTPException(status_code=503, detail='No semantic graph configured; set SGHMER_GRAPH')
  try:
    ranked = graph_neighbors(settings.graph, symbol, k)
  except GraphFormatError as e:
    logger.error(f'Graph {settings.graph} failed to load: {e}')
    raise HTTPException(status_code=500, detail=f'Graph failed to load: {e}')
  except ValueError as e:
    raise HTTPException(status_code=400, detail=str(e))
  except Exception as e:
    logger.error(f'Neighbor lookup for {symbol!r} failed: {e}')
    raise HTTPException(status_code=500, detail=f'Neighbor lookup failed: {e}')
  return NeighborsResponse(symbol=symbol, neighbors=[Neighbor(symbol=s, weight=w) for s, w in ranked])
