"""
Request/response models for the HTTP API and report rows.
"""

from typing import Optional

from pydantic import BaseModel, Field


class Recognition(BaseModel):
  """One recognized expression."""

  name: str = Field(..., description='Sample or upload name')
  tokens: list[str] = Field(..., description='Recognized symbols in order, eos excluded')
  latex: str = Field(..., description='Tokens joined by single spaces')
  confidences: list[float] = Field(..., description='Max softmax probability at each emitted step')
  symbolCount: int = Field(..., description='Number of recognized symbols')


class RecognizeResponse(BaseModel):
  """Response of POST /api/recognize."""

  recognition: Recognition
  checkpoint: str = Field(..., description='Checkpoint that produced the recognition')
  elapsedMs: int = Field(..., description='Inference time in milliseconds')


class Neighbor(BaseModel):
  symbol: str
  weight: float = Field(..., description="Symmetrized co-occurrence probability R'")


class NeighborsResponse(BaseModel):
  """Response of GET /api/graph/neighbors."""

  symbol: str
  neighbors: list[Neighbor]


class HealthResponse(BaseModel):
  status: str = 'healthy'
  checkpoint: Optional[str] = Field(None, description='Configured checkpoint, if any')
  graph: Optional[str] = Field(None, description='Configured semantic graph, if any')
