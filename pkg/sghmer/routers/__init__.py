"""HTTP routers over the inference and graph services."""

from sghmer.routers.graph import router as graph_router
from sghmer.routers.recognize import router as recognize_router

__all__ = ['graph_router', 'recognize_router']
