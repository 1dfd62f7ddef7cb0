"""
Coverage attention.

e = W_ω · tanh(W_q h′ + W_f F + W_α * coverage), softmax over valid positions.
W_α is a k×k convolution from the scalar coverage map into the attention
width; k = 1 makes it a per-position linear map.
"""

import numpy as np

from sghmer.network.layers import Conv2d, Linear
from sghmer.tensor import ParamSet, Tensor
from sghmer.tensor import ops


class CoverageAttention:
  def __init__(
    self,
    params: ParamSet,
    name: str,
    query_dim: int,
    channels: int,
    attention_dim: int,
    coverage_kernel: int,
    rng: np.random.Generator,
  ):
    self.query = Linear(params, f'{name}.query', query_dim, attention_dim, rng)
    self.feature = Linear(params, f'{name}.feature', channels, attention_dim, rng, bias=False)
    self.coverage = Conv2d(params, f'{name}.coverage', 1, attention_dim, coverage_kernel, rng)
    self.energy = Linear(params, f'{name}.energy', attention_dim, 1, rng, bias=False)
    self.attention_dim = attention_dim

  def project_features(self, features: Tensor) -> Tensor:
    """W_f F as B×H′×W′×A; constant over decoding steps."""
    return self.feature(ops.transpose(features, (0, 2, 3, 1)))

  def __call__(self, query: Tensor, projected: Tensor, coverage: Tensor, mask: np.ndarray) -> Tensor:
    """
    Attention weights for one step.

    Args:
        query: h′, B×D
        projected: project_features(F), B×H′×W′×A
        coverage: Sum of previous weights, B×H′×W′
        mask: Valid positions, B×H′×W′

    Returns:
        alpha, B×H′×W′, summing to 1 over valid positions and exactly 0 elsewhere

    Raises:
        ValueError: If a sample has no valid position
    """
    b, h, w = coverage.shape
    q = ops.reshape(self.query(query), (b, 1, 1, self.attention_dim))
    cov = self.coverage(ops.reshape(coverage, (b, 1, h, w)))
    hidden = ops.tanh(ops.add(ops.add(q, projected), ops.transpose(cov, (0, 2, 3, 1))))
    energies = ops.reshape(self.energy(hidden), (b, h * w))
    alpha = ops.masked_softmax(energies, np.asarray(mask).reshape(b, h * w))
    return ops.reshape(alpha, (b, h, w))
