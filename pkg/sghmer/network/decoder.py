"""
Coverage-attention GRU decoder.

One step, for previous symbol y and state (h, coverage):

    h′    = GRU₁(E(y), h)
    α     = attention(h′, F, coverage)           masked softmax over positions
    v_vis = Σ_positions α · F                     B×C
    h     = GRU₂(v_vis, h′)
    v_cls = W_e E(y) + W_h h + W_v v_vis          B×D, no bias
    p     = softmax(W_s v_cls + b_s)
    coverage ← coverage + α

The initial hidden state is tanh(W_init · masked mean of F + b_init).
"""

import logging
from dataclasses import dataclass

import numpy as np

from sghmer.models.experiment import DecoderConfig
from sghmer.network.attention import CoverageAttention
from sghmer.network.encoder import FeatureMap
from sghmer.network.layers import Embedding, GRUCell, Linear
from sghmer.tensor import ParamSet, Tensor
from sghmer.tensor import ops

logger = logging.getLogger(__name__)


@dataclass
class DecoderState:
  h: Tensor
  coverage: Tensor
  step: int = 0


@dataclass
class StepOutput:
  logits: Tensor
  v_vis: Tensor
  v_cls: Tensor
  alpha: Tensor
  state: DecoderState

  @property
  def p_symbol(self) -> Tensor:
    return ops.softmax(self.logits)


@dataclass
class PreparedFeatures:
  """Per-image quantities computed once and reused by every step."""

  fmap: FeatureMap
  projected: Tensor
  flat: Tensor


class AttentionDecoder:
  def __init__(
    self,
    params: ParamSet,
    config: DecoderConfig,
    vocab_size: int,
    channels: int,
    rng: np.random.Generator,
    name: str = 'decoder',
  ):
    self.vocab_size = vocab_size
    self.hidden = config.hidden
    self.embed = Embedding(params, f'{name}.embedding', vocab_size, config.embedding, rng)
    self.init = Linear(params, f'{name}.init', channels, config.hidden, rng)
    self.gru1 = GRUCell(params, f'{name}.gru1', config.embedding, config.hidden, rng)
    self.attention = CoverageAttention(
      params, f'{name}.attention', config.hidden, channels, config.attention_dim, config.coverage_kernel, rng
    )
    self.gru2 = GRUCell(params, f'{name}.gru2', channels, config.hidden, rng)
    self.w_e = Linear(params, f'{name}.cls.w_e', config.embedding, config.hidden, rng, bias=False)
    self.w_h = Linear(params, f'{name}.cls.w_h', config.hidden, config.hidden, rng, bias=False)
    self.w_v = Linear(params, f'{name}.cls.w_v', channels, config.hidden, rng, bias=False)
    self.w_s = Linear(params, f'{name}.out', config.hidden, vocab_size, rng)

  def prepare(self, fmap: FeatureMap) -> PreparedFeatures:
    b, c = fmap.batch, fmap.channels
    h, w = fmap.spatial
    flat = ops.transpose(ops.reshape(fmap.features, (b, c, h * w)), (0, 2, 1))
    return PreparedFeatures(fmap, self.attention.project_features(fmap.features), flat)

  def initial_state(self, fmap: FeatureMap) -> DecoderState:
    b, c = fmap.batch, fmap.channels
    h, w = fmap.spatial
    mask = fmap.mask.reshape(b, 1, h, w).astype(fmap.features.values.dtype)
    counts = mask.sum(axis=(2, 3)).reshape(b, 1)
    if np.any(counts == 0):
      raise ValueError('Feature map has a sample with zero valid positions')
    pooled = ops.div(ops.sum(ops.mul(fmap.features, Tensor(mask)), axis=(2, 3)), Tensor(counts))
    h0 = ops.tanh(self.init(pooled))
    return DecoderState(h=h0, coverage=Tensor(np.zeros((b, h, w))), step=0)

  def step(self, y_prev: np.ndarray, state: DecoderState, prepared: PreparedFeatures) -> StepOutput:
    """
    One decoding step.

    Args:
        y_prev: B previous symbol ids
        state: Hidden state and coverage after state.step steps
        prepared: Output of prepare()

    Returns:
        StepOutput carrying logits, v_vis, v_cls, alpha and the next state

    Raises:
        ValueError: If an id is outside the vocab
    """
    y_prev = np.asarray(y_prev, dtype=np.int64)
    if y_prev.size and (y_prev.min() < 0 or y_prev.max() >= self.vocab_size):
      raise ValueError(f'Previous symbol id out of vocab range [0, {self.vocab_size})')
    b = y_prev.shape[0]
    h, w = prepared.fmap.spatial

    embedded = self.embed(y_prev)
    h_prime = self.gru1(embedded, state.h)
    alpha = self.attention(h_prime, prepared.projected, state.coverage, prepared.fmap.mask)
    v_vis = ops.reshape(ops.matmul(ops.reshape(alpha, (b, 1, h * w)), prepared.flat), (b, -1))
    h_next = self.gru2(v_vis, h_prime)
    v_cls = ops.add(ops.add(self.w_e(embedded), self.w_h(h_next)), self.w_v(v_vis))
    logits = self.w_s(v_cls)
    coverage = ops.add(state.coverage, alpha)
    return StepOutput(logits, v_vis, v_cls, alpha, DecoderState(h_next, coverage, state.step + 1))
