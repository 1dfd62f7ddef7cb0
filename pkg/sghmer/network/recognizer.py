"""Encoder, decoder and (optionally) SAM branches over one ParamSet."""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from sghmer.corpus.batching import Batch
from sghmer.corpus.vocab import EOS_ID, SOS_ID
from sghmer.models.experiment import ExperimentConfig
from sghmer.network.decoder import AttentionDecoder
from sghmer.network.encoder import DenseEncoder, FeatureMap
from sghmer.network.layers import BatchNorm
from sghmer.network.sam import (
  SamBranch,
  SamLoss,
  SamModule,
  SamTargets,
  build_targets,
  gather_steps,
  project,
  sam_loss,
  total_loss,
)
from sghmer.tensor import ParamSet, Tensor, no_grad
from sghmer.tensor import ops

logger = logging.getLogger(__name__)


@dataclass
class TeacherForcedOutput:
  """logits B×T×N plus the per-step vectors SAM consumes."""

  logits: Tensor
  v_vis: list[Tensor]
  v_cls: list[Tensor]
  alphas: list[Tensor]


@dataclass
class Decoded:
  """Greedy output for one sample; eos is not included in ids."""

  ids: list[int] = field(default_factory=list)
  confidences: list[float] = field(default_factory=list)
  alphas: list[np.ndarray] = field(default_factory=list)


@dataclass
class LossBreakdown:
  """Training loss and its components; SAM terms are 0 when a branch is off."""

  total: Tensor
  symbol: float
  vis: float = 0.0
  cls: float = 0.0
  gap_vis: float = 0.0
  gap_cls: float = 0.0
  sam_empty: bool = False


class Recognizer:
  """
  Image-to-symbol-sequence model.

  Parameters are drawn from one generator in a fixed order: encoder, decoder,
  then SAM, so enabling SAM never changes the recognition weights at init.
  """

  def __init__(
    self,
    config: ExperimentConfig,
    vocab_size: int,
    with_sam: Optional[bool] = None,
    seed: Optional[int] = None,
  ):
    self.config = config
    self.vocab_size = vocab_size
    self.params = ParamSet()
    rng = np.random.default_rng(config.train.seed if seed is None else seed)
    self.encoder = DenseEncoder(self.params, config.encoder, rng)
    self.decoder = AttentionDecoder(self.params, config.decoder, vocab_size, config.encoder.out_channels, rng)
    use_sam = config.sam.enabled if with_sam is None else with_sam
    self.sam: Optional[SamModule] = None
    if use_sam:
      self.sam = SamModule(self.params, config.encoder.out_channels, config.decoder.hidden, config.sam, rng)
    logger.debug(f'Recognizer: {len(self.params)} tensors, sam={use_sam}')

  def recognition_params(self) -> ParamSet:
    """Every tensor read by encode/decode_greedy."""
    return self.params.without('sam.')

  def encode(self, images: np.ndarray, image_mask: np.ndarray, mode: str = 'eval') -> FeatureMap:
    return self.encoder(images, image_mask, mode)

  def forward_teacher_forced(self, batch: Batch, fmap: FeatureMap) -> TeacherForcedOutput:
    """Feed the ground-truth previous symbol (sos first) at every step."""
    prepared = self.decoder.prepare(fmap)
    state = self.decoder.initial_state(fmap)
    previous = np.full(batch.size, SOS_ID, dtype=np.int64)
    logits, v_vis, v_cls, alphas = [], [], [], []
    for t in range(batch.steps):
      out = self.decoder.step(previous, state, prepared)
      logits.append(out.logits)
      v_vis.append(out.v_vis)
      v_cls.append(out.v_cls)
      alphas.append(out.alpha)
      state = out.state
      previous = batch.targets[:, t]
    return TeacherForcedOutput(ops.stack(logits, axis=1), v_vis, v_cls, alphas)

  def decode_greedy(self, fmap: FeatureMap, max_len: Optional[int] = None) -> list[Decoded]:
    """
    Argmax decoding, ties to the lowest id, until eos or max_len symbols.

    Raises:
        ValueError: If max_len < 1
    """
    max_len = self.config.decoder.max_len if max_len is None else max_len
    if max_len < 1:
      raise ValueError(f'max_len must be at least 1, got {max_len}')
    with no_grad():
      prepared = self.decoder.prepare(fmap)
      state = self.decoder.initial_state(fmap)
      previous = np.full(fmap.batch, SOS_ID, dtype=np.int64)
      results = [Decoded() for _ in range(fmap.batch)]
      done = np.zeros(fmap.batch, dtype=bool)
      for _ in range(max_len):
        out = self.decoder.step(previous, state, prepared)
        probs = out.p_symbol.values
        previous = probs.argmax(axis=1)
        for i, symbol in enumerate(previous):
          if done[i]:
            continue
          results[i].alphas.append(np.array(out.alpha.values[i]))
          if symbol == EOS_ID:
            done[i] = True
            continue
          results[i].ids.append(int(symbol))
          results[i].confidences.append(float(probs[i, symbol]))
        if done.all():
          break
        state = out.state
    return results

  def recognize(self, batch: Batch, max_len: Optional[int] = None) -> list[Decoded]:
    """Eval-mode encode plus greedy decode of a batch."""
    with no_grad():
      fmap = self.encode(batch.images, batch.image_mask, 'eval')
    return self.decode_greedy(fmap, max_len)

  def batchnorms(self) -> list[BatchNorm]:
    layers = self.encoder.batchnorms()
    if self.sam is not None:
      layers += self.sam.vis.batchnorms() + self.sam.cls.batchnorms()
    return layers

  def losses(self, batch: Batch, graph: Optional[np.ndarray] = None, mode: str = 'train') -> LossBreakdown:
    """
    Teacher-forced training loss L_symbol + L_vis + L_cls.

    Args:
        batch: Padded images with targets
        graph: Symmetrized semantic graph; required when SAM is built
        mode: Batch-norm mode for the encoder and the SAM branches

    Raises:
        ValueError: If SAM is built without a graph, or a component is non-finite
    """
    fmap = self.encode(batch.images, batch.image_mask, mode)
    out = self.forward_teacher_forced(batch, fmap)
    ce = ops.cross_entropy(out.logits, batch.targets, batch.target_mask)
    if self.sam is None:
      return LossBreakdown(total=total_loss(ce), symbol=ce.item())
    if graph is None:
      raise ValueError('SAM losses need a semantic graph')

    targets = build_targets(batch.targets, batch.target_mask, graph)
    sam_config = self.config.sam
    breakdown = LossBreakdown(total=ce, symbol=ce.item())
    l_vis = l_cls = None
    if sam_config.enable_vis:
      result = self._branch_loss(self.sam.vis, out.v_vis, targets, mode)
      l_vis, breakdown.vis, breakdown.gap_vis = result.value, result.value.item(), result.gap
      breakdown.sam_empty = result.empty
    if sam_config.enable_cls:
      result = self._branch_loss(self.sam.cls, out.v_cls, targets, mode)
      l_cls, breakdown.cls, breakdown.gap_cls = result.value, result.value.item(), result.gap
      breakdown.sam_empty = result.empty
    breakdown.total = total_loss(ce, l_vis, l_cls)
    return breakdown

  def _branch_loss(self, branch: SamBranch, per_step: list[Tensor], targets: SamTargets, mode: str) -> SamLoss:
    if targets.pairs == 0:
      return sam_loss(Tensor(np.zeros((0, 1))), targets, self.config.sam.loss_reduction)
    projected = project(gather_steps(per_step, targets), branch, mode)
    return sam_loss(projected, targets, self.config.sam.loss_reduction)
