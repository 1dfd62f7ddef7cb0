"""
Adadelta with a warmup/cosine learning-rate multiplier and global-norm clipping.

Per parameter p with gradient g:

    E[g²]  ← ρ E[g²] + (1 − ρ) g²
    Δ      = −sqrt(E[Δx²] + ε) / sqrt(E[g²] + ε) · g
    E[Δx²] ← ρ E[Δx²] + (1 − ρ) Δ²
    p      ← p + lr_mult · Δ
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from sghmer.tensor import ParamSet, Tensor

logger = logging.getLogger(__name__)

EG2_PREFIX = 'optim.eg2.'
EDX2_PREFIX = 'optim.edx2.'


@dataclass
class OptState:
  """Accumulators E[g²] and E[Δx²] per trainable parameter name."""

  eg2: dict[str, np.ndarray] = field(default_factory=dict)
  edx2: dict[str, np.ndarray] = field(default_factory=dict)

  @classmethod
  def zeros(cls, params: ParamSet) -> 'OptState':
    state = cls()
    for name, tensor in params.trainable():
      state.eg2[name] = np.zeros_like(tensor.values)
      state.edx2[name] = np.zeros_like(tensor.values)
    return state

  def to_records(self) -> ParamSet:
    """Checkpoint records `optim.eg2.<name>` / `optim.edx2.<name>`."""
    records = ParamSet()
    for name in self.eg2:
      records.add(f'{EG2_PREFIX}{name}', Tensor(self.eg2[name]))
      records.add(f'{EDX2_PREFIX}{name}', Tensor(self.edx2[name]))
    return records

  def load_records(self, records: ParamSet) -> None:
    """
    Restore accumulators saved by to_records.

    Raises:
        ValueError: If a record is missing or has the wrong shape
    """
    for name in self.eg2:
      for prefix, target in ((EG2_PREFIX, self.eg2), (EDX2_PREFIX, self.edx2)):
        key = f'{prefix}{name}'
        if key not in records:
          raise ValueError(f'Optimizer record {key} missing from checkpoint')
        values = records[key].values
        if values.shape != target[name].shape:
          raise ValueError(f'Optimizer record {key} shape {values.shape} does not match {target[name].shape}')
        target[name] = np.array(values, dtype=target[name].dtype)


def adadelta_step(
  params: ParamSet,
  state: OptState,
  lr_mult: float,
  rho: float = 0.95,
  eps: float = 1e-6,
) -> bool:
  """
  Apply one Adadelta update from the gradients stored on params.

  Args:
      params: Parameters whose .grad holds the current gradient
      state: Accumulators, updated in place
      lr_mult: Learning-rate multiplier in [0, 1]
      rho: Decay of both running averages
      eps: Conditioning constant

  Returns:
      False when a gradient is non-finite; parameters and accumulators are then untouched
  """
  trainable = params.trainable()
  for name, tensor in trainable:
    if not np.all(np.isfinite(tensor.grad)):
      logger.warning(f'[TRAIN_SKIP] non-finite gradient in {name}; update skipped')
      return False

  for name, tensor in trainable:
    g = tensor.grad
    eg2 = rho * state.eg2[name] + (1 - rho) * g * g
    delta = -np.sqrt(state.edx2[name] + eps) / np.sqrt(eg2 + eps) * g
    state.eg2[name] = eg2
    state.edx2[name] = rho * state.edx2[name] + (1 - rho) * delta * delta
    tensor.values += (lr_mult * delta).astype(tensor.values.dtype)
  return True


def lr_schedule(global_step: int, steps_per_epoch: int, total_epochs: int) -> float:
  """
  Learning-rate multiplier for the update numbered global_step (0-based).

  Rises linearly from 0 to 1 over the first epoch, then follows a half cosine
  down to 0 at the final step.

  Raises:
      ValueError: If steps_per_epoch or total_epochs is not positive
  """
  if steps_per_epoch <= 0 or total_epochs <= 0:
    raise ValueError(f'lr_schedule needs positive sizes, got {steps_per_epoch} steps x {total_epochs} epochs')
  step = max(0, global_step)
  if step <= steps_per_epoch:
    return step / steps_per_epoch
  decay_steps = steps_per_epoch * (total_epochs - 1)
  if decay_steps == 0:
    return 0.0
  progress = min(1.0, (step - steps_per_epoch) / decay_steps)
  return 0.5 * (1.0 + math.cos(math.pi * progress))


def clip_grad_norm(params: ParamSet, max_norm: float) -> float:
  """
  Rescale every gradient so the global norm is at most max_norm.

  Returns:
      The global norm before clipping
  """
  norm = params.global_grad_norm()
  if math.isfinite(norm) and norm > max_norm:
    factor = max_norm / norm
    for _, tensor in params.trainable():
      tensor.grad *= factor
    logger.info(f'[TRAIN_CLIP] gradient norm {norm:.4g} clipped to {max_norm:g}')
  return norm


class Adadelta:
  """Stateful wrapper binding a ParamSet to its accumulators and constants."""

  def __init__(self, params: ParamSet, rho: float = 0.95, eps: float = 1e-6):
    self.params = params
    self.rho = rho
    self.eps = eps
    self.state = OptState.zeros(params)

  def step(self, lr_mult: float) -> bool:
    return adadelta_step(self.params, self.state, lr_mult, self.rho, self.eps)
