"""
Semantic aware module.

Two projection branches (visual context and classification feature) map each
decoding step's vector into a shared semantic space; the cosine similarity of
every pair of steps within one expression is regressed onto the semantic graph
entry of the two ground-truth symbols. Used only by the training loss; inference
never touches `sam.*` parameters.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from sghmer.models.experiment import SamConfig
from sghmer.network.layers import BatchNorm, Linear
from sghmer.tensor import ParamSet, Tensor
from sghmer.tensor import ops

logger = logging.getLogger(__name__)

COSINE_EPS = 1e-8


class NonFiniteLossError(ValueError):
  """A loss component evaluated to NaN or infinity."""


class SamBranch:
  """linear → BN → ReLU → linear → BN → ReLU → linear."""

  def __init__(self, params: ParamSet, name: str, d_in: int, hidden: int, dim: int, rng: np.random.Generator):
    self.l1 = Linear(params, f'{name}.l1', d_in, hidden, rng)
    self.bn1 = BatchNorm(params, f'{name}.bn1', hidden)
    self.l2 = Linear(params, f'{name}.l2', hidden, hidden, rng)
    self.bn2 = BatchNorm(params, f'{name}.bn2', hidden)
    self.l3 = Linear(params, f'{name}.l3', hidden, dim, rng)

  def batchnorms(self) -> list[BatchNorm]:
    return [self.bn1, self.bn2]

  def __call__(self, v: Tensor, mode: str = 'train') -> Tensor:
    return project(v, self, mode)


def project(v: Tensor, branch: SamBranch, mode: str = 'train') -> Tensor:
  """
  Project M×d_in rows into the semantic space.

  Raises:
      ValueError: On a single-row input in train mode
  """
  x = ops.relu(branch.bn1(branch.l1(v), mode))
  x = ops.relu(branch.bn2(branch.l2(x), mode))
  return branch.l3(x)


class SamModule:
  """Visual (`sam.vis.*`) and classification (`sam.cls.*`) branches."""

  def __init__(
    self,
    params: ParamSet,
    visual_dim: int,
    cls_dim: int,
    config: SamConfig,
    rng: np.random.Generator,
    name: str = 'sam',
  ):
    self.vis = SamBranch(params, f'{name}.vis', visual_dim, config.hidden, config.dim, rng)
    self.cls = SamBranch(params, f'{name}.cls', cls_dim, config.hidden, config.dim, rng)


def pairwise_cosine(v: Tensor) -> Tensor:
  """M×M cosine similarities of the rows of v; norms are guarded by 1e-8."""
  norms = ops.add(ops.sqrt(ops.sum(ops.mul(v, v), axis=1, keepdims=True)), COSINE_EPS)
  unit = ops.div(v, norms)
  return ops.matmul(unit, ops.transpose(unit))


@dataclass
class SamTargets:
  """
  Regression targets for the valid steps of a batch, flattened to M rows.

  Attributes:
      rows: Flat indices (into B×T) of the valid steps, sample-major
      g: M×M, g[i][j] = R′[y_i][y_j]
      pair_mask: M×M, 1 where steps i and j belong to the same sample
  """

  rows: np.ndarray
  g: np.ndarray
  pair_mask: np.ndarray

  @property
  def pairs(self) -> int:
    return int(self.pair_mask.sum())


def build_targets(targets: np.ndarray, target_mask: np.ndarray, graph: np.ndarray) -> SamTargets:
  """
  Targets from ground-truth ids under teacher forcing.

  Args:
      targets: B×T ids (label then eos, pad-filled)
      target_mask: B×T, 1 on real steps
      graph: Symmetrized correlation matrix R′ indexed by vocab id

  Raises:
      ValueError: If an id falls outside the graph
  """
  steps = targets.shape[1]
  rows = np.flatnonzero(np.asarray(target_mask).reshape(-1) > 0)
  symbols = np.asarray(targets).reshape(-1)[rows]
  if symbols.size and symbols.max() >= graph.shape[0]:
    raise ValueError(f'Symbol id {symbols.max()} outside the {graph.shape[0]}-symbol graph')
  sample = rows // steps
  return SamTargets(
    rows=rows,
    g=graph[np.ix_(symbols, symbols)],
    pair_mask=(sample[:, None] == sample[None, :]).astype(np.float64),
  )


def gather_steps(per_step: Sequence[Tensor], targets: SamTargets) -> Tensor:
  """Stack T tensors of shape B×d into B×T×d and keep the valid rows (M×d)."""
  stacked = ops.stack(list(per_step), axis=1)
  b, t, d = stacked.shape
  return ops.reshape(stacked, (b * t, d))[targets.rows]


@dataclass
class SamLoss:
  value: Tensor
  gap: float
  empty: bool = False


def sam_loss(projected: Tensor, targets: SamTargets, reduction: str = 'mean') -> SamLoss:
  """
  Squared error between step-pair cosines and their graph targets.

  Args:
      projected: M×d_sem projected vectors
      targets: Pair targets for the same M steps
      reduction: 'mean' over valid pairs or 'sum'

  Returns:
      SamLoss with the scalar loss, the mean |cos − G| over valid pairs and an
      empty flag (no valid pair, loss 0)
  """
  if reduction not in ('mean', 'sum'):
    raise ValueError(f'Unknown SAM loss reduction {reduction!r}')
  pairs = targets.pairs
  if pairs == 0:
    logger.warning('[SAM_EMPTY] no valid step pairs in batch; SAM loss is 0')
    return SamLoss(value=Tensor(0.0), gap=0.0, empty=True)

  cos = pairwise_cosine(projected)
  diff = ops.sub(cos, Tensor(targets.g))
  total = ops.sum(ops.mul(ops.mul(diff, diff), Tensor(targets.pair_mask)))
  value = ops.div(total, float(pairs)) if reduction == 'mean' else total
  gap = float((np.abs(diff.values) * targets.pair_mask).sum() / pairs)
  return SamLoss(value=value, gap=gap)


def total_loss(ce: Tensor, l_vis: Optional[Tensor] = None, l_cls: Optional[Tensor] = None) -> Tensor:
  """
  L = L_symbol + L_vis + L_cls with unit weights; disabled branches are None.

  Raises:
      NonFiniteLossError: If a component is non-finite, naming it
  """
  total = ce
  for label, component in (('L_symbol', ce), ('L_vis', l_vis), ('L_cls', l_cls)):
    if component is None:
      continue
    if not np.all(np.isfinite(component.values)):
      raise NonFiniteLossError(f'{label} is not finite: {component.values}')
    if component is not ce:
      total = ops.add(total, component)
  return total
