"""
DenseNet-lite encoder.

stem: conv k×k stride 2 → BN → ReLU → 2×2 average pool        (÷4)
three dense blocks of pre-activation layers BN → ReLU → conv 3×3, each layer's
output concatenated onto its input; after blocks 1 and 2 a transition
BN → ReLU → conv 1×1 (halving channels) → 2×2 average pool    (÷4)
head: BN → ReLU → conv 1×1 to C channels

Spatial reduction is exactly 16; the feature mask is the image mask max-pooled
over each 16×16 cell.
"""

import logging
from dataclasses import dataclass

import numpy as np

from sghmer.models.experiment import DENSE_BLOCKS, DOWNSAMPLE, EncoderConfig
from sghmer.network.layers import BatchNorm, Conv2d
from sghmer.tensor import ParamSet, Tensor
from sghmer.tensor import ops

logger = logging.getLogger(__name__)


@dataclass
class FeatureMap:
  """Encoder output: features B×C×H′×W′ and the valid-position mask B×H′×W′."""

  features: Tensor
  mask: np.ndarray

  @property
  def batch(self) -> int:
    return self.features.shape[0]

  @property
  def channels(self) -> int:
    return self.features.shape[1]

  @property
  def spatial(self) -> tuple[int, int]:
    return self.features.shape[2], self.features.shape[3]


def pool_mask(image_mask: np.ndarray, factor: int = DOWNSAMPLE) -> np.ndarray:
  """Max-pool a B×H×W binary mask over non-overlapping factor×factor cells."""
  b, h, w = image_mask.shape
  return image_mask.reshape(b, h // factor, factor, w // factor, factor).max(axis=(2, 4))


class DenseEncoder:
  def __init__(self, params: ParamSet, config: EncoderConfig, rng: np.random.Generator, name: str = 'encoder'):
    self.stem = Conv2d(params, f'{name}.stem', 1, config.stem_channels, config.stem_kernel, rng, stride=2)
    self.stem_bn = BatchNorm(params, f'{name}.stem_bn', config.stem_channels)

    channels = config.stem_channels
    self.blocks: list[list[tuple[BatchNorm, Conv2d]]] = []
    self.transitions: list[tuple[BatchNorm, Conv2d]] = []
    for b in range(DENSE_BLOCKS):
      block = []
      for layer in range(config.layers_per_block):
        prefix = f'{name}.block{b}.layer{layer}'
        block.append((
          BatchNorm(params, f'{prefix}.bn', channels),
          Conv2d(params, f'{prefix}.conv', channels, config.growth_rate, 3, rng),
        ))
        channels += config.growth_rate
      self.blocks.append(block)
      if b < DENSE_BLOCKS - 1:
        compressed = max(1, channels // 2)
        self.transitions.append((
          BatchNorm(params, f'{name}.transition{b}.bn', channels),
          Conv2d(params, f'{name}.transition{b}.conv', channels, compressed, 1, rng),
        ))
        channels = compressed

    self.head_bn = BatchNorm(params, f'{name}.head_bn', channels)
    self.head = Conv2d(params, f'{name}.head', channels, config.out_channels, 1, rng)
    self.out_channels = config.out_channels

  def batchnorms(self) -> list[BatchNorm]:
    layers = [self.stem_bn]
    for block in self.blocks:
      layers.extend(bn for bn, _ in block)
    layers.extend(bn for bn, _ in self.transitions)
    layers.append(self.head_bn)
    return layers

  def __call__(self, images: np.ndarray, image_mask: np.ndarray, mode: str = 'eval') -> FeatureMap:
    """
    Encode a padded batch.

    Args:
        images: B×1×H×W with H and W multiples of 16
        image_mask: B×H×W binary
        mode: Batch-norm mode, 'train' or 'eval'

    Returns:
        FeatureMap with spatial extents H/16 × W/16

    Raises:
        ValueError: If H or W is not a multiple of 16
    """
    h, w = images.shape[-2:]
    if h % DOWNSAMPLE or w % DOWNSAMPLE:
      raise ValueError(f'Encoder input {h}x{w} is not a multiple of {DOWNSAMPLE}')

    x = ops.avg_pool2d(ops.relu(self.stem_bn(self.stem(Tensor(images)), mode)), 2)
    for b, block in enumerate(self.blocks):
      for bn, conv in block:
        x = ops.concat([x, conv(ops.relu(bn(x, mode)))], axis=1)
      if b < len(self.transitions):
        bn, conv = self.transitions[b]
        x = ops.avg_pool2d(conv(ops.relu(bn(x, mode))), 2)
    features = self.head(ops.relu(self.head_bn(x, mode)))
    return FeatureMap(features=features, mask=pool_mask(np.asarray(image_mask)))
