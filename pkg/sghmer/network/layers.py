"""
Parameterized layers over the autodiff primitives.

Each layer registers its tensors in a shared ParamSet under dotted names
(`<prefix>.weight`, `<prefix>.bias`, ...) at construction. Weights are drawn
uniformly in ±sqrt(6 / (fan_in + fan_out)); biases start at zero and batch-norm
scale/shift at one/zero.
"""

import math
from typing import Optional

import numpy as np

from sghmer.tensor import BatchNormState, GRUParams, ParamSet, Tensor
from sghmer.tensor import ops


def glorot_bound(fan_in: int, fan_out: int) -> float:
  return math.sqrt(6.0 / (fan_in + fan_out))


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> Tensor:
  bound = glorot_bound(fan_in, fan_out)
  return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def _zeros(*shape: int) -> Tensor:
  return Tensor(np.zeros(shape), requires_grad=True)


class Linear:
  def __init__(
    self,
    params: ParamSet,
    name: str,
    d_in: int,
    d_out: int,
    rng: np.random.Generator,
    bias: bool = True,
  ):
    self.weight = params.add(f'{name}.weight', _uniform(rng, (d_out, d_in), d_in, d_out))
    self.bias: Optional[Tensor] = params.add(f'{name}.bias', _zeros(d_out)) if bias else None

  def __call__(self, x: Tensor) -> Tensor:
    return ops.linear(x, self.weight, self.bias)


class BatchNorm:
  """Batch normalization over axis 1 with running statistics stored in the ParamSet."""

  def __init__(self, params: ParamSet, name: str, features: int):
    self.state = BatchNormState(
      scale=params.add(f'{name}.scale', Tensor(np.ones(features), requires_grad=True)),
      shift=params.add(f'{name}.shift', _zeros(features)),
      running_mean=params.add(f'{name}.running_mean', Tensor(np.zeros(features))),
      running_var=params.add(f'{name}.running_var', Tensor(np.ones(features))),
    )

  def __call__(self, x: Tensor, mode: str) -> Tensor:
    return ops.batchnorm(x, self.state, mode)


class Conv2d:
  """Bias-free same-padded convolution."""

  def __init__(
    self,
    params: ParamSet,
    name: str,
    c_in: int,
    c_out: int,
    kernel: int,
    rng: np.random.Generator,
    stride: int = 1,
  ):
    area = kernel * kernel
    self.kernel = params.add(
      f'{name}.kernel', _uniform(rng, (c_out, c_in, kernel, kernel), c_in * area, c_out * area)
    )
    self.stride = stride
    self.padding = kernel // 2

  def __call__(self, x: Tensor) -> Tensor:
    return ops.conv2d(x, self.kernel, stride=self.stride, padding=self.padding)


class GRUCell:
  def __init__(self, params: ParamSet, name: str, d_in: int, d_hidden: int, rng: np.random.Generator):
    gates = {}
    for gate in ('z', 'r', 'h'):
      gates[f'w_{gate}'] = params.add(f'{name}.w_{gate}', _uniform(rng, (d_hidden, d_in), d_in, d_hidden))
      gates[f'u_{gate}'] = params.add(
        f'{name}.u_{gate}', _uniform(rng, (d_hidden, d_hidden), d_hidden, d_hidden)
      )
      gates[f'b_{gate}'] = params.add(f'{name}.b_{gate}', _zeros(d_hidden))
    self.gates = GRUParams(**gates)

  def __call__(self, x: Tensor, h: Tensor) -> Tensor:
    return ops.gru_cell(x, h, self.gates)


class Embedding:
  def __init__(self, params: ParamSet, name: str, count: int, dim: int, rng: np.random.Generator):
    self.weight = params.add(f'{name}.weight', _uniform(rng, (count, dim), count, dim))

  def __call__(self, ids: np.ndarray) -> Tensor:
    return ops.embedding(self.weight, ids)
