"""
Finite-difference verification of the analytic gradients.

`grad_check` compares backward() against central differences coordinate by
coordinate. `PRIMITIVE_CHECKS` is the registry run by the `gradcheck` command:
every entry builds randomized 64-bit inputs away from non-differentiable points
and returns the max relative error over all of the primitive's inputs.
"""

import logging
from typing import Callable, Sequence

import numpy as np

from sghmer.tensor import ops
from sghmer.tensor.tensor import Tensor, profile

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-5
PRIMITIVE_TOLERANCE = 1e-4


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
  """|a − n| / max(|a|, |n|, 1e-8), elementwise."""
  scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
  return np.abs(analytic - numeric) / scale


def grad_check_params(
  loss_fn: Callable[[], Tensor],
  tensors: Sequence[Tensor],
  eps: float = DEFAULT_EPS,
) -> float:
  """
  Max relative error between analytic and central-difference gradients.

  Args:
      loss_fn: Rebuilds the graph and returns a scalar tensor on every call
      tensors: Requires-grad leaves to perturb
      eps: Central-difference step

  Returns:
      Max relative error over every coordinate of every tensor
  """
  for tensor in tensors:
    tensor.zero_grad()
  loss_fn().backward()
  analytic = [np.array(t.grad, dtype=np.float64) for t in tensors]

  worst = 0.0
  for tensor, grad in zip(tensors, analytic):
    numeric = np.zeros_like(grad)
    for i in range(tensor.size):
      original = tensor.values.flat[i]
      tensor.values.flat[i] = original + eps
      plus = loss_fn().item()
      tensor.values.flat[i] = original - eps
      minus = loss_fn().item()
      tensor.values.flat[i] = original
      numeric.flat[i] = (plus - minus) / (2 * eps)
    if grad.size:
      worst = max(worst, float(relative_error(grad, numeric).max()))
  return worst


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = DEFAULT_EPS) -> float:
  """Max relative error of d f(x) / dx; f must be scalar-valued."""
  return grad_check_params(lambda: f(x), [x], eps)


def _leaf(rng: np.random.Generator, *shape: int, low: float = -1.0, high: float = 1.0) -> Tensor:
  return Tensor(rng.uniform(low, high, size=shape), requires_grad=True)


def _away_from_zero(rng: np.random.Generator, *shape: int) -> Tensor:
  magnitude = rng.uniform(0.1, 1.0, size=shape)
  sign = np.where(rng.random(size=shape) < 0.5, -1.0, 1.0)
  return Tensor(sign * magnitude, requires_grad=True)


def _weighted(out: Tensor, rng: np.random.Generator) -> Callable[[Tensor], Tensor]:
  """Fixed random projection so that no gradient vanishes by symmetry."""
  weights = Tensor(rng.normal(size=out.shape))
  return lambda y: ops.sum(ops.mul(y, weights))


def _check(build: Callable[[], Tensor], leaves: Sequence[Tensor], rng: np.random.Generator) -> float:
  project = _weighted(build(), rng)
  return grad_check_params(lambda: project(build()), leaves)


def check_linear(rng):
  x, w, b = _leaf(rng, 3, 4), _leaf(rng, 2, 4), _leaf(rng, 2)
  return _check(lambda: ops.linear(x, w, b), [x, w, b], rng)


def check_batchnorm(rng):
  x = _leaf(rng, 4, 3)
  state = ops.BatchNormState(
    scale=_leaf(rng, 3, low=0.5, high=1.5),
    shift=_leaf(rng, 3),
    running_mean=Tensor(np.zeros(3)),
    running_var=Tensor(np.ones(3)),
  )
  train = _check(lambda: ops.batchnorm(x, state, 'train'), [x, state.scale, state.shift], rng)
  evaluation = _check(lambda: ops.batchnorm(x, state, 'eval'), [x, state.scale, state.shift], rng)
  return max(train, evaluation)


def check_batchnorm_4d(rng):
  x = _leaf(rng, 2, 2, 3, 3)
  state = ops.BatchNormState(
    scale=_leaf(rng, 2, low=0.5, high=1.5),
    shift=_leaf(rng, 2),
    running_mean=Tensor(np.zeros(2)),
    running_var=Tensor(np.ones(2)),
  )
  return _check(lambda: ops.batchnorm(x, state, 'train'), [x, state.scale, state.shift], rng)


def check_conv2d(rng):
  x, k = _leaf(rng, 1, 2, 5, 5), _leaf(rng, 3, 2, 3, 3)
  same = _check(lambda: ops.conv2d(x, k, stride=1, padding=1), [x, k], rng)
  strided = _check(lambda: ops.conv2d(x, k, stride=2, padding=1), [x, k], rng)
  return max(same, strided)


def check_avg_pool2d(rng):
  x = _leaf(rng, 1, 2, 4, 4)
  return _check(lambda: ops.avg_pool2d(x, 2), [x], rng)


def check_gru_cell(rng):
  d_in, d_h = 3, 4
  params = ops.GRUParams(
    w_z=_leaf(rng, d_h, d_in), u_z=_leaf(rng, d_h, d_h), b_z=_leaf(rng, d_h),
    w_r=_leaf(rng, d_h, d_in), u_r=_leaf(rng, d_h, d_h), b_r=_leaf(rng, d_h),
    w_h=_leaf(rng, d_h, d_in), u_h=_leaf(rng, d_h, d_h), b_h=_leaf(rng, d_h),
  )
  x, h = _leaf(rng, 2, d_in), _leaf(rng, 2, d_h)
  leaves = [x, h, *vars(params).values()]
  return _check(lambda: ops.gru_cell(x, h, params), leaves, rng)


def check_softmax(rng):
  v = _leaf(rng, 2, 5, low=-2.0, high=2.0)
  return _check(lambda: ops.softmax(v), [v], rng)


def check_masked_softmax(rng):
  v = _leaf(rng, 2, 6, low=-2.0, high=2.0)
  mask = np.array([[1, 1, 0, 1, 0, 1], [0, 1, 1, 1, 1, 0]])
  return _check(lambda: ops.masked_softmax(v, mask), [v], rng)


def check_cross_entropy(rng):
  logits = _leaf(rng, 2, 3, 5, low=-2.0, high=2.0)
  targets = rng.integers(0, 5, size=(2, 3))
  mask = np.array([[1, 1, 0], [1, 1, 1]])
  return grad_check_params(lambda: ops.cross_entropy(logits, targets, mask), [logits])


def check_tanh(rng):
  x = _leaf(rng, 3, 3, low=-2.0, high=2.0)
  return _check(lambda: ops.tanh(x), [x], rng)


def check_sigmoid(rng):
  x = _leaf(rng, 3, 3, low=-2.0, high=2.0)
  return _check(lambda: ops.sigmoid(x), [x], rng)


def check_relu(rng):
  x = _away_from_zero(rng, 3, 4)
  return _check(lambda: ops.relu(x), [x], rng)


def check_embedding(rng):
  table = _leaf(rng, 5, 3)
  ids = np.array([[0, 2], [2, 4]])
  return _check(lambda: ops.embedding(table, ids), [table], rng)


def check_matmul(rng):
  a, b = _leaf(rng, 2, 3, 4), _leaf(rng, 2, 4, 2)
  return _check(lambda: ops.matmul(a, b), [a, b], rng)


def check_arithmetic(rng):
  a = _leaf(rng, 2, 3)
  b = _leaf(rng, 1, 3, low=0.5, high=1.5)

  def build():
    quotient = ops.div(ops.sub(ops.add(a, b), ops.mul(a, b)), b)
    return ops.sqrt(ops.add(ops.exp(quotient), ops.power(ops.log(b), 2.0)))

  return _check(build, [a, b], rng)


def check_structure(rng):
  a, b = _leaf(rng, 2, 3), _leaf(rng, 2, 3)

  def build():
    joined = ops.concat([a, ops.stack([b[0], b[1]], axis=0)], axis=1)
    picked = joined[np.array([1, 0, 1])]
    reduced = ops.mean(ops.transpose(ops.reshape(picked, (3, 2, 3)), (0, 2, 1)), axis=2)
    return ops.sum(reduced, axis=0, keepdims=True)

  return _check(build, [a, b], rng)


PRIMITIVE_CHECKS: dict[str, Callable[[np.random.Generator], float]] = {
  'linear': check_linear,
  'batchnorm': check_batchnorm,
  'batchnorm_4d': check_batchnorm_4d,
  'conv2d': check_conv2d,
  'avg_pool2d': check_avg_pool2d,
  'gru_cell': check_gru_cell,
  'softmax': check_softmax,
  'masked_softmax': check_masked_softmax,
  'cross_entropy': check_cross_entropy,
  'tanh': check_tanh,
  'sigmoid': check_sigmoid,
  'relu': check_relu,
  'embedding': check_embedding,
  'matmul': check_matmul,
  'arithmetic': check_arithmetic,
  'structure': check_structure,
}


def run_all(seed: int = 0) -> dict[str, float]:
  """Run every registered check at 64-bit precision; returns name -> max relative error."""
  results = {}
  with profile('float64'):
    for name, check in PRIMITIVE_CHECKS.items():
      results[name] = check(np.random.default_rng([seed, len(results)]))
      logger.info(f'[GRADCHECK] {name}: max rel err {results[name]:.3e}')
  return results
