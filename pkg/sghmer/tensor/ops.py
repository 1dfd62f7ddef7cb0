"""
Differentiable primitives.

Each primitive computes its forward value with numpy and registers an adjoint
that maps the output gradient to one gradient per input (None for inputs that
receive none). Only the operations the recognizer needs are provided.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from sghmer.tensor.tensor import Tensor, as_tensor

logger = logging.getLogger(__name__)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
  """Sum grad down to shape, undoing numpy broadcasting."""
  if grad.shape == shape:
    return grad
  extra = grad.ndim - len(shape)
  if extra > 0:
    grad = grad.sum(axis=tuple(range(extra)))
  axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
  if axes:
    grad = grad.sum(axis=axes, keepdims=True)
  return grad.reshape(shape)


# ---------------------------------------------------------------------------
# Elementwise arithmetic
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
  a, b = as_tensor(a), as_tensor(b)
  return Tensor.from_op(
    a.values + b.values,
    (a, b),
    lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
  )


def sub(a, b) -> Tensor:
  a, b = as_tensor(a), as_tensor(b)
  return Tensor.from_op(
    a.values - b.values,
    (a, b),
    lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
  )


def mul(a, b) -> Tensor:
  a, b = as_tensor(a), as_tensor(b)
  return Tensor.from_op(
    a.values * b.values,
    (a, b),
    lambda g: (_unbroadcast(g * b.values, a.shape), _unbroadcast(g * a.values, b.shape)),
  )


def div(a, b) -> Tensor:
  a, b = as_tensor(a), as_tensor(b)
  out = a.values / b.values

  def backward(g):
    ga = g / b.values
    return _unbroadcast(ga, a.shape), _unbroadcast(-ga * out, b.shape)

  return Tensor.from_op(out, (a, b), backward)


def neg(a: Tensor) -> Tensor:
  return Tensor.from_op(-a.values, (a,), lambda g: (-g,))


def power(a: Tensor, exponent: float) -> Tensor:
  return Tensor.from_op(
    a.values**exponent,
    (a,),
    lambda g: (g * exponent * a.values ** (exponent - 1),),
  )


def exp(a: Tensor) -> Tensor:
  out = np.exp(a.values)
  return Tensor.from_op(out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
  return Tensor.from_op(np.log(a.values), (a,), lambda g: (g / a.values,))


def sqrt(a: Tensor) -> Tensor:
  out = np.sqrt(a.values)
  return Tensor.from_op(out, (a,), lambda g: (g * 0.5 / out,))


def tanh(a: Tensor) -> Tensor:
  out = np.tanh(a.values)
  return Tensor.from_op(out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a: Tensor) -> Tensor:
  # tanh form never overflows
  out = 0.5 * (1.0 + np.tanh(0.5 * a.values))
  return Tensor.from_op(out, (a,), lambda g: (g * out * (1.0 - out),))


def relu(a: Tensor) -> Tensor:
  """max(x, 0); the subgradient at 0 is 0."""
  active = a.values > 0
  return Tensor.from_op(a.values * active, (a,), lambda g: (g * active,))


# ---------------------------------------------------------------------------
# Reductions and structure
# ---------------------------------------------------------------------------


def sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
  out = np.sum(a.values, axis=axis, keepdims=keepdims)

  def backward(g):
    if axis is not None and not keepdims:
      g = np.expand_dims(g, axis)
    return (np.broadcast_to(g, a.shape),)

  return Tensor.from_op(np.asarray(out), (a,), backward)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
  count = a.size if axis is None else int(np.prod([a.shape[i] for i in np.atleast_1d(axis)]))
  return mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
  return Tensor.from_op(a.values.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
  axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
  inverse = tuple(np.argsort(axes))
  return Tensor.from_op(a.values.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def getitem(a: Tensor, index) -> Tensor:
  """Basic or integer-array indexing; the adjoint scatter-adds into the source."""
  if isinstance(index, Tensor):
    index = index.values.astype(np.int64)

  def backward(g):
    full = np.zeros_like(a.values)
    np.add.at(full, index, g)
    return (full,)

  return Tensor.from_op(np.array(a.values[index]), (a,), backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
  tensors = [as_tensor(t) for t in tensors]
  sizes = [t.shape[axis] for t in tensors]
  splits = np.cumsum(sizes)[:-1]
  return Tensor.from_op(
    np.concatenate([t.values for t in tensors], axis=axis),
    tensors,
    lambda g: tuple(np.split(g, splits, axis=axis)),
  )


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
  tensors = [as_tensor(t) for t in tensors]
  return Tensor.from_op(
    np.stack([t.values for t in tensors], axis=axis),
    tensors,
    lambda g: tuple(np.take(g, i, axis=axis) for i in range(len(tensors))),
  )


def matmul(a: Tensor, b: Tensor) -> Tensor:
  """Matrix product over the last two axes; leading axes broadcast."""
  a, b = as_tensor(a), as_tensor(b)
  if a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
    raise ValueError(f'matmul shape mismatch: {a.shape} @ {b.shape}')

  def backward(g):
    ga = g @ np.swapaxes(b.values, -1, -2)
    gb = np.swapaxes(a.values, -1, -2) @ g
    return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

  return Tensor.from_op(a.values @ b.values, (a, b), backward)


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------


def linear(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
  """
  y = x·wᵀ + b over the last axis of x.

  Args:
      x: Input of shape [*, in]
      w: Weight of shape [out, in]
      b: Optional bias of shape [out]

  Returns:
      Tensor of shape [*, out]

  Raises:
      ValueError: If the inner extents disagree
  """
  if w.ndim != 2 or x.shape[-1] != w.shape[1]:
    raise ValueError(f'linear shape mismatch: input {x.shape} vs weight {w.shape}')
  if b is not None and b.shape != (w.shape[0],):
    raise ValueError(f'linear shape mismatch: weight {w.shape} vs bias {b.shape}')

  out = x.values @ w.values.T
  if b is not None:
    out = out + b.values

  def backward(g):
    g2 = g.reshape(-1, w.shape[0])
    x2 = x.values.reshape(-1, w.shape[1])
    gx = g @ w.values
    gw = g2.T @ x2
    gb = g2.sum(axis=0) if b is not None else None
    return gx, gw, gb

  parents = (x, w, b) if b is not None else (x, w)
  return Tensor.from_op(out, parents, backward)


def embedding(weight: Tensor, ids: np.ndarray) -> Tensor:
  """Rows of weight selected by integer ids."""
  ids = np.asarray(ids, dtype=np.int64)
  if ids.size and (ids.min() < 0 or ids.max() >= weight.shape[0]):
    raise ValueError(
      f'embedding id out of range: ids span [{ids.min()}, {ids.max()}], '
      f'table has {weight.shape[0]} rows'
    )

  def backward(g):
    full = np.zeros_like(weight.values)
    np.add.at(full, ids, g)
    return (full,)

  return Tensor.from_op(weight.values[ids], (weight,), backward)


@dataclass
class BatchNormState:
  """Learnable scale/shift plus running statistics of one batch-norm layer."""

  scale: Tensor
  shift: Tensor
  running_mean: Tensor
  running_var: Tensor
  momentum: float = 0.9
  eps: float = 1e-5


def batchnorm(x: Tensor, state: BatchNormState, mode: str) -> Tensor:
  """
  Batch normalization over every axis except the feature/channel axis 1.

  In train mode the batch statistics normalize the input and the running
  statistics are updated by exponential moving average; in eval mode only the
  running statistics are used.

  Args:
      x: Tensor [batch, feat] or [batch, channels, height, width]
      state: Scale, shift and running statistics
      mode: 'train' or 'eval'

  Returns:
      Normalized tensor of the same shape

  Raises:
      ValueError: On a train-mode batch with fewer than two rows per feature
  """
  if x.ndim not in (2, 4):
    raise ValueError(f'batchnorm expects a 2-D or 4-D input, got shape {x.shape}')
  if x.shape[1] != state.scale.shape[0]:
    raise ValueError(f'batchnorm feature mismatch: input {x.shape} vs scale {state.scale.shape}')
  if mode not in ('train', 'eval'):
    raise ValueError(f'batchnorm mode must be train or eval, got {mode!r}')

  axes = (0,) if x.ndim == 2 else (0, 2, 3)
  bshape = (1, -1) if x.ndim == 2 else (1, -1, 1, 1)
  scale = state.scale.values.reshape(bshape)
  shift = state.shift.values.reshape(bshape)

  if mode == 'eval':
    inv_std = 1.0 / np.sqrt(state.running_var.values.reshape(bshape) + state.eps)
    xhat = (x.values - state.running_mean.values.reshape(bshape)) * inv_std

    def eval_backward(g):
      return (
        g * scale * inv_std,
        (g * xhat).sum(axis=axes),
        g.sum(axis=axes),
      )

    return Tensor.from_op(xhat * scale + shift, (x, state.scale, state.shift), eval_backward)

  count = x.size // x.shape[1]
  if count < 2:
    raise ValueError(
      f'batchnorm in train mode needs at least 2 rows per feature, got input shape {x.shape}'
    )
  mu = x.values.mean(axis=axes, keepdims=True)
  centered = x.values - mu
  var = (centered * centered).mean(axis=axes, keepdims=True)
  inv_std = 1.0 / np.sqrt(var + state.eps)
  xhat = centered * inv_std

  m = state.momentum
  state.running_mean.values[...] = m * state.running_mean.values + (1 - m) * mu.reshape(-1)
  state.running_var.values[...] = m * state.running_var.values + (1 - m) * var.reshape(-1)

  def train_backward(g):
    dxhat = g * scale
    dx = inv_std / count * (
      count * dxhat
      - dxhat.sum(axis=axes, keepdims=True)
      - xhat * (dxhat * xhat).sum(axis=axes, keepdims=True)
    )
    return dx, (g * xhat).sum(axis=axes), g.sum(axis=axes)

  return Tensor.from_op(xhat * scale + shift, (x, state.scale, state.shift), train_backward)


def conv2d(x: Tensor, k: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
  """
  2-D cross-correlation.

  Args:
      x: Input [b, c, h, w]
      k: Kernel [o, c, kh, kw] with odd kh and kw
      stride: Step between windows
      padding: Zero padding on every border

  Returns:
      Tensor [b, o, h', w'] with h' = floor((h + 2p - kh) / stride) + 1

  Raises:
      ValueError: On even kernels, channel mismatch or an output extent below 1
  """
  if x.ndim != 4 or k.ndim != 4:
    raise ValueError(f'conv2d expects 4-D input and kernel, got {x.shape} and {k.shape}')
  b, c, h, w = x.shape
  o, kc, kh, kw = k.shape
  if kc != c:
    raise ValueError(f'conv2d channel mismatch: input {x.shape} vs kernel {k.shape}')
  if kh % 2 == 0 or kw % 2 == 0:
    raise ValueError(f'conv2d kernel extents must be odd, got {kh}x{kw}')
  out_h = (h + 2 * padding - kh) // stride + 1
  out_w = (w + 2 * padding - kw) // stride + 1
  if out_h < 1 or out_w < 1:
    raise ValueError(
      f'conv2d output extent below 1: input {x.shape}, kernel {k.shape}, '
      f'stride {stride}, padding {padding}'
    )

  xp = np.pad(x.values, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
  windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
  windows = windows[:, :, :out_h, :out_w]
  out = np.tensordot(windows, k.values, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)

  def backward(g):
    gk = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
    gxp = np.zeros_like(xp)
    for i in range(kh):
      for j in range(kw):
        contrib = np.tensordot(g, k.values[:, :, i, j], axes=([1], [0])).transpose(0, 3, 1, 2)
        gxp[
          :, :, i : i + stride * (out_h - 1) + 1 : stride, j : j + stride * (out_w - 1) + 1 : stride
        ] += contrib
    gx = gxp[:, :, padding : padding + h, padding : padding + w]
    return gx, gk

  return Tensor.from_op(np.ascontiguousarray(out), (x, k), backward)


def avg_pool2d(x: Tensor, size: int = 2) -> Tensor:
  """Non-overlapping size×size average pooling."""
  b, c, h, w = x.shape
  if h % size or w % size:
    raise ValueError(f'avg_pool2d needs extents divisible by {size}, got {x.shape}')
  out = x.values.reshape(b, c, h // size, size, w // size, size).mean(axis=(3, 5))

  def backward(g):
    spread = np.repeat(np.repeat(g, size, axis=2), size, axis=3)
    return (spread / (size * size),)

  return Tensor.from_op(out, (x,), backward)


# ---------------------------------------------------------------------------
# Recurrent cell
# ---------------------------------------------------------------------------


@dataclass
class GRUParams:
  """Gate weights of one GRU cell: W_* act on the input, U_* on the hidden state."""

  w_z: Tensor
  u_z: Tensor
  b_z: Tensor
  w_r: Tensor
  u_r: Tensor
  b_r: Tensor
  w_h: Tensor
  u_h: Tensor
  b_h: Tensor


def gru_cell(x: Tensor, h: Tensor, params: GRUParams) -> Tensor:
  """
  One GRU step.

  z = σ(W_z x + U_z h + b_z); r = σ(W_r x + U_r h + b_r);
  h̃ = tanh(W_h x + U_h (r ⊙ h) + b_h); h' = (1 − z) ⊙ h + z ⊙ h̃.
  """
  z = sigmoid(add(linear(x, params.w_z, params.b_z), linear(h, params.u_z)))
  r = sigmoid(add(linear(x, params.w_r, params.b_r), linear(h, params.u_r)))
  candidate = tanh(add(linear(x, params.w_h, params.b_h), linear(mul(r, h), params.u_h)))
  return add(h, mul(z, sub(candidate, h)))


# ---------------------------------------------------------------------------
# Normalized outputs and losses
# ---------------------------------------------------------------------------


def softmax(v: Tensor, axis: int = -1) -> Tensor:
  """
  Softmax with max-subtraction.

  Raises:
      ValueError: If any entry is non-finite
  """
  if v.size == 0:
    raise ValueError('softmax of an empty tensor')
  if not np.all(np.isfinite(v.values)):
    raise ValueError('softmax input contains non-finite values')
  e = np.exp(v.values - v.values.max(axis=axis, keepdims=True))
  out = e / e.sum(axis=axis, keepdims=True)

  def backward(g):
    return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

  return Tensor.from_op(out, (v,), backward)


def masked_softmax(v: Tensor, mask: np.ndarray, axis: int = -1) -> Tensor:
  """
  Softmax restricted to positions where mask is nonzero; other positions are exactly 0.

  Raises:
      ValueError: If a row has no valid position or a valid entry is non-finite
  """
  valid = np.asarray(mask) > 0
  if valid.shape != v.shape:
    raise ValueError(f'masked_softmax mask shape {valid.shape} vs input {v.shape}')
  if not np.all(valid.any(axis=axis)):
    raise ValueError('masked_softmax row with zero valid positions')
  if not np.all(np.isfinite(v.values[valid])):
    raise ValueError('masked_softmax input contains non-finite values')
  masked = np.where(valid, v.values, -np.inf)
  e = np.where(valid, np.exp(masked - masked.max(axis=axis, keepdims=True)), 0.0)
  out = (e / e.sum(axis=axis, keepdims=True)).astype(v.values.dtype)

  def backward(g):
    return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

  return Tensor.from_op(out, (v,), backward)


def cross_entropy(logits: Tensor, targets: np.ndarray, mask: Optional[np.ndarray] = None) -> Tensor:
  """
  Masked mean negative log-likelihood of integer targets under softmax(logits).

  Args:
      logits: Scores [..., N]
      targets: Integer ids [...]
      mask: Optional weights [...] (1 on counted positions)

  Returns:
      Scalar tensor

  Raises:
      ValueError: On shape mismatch, ids out of range or an all-zero mask
  """
  targets = np.asarray(targets, dtype=np.int64)
  if targets.shape != logits.shape[:-1]:
    raise ValueError(f'cross_entropy targets {targets.shape} vs logits {logits.shape}')
  n = logits.shape[-1]
  if targets.size and (targets.min() < 0 or targets.max() >= n):
    raise ValueError(f'cross_entropy target id out of range [0, {n})')
  weights = np.ones(targets.shape) if mask is None else np.asarray(mask, dtype=np.float64)
  count = weights.sum()
  if count <= 0:
    raise ValueError('cross_entropy with no counted positions')

  x = logits.values
  shifted = x - x.max(axis=-1, keepdims=True)
  log_norm = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
  log_probs = shifted - log_norm
  picked = np.take_along_axis(log_probs, targets[..., None], axis=-1)[..., 0]
  loss = -(weights * picked).sum() / count

  def backward(g):
    probs = np.exp(log_probs)
    np.put_along_axis(
      probs,
      targets[..., None],
      np.take_along_axis(probs, targets[..., None], axis=-1) - 1.0,
      axis=-1,
    )
    return ((g * probs * (weights / count)[..., None]).astype(x.dtype),)

  return Tensor.from_op(np.asarray(loss, dtype=x.dtype), (logits,), backward)
