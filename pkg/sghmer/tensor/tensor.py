"""
Tensor and reverse-mode differentiation graph.

A Tensor wraps a numpy array. Primitives in `sghmer.tensor.ops` record the
tensors they were computed from together with an adjoint closure; `backward()`
walks that record in reverse topological order and accumulates gradients into
every requires-grad leaf.
"""

import contextlib
import logging
import threading
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

# Numeric profiles: float64 for gradient checks and oracles, float32 for training.
PROFILES = {
  'float64': np.float64,
  'float32': np.float32,
}

_state = {
  'profile': 'float32',
}

# Grad mode is per thread; the numeric profile is process-wide.
_local = threading.local()

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


def set_profile(name: str) -> None:
  """Select the global numeric profile.

  Args:
      name: 'float64' or 'float32'

  Raises:
      ValueError: If the profile name is unknown
  """
  if name not in PROFILES:
    raise ValueError(f'Unknown numeric profile {name!r}; expected one of {sorted(PROFILES)}')
  _state['profile'] = name


def get_profile() -> str:
  """Name of the active numeric profile."""
  return _state['profile']


def get_dtype() -> type:
  """numpy dtype of the active numeric profile."""
  return PROFILES[_state['profile']]


@contextlib.contextmanager
def profile(name: str) -> Iterator[None]:
  """Temporarily switch the numeric profile."""
  previous = get_profile()
  set_profile(name)
  try:
    yield
  finally:
    set_profile(previous)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
  """Disable graph recording inside the block."""
  previous = is_grad_enabled()
  _local.grad_enabled = False
  try:
    yield
  finally:
    _local.grad_enabled = previous


def is_grad_enabled() -> bool:
  """True when primitives record the graph."""
  return getattr(_local, 'grad_enabled', True)


class Tensor:
  """n-dimensional real array taking part in a recorded differentiation graph."""

  def __init__(
    self,
    values,
    requires_grad: bool = False,
    name: Optional[str] = None,
  ):
    """
    Create a leaf tensor.

    Args:
        values: Array-like data, cast to the active profile's dtype
        requires_grad: Allocate a gradient buffer and track this leaf
        name: Optional label, used in error messages and ParamSet records
    """
    self.values = np.ascontiguousarray(values, dtype=get_dtype())
    self.requires_grad = requires_grad
    self.grad: Optional[np.ndarray] = np.zeros_like(self.values) if requires_grad else None
    self.name = name
    self._parents: tuple['Tensor', ...] = ()
    self._backward: Optional[BackwardFn] = None

  @classmethod
  def from_op(
    cls,
    values: np.ndarray,
    parents: Sequence['Tensor'],
    backward: BackwardFn,
  ) -> 'Tensor':
    """Wrap the result of a primitive, recording its inputs when gradients are needed."""
    out = cls.__new__(cls)
    out.values = values
    out.name = None
    out.grad = None
    out._parents = ()
    out._backward = None
    out.requires_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
    if out.requires_grad:
      out._parents = tuple(parents)
      out._backward = backward
    return out

  @property
  def shape(self) -> tuple[int, ...]:
    return self.values.shape

  @property
  def ndim(self) -> int:
    return self.values.ndim

  @property
  def size(self) -> int:
    return self.values.size

  @property
  def is_leaf(self) -> bool:
    """A tensor with no producing node is a leaf."""
    return self._backward is None

  def item(self) -> float:
    if self.values.size != 1:
      raise ValueError(f'item() needs a single-element tensor, got shape {self.shape}')
    return float(self.values.reshape(-1)[0])

  def numpy(self) -> np.ndarray:
    return self.values

  def detach(self) -> 'Tensor':
    return Tensor(self.values)

  def zero_grad(self) -> None:
    if self.requires_grad:
      self.grad = np.zeros_like(self.values)

  def __repr__(self) -> str:
    label = f', name={self.name!r}' if self.name else ''
    return f'Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})'

  def __len__(self) -> int:
    return self.shape[0]

  # Operator sugar; the primitives live in ops.
  def __add__(self, other):
    from sghmer.tensor import ops
    return ops.add(self, other)

  def __radd__(self, other):
    from sghmer.tensor import ops
    return ops.add(other, self)

  def __sub__(self, other):
    from sghmer.tensor import ops
    return ops.sub(self, other)

  def __rsub__(self, other):
    from sghmer.tensor import ops
    return ops.sub(other, self)

  def __mul__(self, other):
    from sghmer.tensor import ops
    return ops.mul(self, other)

  def __rmul__(self, other):
    from sghmer.tensor import ops
    return ops.mul(other, self)

  def __truediv__(self, other):
    from sghmer.tensor import ops
    return ops.div(self, other)

  def __neg__(self):
    from sghmer.tensor import ops
    return ops.neg(self)

  def __matmul__(self, other):
    from sghmer.tensor import ops
    return ops.matmul(self, other)

  def __getitem__(self, index):
    from sghmer.tensor import ops
    return ops.getitem(self, index)

  def backward(self) -> None:
    """
    Accumulate d(self)/d(leaf) into the grad of every requires-grad leaf.

    Repeated calls on the same graph without zeroing accumulate additively.

    Raises:
        ValueError: If self is not a scalar
    """
    if self.values.size != 1:
      raise ValueError(f'backward() needs a scalar loss, got shape {self.shape}')
    if not self.requires_grad:
      return

    order = _topological_order(self)
    pending: dict[int, np.ndarray] = {id(self): np.ones_like(self.values)}

    for node in reversed(order):
      g = pending.pop(id(node), None)
      if g is None:
        continue
      if node._backward is None:
        node.grad = node.grad + g if node.grad is not None else np.array(g, copy=True)
        continue
      node.grad = g
      parent_grads = node._backward(g)
      for parent, pg in zip(node._parents, parent_grads):
        if pg is None or not parent.requires_grad:
          continue
        key = id(parent)
        pending[key] = pending[key] + pg if key in pending else pg


def _topological_order(root: Tensor) -> list[Tensor]:
  """Inputs-before-outputs order of the requires-grad subgraph under root."""
  order: list[Tensor] = []
  visited: set[int] = set()
  stack: list[tuple[Tensor, bool]] = [(root, False)]
  while stack:
    node, expanded = stack.pop()
    if expanded:
      order.append(node)
      continue
    if id(node) in visited:
      continue
    visited.add(id(node))
    stack.append((node, True))
    for parent in node._parents:
      if parent.requires_grad and id(parent) not in visited:
        stack.append((parent, False))
  return order


def as_tensor(value) -> Tensor:
  """Return value unchanged if it is a Tensor, else wrap it as a constant."""
  return value if isinstance(value, Tensor) else Tensor(value)
