"""
Named parameter sets and the binary checkpoint format.

Checkpoint layout (all integers little-endian u32):

    b"SGHMER1\\n"
    payload:
        record count
        per record: name length, name bytes (UTF-8), rank, extents..., float32 values
        extra-text length, extra-text bytes (UTF-8)
    CRC32 of payload
"""

import logging
import struct
import zlib
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

import numpy as np

from sghmer.tensor.tensor import Tensor

logger = logging.getLogger(__name__)

MAGIC = b'SGHMER1\n'
_U32 = struct.Struct('<I')


class CheckpointError(ValueError):
  """A checkpoint file is truncated, corrupt or not a checkpoint."""


class ParamSet:
  """Ordered map from dotted name to Tensor; insertion order is iteration order."""

  def __init__(self, tensors: Optional[Iterable[tuple[str, Tensor]]] = None):
    self._tensors: dict[str, Tensor] = {}
    for name, tensor in tensors or ():
      self.add(name, tensor)

  def add(self, name: str, tensor: Tensor) -> Tensor:
    """Register tensor under name; names must be unique."""
    if name in self._tensors:
      raise ValueError(f'Duplicate parameter name: {name}')
    tensor.name = name
    self._tensors[name] = tensor
    return tensor

  def get(self, name: str) -> Tensor:
    return self._tensors[name]

  def __contains__(self, name: str) -> bool:
    return name in self._tensors

  def __getitem__(self, name: str) -> Tensor:
    return self._tensors[name]

  def __len__(self) -> int:
    return len(self._tensors)

  def __iter__(self) -> Iterator[str]:
    return iter(self._tensors)

  def names(self) -> list[str]:
    return list(self._tensors)

  def items(self) -> list[tuple[str, Tensor]]:
    return list(self._tensors.items())

  def trainable(self) -> list[tuple[str, Tensor]]:
    """Parameters that receive gradients (running statistics excluded)."""
    return [(n, t) for n, t in self._tensors.items() if t.requires_grad]

  def zero_grad(self) -> None:
    for _, tensor in self.trainable():
      tensor.zero_grad()

  def global_grad_norm(self) -> float:
    total = 0.0
    for _, tensor in self.trainable():
      total += float(np.sum(np.square(tensor.grad, dtype=np.float64)))
    return float(np.sqrt(total))

  def without(self, prefix: str) -> 'ParamSet':
    """New set sharing every tensor whose name does not start with prefix."""
    return ParamSet((n, t) for n, t in self._tensors.items() if not n.startswith(prefix))

  def with_prefix(self, prefix: str) -> 'ParamSet':
    return ParamSet((n, t) for n, t in self._tensors.items() if n.startswith(prefix))

  def copy_from(
    self,
    other: 'ParamSet',
    skip_prefixes: tuple[str, ...] = (),
    strict: bool = True,
  ) -> list[str]:
    """
    Copy values by name from other into this set's tensors.

    Args:
        other: Source parameters
        skip_prefixes: Names in this set that may be missing from other
        strict: Reject missing names that are not covered by skip_prefixes

    Returns:
        Names of this set that were not found in other

    Raises:
        ValueError: On shape mismatch, or a missing name when strict
    """
    missing = []
    for name, tensor in self._tensors.items():
      if name not in other:
        if strict and not name.startswith(skip_prefixes):
          raise ValueError(f'Parameter {name} missing from source')
        missing.append(name)
        continue
      source = other.get(name)
      if source.shape != tensor.shape:
        raise ValueError(f'Parameter {name} shape {source.shape} does not match {tensor.shape}')
      tensor.values[...] = source.values
    return missing

  def save(self, path: Union[str, Path], extra_text: str = '') -> None:
    """Write the set, plus an optional UTF-8 text block, in the checkpoint format."""
    Path(path).write_bytes(encode_checkpoint(self, extra_text))
    logger.debug(f'Saved {len(self)} tensors to {path}')

  @classmethod
  def load(cls, path: Union[str, Path]) -> tuple['ParamSet', str]:
    """Read a checkpoint file; returns the parameters and the embedded text block."""
    return decode_checkpoint(Path(path).read_bytes())


def encode_checkpoint(params: ParamSet, extra_text: str = '') -> bytes:
  chunks = [_U32.pack(len(params))]
  for name, tensor in params.items():
    raw_name = name.encode('utf-8')
    chunks.append(_U32.pack(len(raw_name)))
    chunks.append(raw_name)
    chunks.append(_U32.pack(tensor.ndim))
    chunks.extend(_U32.pack(n) for n in tensor.shape)
    chunks.append(np.ascontiguousarray(tensor.values, dtype='<f4').tobytes())
  raw_extra = extra_text.encode('utf-8')
  chunks.append(_U32.pack(len(raw_extra)))
  chunks.append(raw_extra)
  payload = b''.join(chunks)
  return MAGIC + payload + _U32.pack(zlib.crc32(payload))


class _Reader:
  def __init__(self, data: bytes):
    self.data = data
    self.pos = 0

  def take(self, n: int) -> bytes:
    if self.pos + n > len(self.data):
      raise CheckpointError('Checkpoint is truncated')
    chunk = self.data[self.pos : self.pos + n]
    self.pos += n
    return chunk

  def u32(self) -> int:
    return _U32.unpack(self.take(4))[0]


def decode_checkpoint(data: bytes) -> tuple[ParamSet, str]:
  if not data.startswith(MAGIC):
    raise CheckpointError('Not a checkpoint: bad magic header')
  if len(data) < len(MAGIC) + 8:
    raise CheckpointError('Checkpoint is truncated')
  payload = data[len(MAGIC) : -4]
  (stored_crc,) = _U32.unpack(data[-4:])
  if zlib.crc32(payload) != stored_crc:
    raise CheckpointError('Checkpoint CRC mismatch (corrupt or truncated file)')

  reader = _Reader(payload)
  params = ParamSet()
  for _ in range(reader.u32()):
    name = reader.take(reader.u32()).decode('utf-8')
    rank = reader.u32()
    shape = tuple(reader.u32() for _ in range(rank))
    count = int(np.prod(shape)) if shape else 1
    values = np.frombuffer(reader.take(4 * count), dtype='<f4').reshape(shape).copy()
    params.add(name, Tensor(values))
  extra = reader.take(reader.u32()).decode('utf-8')
  if reader.pos != len(payload):
    raise CheckpointError('Checkpoint has trailing bytes after the text block')
  return params, extra
