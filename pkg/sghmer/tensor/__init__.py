"""
Minimal reverse-mode autodiff engine.

Provides exactly the primitives the recognizer needs, named parameter sets with a
checksummed checkpoint format, and finite-difference gradient verification.
"""

from sghmer.tensor.gradcheck import PRIMITIVE_CHECKS, grad_check, grad_check_params, run_all
from sghmer.tensor.ops import BatchNormState, GRUParams
from sghmer.tensor.params import CheckpointError, ParamSet
from sghmer.tensor.tensor import (
  Tensor,
  as_tensor,
  get_dtype,
  get_profile,
  is_grad_enabled,
  no_grad,
  profile,
  set_profile,
)

__all__ = [
  'BatchNormState',
  'CheckpointError',
  'GRUParams',
  'PRIMITIVE_CHECKS',
  'ParamSet',
  'Tensor',
  'as_tensor',
  'get_dtype',
  'get_profile',
  'grad_check',
  'grad_check_params',
  'is_grad_enabled',
  'no_grad',
  'profile',
  'run_all',
  'set_profile',
]
