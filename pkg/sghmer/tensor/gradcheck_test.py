"""The gradient-check routine and the primitive registry."""

import numpy as np
import pytest

from sghmer.tensor import ops
from sghmer.tensor.gradcheck import PRIMITIVE_CHECKS, grad_check, relative_error, run_all
from sghmer.tensor.tensor import Tensor


def test_relative_error_floor():
  assert relative_error(np.array([0.0]), np.array([1e-12]))[0] == pytest.approx(1e-4)
  assert relative_error(np.array([2.0]), np.array([1.0]))[0] == pytest.approx(0.5)


def test_linear_function_has_no_error(float64, rng):
  x = Tensor(rng.normal(size=5), requires_grad=True)
  assert grad_check(lambda t: ops.sum(t), x) < 1e-9


def test_broken_adjoint_is_detected(float64, rng):
  x = Tensor(rng.uniform(0.5, 1.5, size=4), requires_grad=True)

  def wrong_square(t):
    # forward t², adjoint claims 3t
    return Tensor.from_op(t.values**2, (t,), lambda g: (g * 3 * t.values,))

  assert grad_check(lambda t: ops.sum(wrong_square(t)), x) > 0.1


@pytest.mark.parametrize('name', sorted(PRIMITIVE_CHECKS))
def test_every_registered_primitive_passes(float64, name):
  error = PRIMITIVE_CHECKS[name](np.random.default_rng(42))
  assert error < 1e-4, f'{name}: {error:.3e}'


def test_run_all_reports_every_primitive():
  results = run_all(seed=3)
  assert set(results) == set(PRIMITIVE_CHECKS)
  assert max(results.values()) < 1e-4
