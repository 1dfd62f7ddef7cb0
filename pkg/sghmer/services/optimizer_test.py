import math

import numpy as np
import pytest

from sghmer.services.optimizer import Adadelta, OptState, adadelta_step, clip_grad_norm, lr_schedule
from sghmer.tensor import ParamSet, Tensor


def _params(*values):
  params = ParamSet()
  for i, v in enumerate(values):
    params.add(f'p{i}', Tensor(np.asarray(v, dtype=np.float64), requires_grad=True))
  return params


class TestAdadelta:
  def test_first_step_fixture(self, float64):
    params = _params([0.0])
    params['p0'].grad[...] = 1.0
    state = OptState.zeros(params)
    assert adadelta_step(params, state, 1.0)
    assert params['p0'].values[0] == pytest.approx(-0.0044721, abs=1e-7)
    assert state.eg2['p0'][0] == pytest.approx(0.05)

  def test_zero_gradient_only_decays_accumulators(self, float64):
    params = _params([1.0, -2.0])
    state = OptState.zeros(params)
    state.eg2['p0'][...] = 0.4
    state.edx2['p0'][...] = 0.2
    adadelta_step(params, state, 1.0)
    np.testing.assert_array_equal(params['p0'].values, [1.0, -2.0])
    np.testing.assert_allclose(state.eg2['p0'], 0.95 * 0.4)
    np.testing.assert_allclose(state.edx2['p0'], 0.95 * 0.2)

  def test_zero_multiplier_fills_accumulators_only(self, float64):
    params = _params([3.0])
    params['p0'].grad[...] = 2.0
    state = OptState.zeros(params)
    adadelta_step(params, state, 0.0)
    assert params['p0'].values[0] == 3.0
    assert state.eg2['p0'][0] > 0 and state.edx2['p0'][0] > 0

  def test_non_finite_gradient_rejects_step(self, float64):
    params = _params([1.0], [2.0])
    params['p0'].grad[...] = 1.0
    params['p1'].grad[...] = np.nan
    state = OptState.zeros(params)
    assert not adadelta_step(params, state, 1.0)
    assert params['p0'].values[0] == 1.0
    assert state.eg2['p0'][0] == 0.0

  def test_same_gradients_give_identical_parameters(self, float64):
    results = []
    for _ in range(2):
      rng = np.random.default_rng(3)
      params = _params(rng.normal(size=4))
      optimizer = Adadelta(params)
      for _ in range(100):
        params['p0'].grad[...] = rng.normal(size=4)
        optimizer.step(1.0)
      results.append(params['p0'].values.copy())
    np.testing.assert_array_equal(results[0], results[1])

  def test_records_round_trip(self, float64):
    params = _params([1.0, 2.0])
    state = OptState.zeros(params)
    state.eg2['p0'][...] = [0.5, 0.25]
    restored = OptState.zeros(params)
    restored.load_records(state.to_records())
    np.testing.assert_array_equal(restored.eg2['p0'], [0.5, 0.25])

  def test_missing_record_rejected(self, float64):
    state = OptState.zeros(_params([1.0]))
    with pytest.raises(ValueError, match='optim.eg2.p0'):
      state.load_records(ParamSet())


class TestSchedule:
  def test_starts_at_zero(self):
    assert lr_schedule(0, 10, 5) == 0.0

  def test_peaks_at_end_of_first_epoch(self):
    assert lr_schedule(10, 10, 5) == 1.0
    assert lr_schedule(5, 10, 5) == pytest.approx(0.5)

  def test_cosine_midpoint(self):
    assert lr_schedule(10 + 20, 10, 5) == pytest.approx(0.5, abs=1e-9)

  def test_ends_at_zero(self):
    assert lr_schedule(50, 10, 5) == pytest.approx(0.0, abs=1e-12)
    assert lr_schedule(80, 10, 5) == pytest.approx(0.0, abs=1e-12)

  def test_continuous_and_bounded(self):
    values = [lr_schedule(k, 7, 4) for k in range(29)]
    assert all(0.0 <= v <= 1.0 for v in values)
    assert max(abs(a - b) for a, b in zip(values, values[1:])) <= 1 / 7 + 1e-12

  def test_single_epoch_has_no_decay_phase(self):
    assert lr_schedule(4, 4, 1) == 1.0
    assert lr_schedule(5, 4, 1) == 0.0

  def test_invalid_sizes_rejected(self):
    with pytest.raises(ValueError, match='positive'):
      lr_schedule(0, 0, 3)


class TestClipping:
  def test_large_norm_is_rescaled(self, float64):
    params = _params([0.0, 0.0])
    params['p0'].grad[...] = [30.0, 40.0]
    assert clip_grad_norm(params, 10.0) == pytest.approx(50.0)
    np.testing.assert_allclose(params['p0'].grad, [6.0, 8.0])
    assert params.global_grad_norm() == pytest.approx(10.0)

  def test_small_norm_is_untouched(self, float64):
    params = _params([0.0])
    params['p0'].grad[...] = 3.0
    assert clip_grad_norm(params, 10.0) == pytest.approx(3.0)
    assert params['p0'].grad[0] == 3.0

  def test_non_finite_norm_is_reported_not_scaled(self, float64):
    params = _params([0.0])
    params['p0'].grad[...] = np.inf
    assert math.isinf(clip_grad_norm(params, 10.0))
