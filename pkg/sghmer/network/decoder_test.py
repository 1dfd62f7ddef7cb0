import numpy as np
import pytest

from sghmer.models.experiment import DecoderConfig
from sghmer.network.decoder import AttentionDecoder
from sghmer.network.encoder import FeatureMap
from sghmer.tensor import ParamSet, Tensor

VOCAB_SIZE = 5


@pytest.fixture
def decoder(float64):
  config = DecoderConfig(hidden=6, embedding=4, attention_dim=5, max_len=10)
  return AttentionDecoder(ParamSet(), config, VOCAB_SIZE, 8, np.random.default_rng(7))


def _fmap(rng, mask=None):
  features = rng.normal(size=(2, 8, 3, 4))
  return FeatureMap(Tensor(features), np.ones((2, 3, 4)) if mask is None else mask)


def test_step_shapes(decoder, rng):
  prepared = decoder.prepare(_fmap(rng))
  out = decoder.step(np.array([1, 1]), decoder.initial_state(prepared.fmap), prepared)
  assert out.logits.shape == (2, VOCAB_SIZE)
  assert out.v_vis.shape == (2, 8)
  assert out.v_cls.shape == (2, 6)
  assert out.alpha.shape == (2, 3, 4)
  assert out.state.step == 1
  np.testing.assert_allclose(out.p_symbol.values.sum(axis=1), [1.0, 1.0])


def test_one_hot_attention_reads_that_position(decoder, rng):
  mask = np.zeros((2, 3, 4))
  mask[0, 2, 1] = 1
  mask[1, 0, 3] = 1
  fmap = _fmap(rng, mask)
  prepared = decoder.prepare(fmap)
  out = decoder.step(np.array([1, 1]), decoder.initial_state(fmap), prepared)
  features = fmap.features.values
  np.testing.assert_allclose(out.v_vis.values[0], features[0, :, 2, 1])
  np.testing.assert_allclose(out.v_vis.values[1], features[1, :, 0, 3])


def test_uniform_attention_reads_spatial_mean(decoder, rng):
  decoder.attention.energy.weight.values[...] = 0.0
  fmap = _fmap(rng)
  prepared = decoder.prepare(fmap)
  out = decoder.step(np.array([1, 2]), decoder.initial_state(fmap), prepared)
  np.testing.assert_allclose(out.v_vis.values, fmap.features.values.mean(axis=(2, 3)))


def test_coverage_accumulates_attention(decoder, rng):
  mask = np.ones((2, 3, 4))
  mask[0, :, 3] = 0
  fmap = _fmap(rng, mask)
  prepared = decoder.prepare(fmap)
  state = decoder.initial_state(fmap)
  alphas = []
  for y in ([1, 1], [3, 4], [0, 2]):
    out = decoder.step(np.array(y), state, prepared)
    alphas.append(out.alpha.values)
    state = out.state
  np.testing.assert_allclose(state.coverage.values, np.sum(alphas, axis=0))
  np.testing.assert_allclose(state.coverage.values.sum(axis=(1, 2)), [3.0, 3.0])
  np.testing.assert_array_equal(state.coverage.values[0, :, 3], 0.0)


def test_initial_state_is_bounded(decoder, rng):
  state = decoder.initial_state(_fmap(rng))
  assert state.h.shape == (2, 6)
  assert np.all(np.abs(state.h.values) < 1.0)
  np.testing.assert_array_equal(state.coverage.values, 0.0)


def test_initial_state_ignores_masked_positions(decoder, rng):
  mask = np.ones((2, 3, 4))
  mask[:, :, 2:] = 0
  fmap = _fmap(rng, mask)
  altered = fmap.features.values.copy()
  altered[:, :, :, 2:] += 100.0
  h = decoder.initial_state(fmap).h.values
  h_altered = decoder.initial_state(FeatureMap(Tensor(altered), mask)).h.values
  np.testing.assert_allclose(h, h_altered)


def test_sample_without_valid_position_rejected(decoder, rng):
  mask = np.ones((2, 3, 4))
  mask[0] = 0
  with pytest.raises(ValueError, match='zero valid positions'):
    decoder.initial_state(_fmap(rng, mask))


@pytest.mark.parametrize('y_prev', [[1, VOCAB_SIZE], [-1, 1]])
def test_previous_symbol_outside_vocab_rejected(decoder, rng, y_prev):
  prepared = decoder.prepare(_fmap(rng))
  with pytest.raises(ValueError, match='out of vocab range'):
    decoder.step(np.array(y_prev), decoder.initial_state(prepared.fmap), prepared)
