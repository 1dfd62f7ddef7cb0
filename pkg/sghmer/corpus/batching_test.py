import numpy as np
import pytest

from sghmer.corpus.batching import Sample, make_batch, make_image_batch
from sghmer.corpus.vocab import EOS_ID, PAD_ID, build_vocab


@pytest.fixture
def vocab():
  return build_vocab([['a', 'b', 'c', 'd', 'e']])


def _sample(h, w, tokens, name='s', fill=0.5):
  return Sample(name=name, image=np.full((h, w), fill, dtype=np.float32), tokens=tuple(tokens))


def test_single_sample_padded_to_multiple_of_16(vocab):
  batch = make_batch([_sample(40, 40, 'a')], vocab)
  assert batch.images.shape == (1, 1, 48, 48)
  assert batch.image_mask.sum() == 1600
  assert batch.image_mask[0, :40, :40].all()
  assert batch.images[0, 0, 40:, :].sum() == 0
  assert batch.images[0, 0, :, 40:].sum() == 0


def test_targets_end_with_eos_then_pad(vocab):
  batch = make_batch([_sample(32, 32, 'abc'), _sample(32, 32, 'abcde')], vocab)
  assert batch.targets.shape == (2, 6)
  assert batch.target_mask.sum(axis=1).tolist() == [4, 6]
  assert batch.targets[0].tolist() == [*vocab.encode('abc'), EOS_ID, PAD_ID, PAD_ID]
  assert batch.targets[1, -1] == EOS_ID


def test_identical_samples_give_identical_rows(vocab):
  batch = make_batch([_sample(33, 50, 'ab')] * 3, vocab)
  for array in (batch.images, batch.image_mask, batch.targets, batch.target_mask):
    assert (array == array[0]).all()


def test_mask_invariants_on_random_batches(vocab, rng):
  for _ in range(20):
    samples = [
      _sample(int(rng.integers(32, 90)), int(rng.integers(32, 130)), 'abcde'[: int(rng.integers(1, 6))])
      for _ in range(int(rng.integers(1, 5)))
    ]
    batch = make_batch(samples, vocab)
    _, _, h, w = batch.images.shape
    assert h % 16 == 0 and w % 16 == 0
    for row, sample in enumerate(samples):
      sh, sw = sample.image.shape
      assert batch.image_mask[row].sum() == sh * sw
      assert batch.image_mask[row, :sh, :sw].all()
      assert batch.target_mask[row].sum() == len(sample.tokens) + 1
    assert ((batch.images[:, 0] != 0) <= (batch.image_mask == 1)).all()
    assert (batch.targets[batch.target_mask == 0] == PAD_ID).all()


def test_select_permutes_rows(vocab):
  batch = make_batch([_sample(32, 32, 'a', 'first'), _sample(48, 32, 'bc', 'second')], vocab)
  swapped = batch.select([1, 0])
  assert swapped.names == ['second', 'first']
  np.testing.assert_array_equal(swapped.targets[0], batch.targets[1])


def test_empty_batch_rejected(vocab):
  with pytest.raises(ValueError):
    make_batch([], vocab)


def test_small_sample_rejected():
  with pytest.raises(ValueError, match='smaller than 32x32'):
    _sample(31, 40, 'a')


def test_unknown_symbol_rejected(vocab):
  with pytest.raises(ValueError, match="'z'"):
    make_batch([_sample(32, 32, 'az')], vocab)


def test_image_batch_pads_without_targets():
  images = [np.ones((32, 40), dtype=np.float32), np.ones((50, 32), dtype=np.float32)]
  batch = make_image_batch(images, ['x', 'y'])
  assert batch.images.shape == (2, 1, 64, 48)
  assert batch.image_mask[1].sum() == 50 * 32
  assert batch.steps == 1
  assert batch.target_mask.sum() == 0
  assert batch.names == ['x', 'y']


def test_image_batch_rejects_small_image():
  with pytest.raises(ValueError, match='at least 32x32'):
    make_image_batch([np.ones((16, 64))])
