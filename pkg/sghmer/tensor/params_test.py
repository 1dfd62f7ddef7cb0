"""ParamSet bookkeeping and checkpoint round trips."""

import numpy as np
import pytest

from sghmer.tensor.params import MAGIC, CheckpointError, ParamSet
from sghmer.tensor.tensor import Tensor


@pytest.fixture
def params(rng):
  return ParamSet([
    ('decoder.gru1.w_z', Tensor(rng.normal(size=(4, 3)), requires_grad=True)),
    ('decoder.gru1.b_z', Tensor(rng.normal(size=4), requires_grad=True)),
    ('encoder.bn.running_mean', Tensor(rng.normal(size=2))),
    ('scalar', Tensor(np.float32(2.5), requires_grad=True)),
  ])


def test_iteration_order_is_insertion_order(params):
  assert params.names() == [
    'decoder.gru1.w_z',
    'decoder.gru1.b_z',
    'encoder.bn.running_mean',
    'scalar',
  ]


def test_duplicate_names_rejected(params):
  with pytest.raises(ValueError, match='Duplicate'):
    params.add('scalar', Tensor(1.0))


def test_trainable_excludes_running_stats(params):
  assert 'encoder.bn.running_mean' not in dict(params.trainable())


def test_save_load_save_is_byte_identical(params, tmp_path):
  first = tmp_path / 'a.ckpt'
  second = tmp_path / 'b.ckpt'
  params.save(first, extra_text='train.seed = 7\n')
  loaded, extra = ParamSet.load(first)
  loaded.save(second, extra_text=extra)
  assert first.read_bytes() == second.read_bytes()
  assert first.read_bytes().startswith(MAGIC)
  assert extra == 'train.seed = 7\n'


def test_loaded_values_match_at_32_bit(params, tmp_path):
  path = tmp_path / 'p.ckpt'
  params.save(path)
  loaded, _ = ParamSet.load(path)
  for name, tensor in params.items():
    np.testing.assert_array_equal(
      loaded[name].values.astype(np.float32), tensor.values.astype(np.float32)
    )
    assert loaded[name].shape == tensor.shape


def test_truncated_file_rejected(params, tmp_path):
  path = tmp_path / 'p.ckpt'
  params.save(path)
  path.write_bytes(path.read_bytes()[:-9])
  with pytest.raises(CheckpointError):
    ParamSet.load(path)


def test_bad_magic_rejected(tmp_path):
  path = tmp_path / 'p.ckpt'
  path.write_bytes(b'NOTACKPT' + b'\0' * 16)
  with pytest.raises(CheckpointError, match='magic'):
    ParamSet.load(path)


def test_corrupt_payload_fails_crc(params, tmp_path):
  path = tmp_path / 'p.ckpt'
  params.save(path)
  data = bytearray(path.read_bytes())
  data[len(MAGIC) + 10] ^= 0xFF
  path.write_bytes(bytes(data))
  with pytest.raises(CheckpointError, match='CRC'):
    ParamSet.load(path)


def test_copy_from_skips_allowed_prefixes(params, rng):
  target = ParamSet([
    ('decoder.gru1.w_z', Tensor(np.zeros((4, 3)))),
    ('sam.vis.l1.weight', Tensor(np.zeros((2, 2)))),
  ])
  missing = target.copy_from(params, skip_prefixes=('sam.',))
  assert missing == ['sam.vis.l1.weight']
  np.testing.assert_allclose(target['decoder.gru1.w_z'].values, params['decoder.gru1.w_z'].values)
  with pytest.raises(ValueError, match='missing'):
    target.copy_from(params)


def test_global_grad_norm(params):
  for _, tensor in params.trainable():
    tensor.grad = np.ones_like(tensor.values)
  assert params.global_grad_norm() == pytest.approx(np.sqrt(12 + 4 + 1))
