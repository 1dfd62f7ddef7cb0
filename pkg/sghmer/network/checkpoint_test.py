import numpy as np
import pytest

from sghmer.corpus.batching import Batch
from sghmer.corpus.vocab import Vocab
from sghmer.network.checkpoint import (
  CheckpointMeta,
  TrainingState,
  decode_meta,
  encode_meta,
  load_checkpoint,
  load_recognizer,
  save_checkpoint,
)
from sghmer.network.recognizer import Recognizer
from sghmer.tensor import CheckpointError, ParamSet, Tensor

VOCAB = Vocab(['<pad>', '<sos>', '<eos>', 'a', 'b'])


def _meta(config, **state):
  return CheckpointMeta(config=config, vocab=VOCAB, state=TrainingState(**state))


def _batch(rng):
  return Batch(
    images=rng.random((1, 1, 32, 32)).astype(np.float32),
    image_mask=np.ones((1, 32, 32), dtype=np.float32),
    targets=np.array([[3, 2]]),
    target_mask=np.ones((1, 2), dtype=np.float32),
  )


def test_meta_round_trip(tiny_config):
  meta = _meta(tiny_config, step=7, epoch=2, best_exprate=0.5, best_epoch=1)
  decoded = decode_meta(encode_meta(meta))
  assert decoded.config == tiny_config
  assert decoded.vocab == VOCAB
  assert decoded.state == meta.state


def test_meta_missing_section_rejected(tiny_config):
  text = encode_meta(_meta(tiny_config)).split('[vocab]')[0]
  with pytest.raises(CheckpointError, match='vocab'):
    decode_meta(text)


def test_loaded_recognizer_predicts_identically(tiny_config, tmp_path, rng):
  model = Recognizer(tiny_config, len(VOCAB), seed=9)
  path = tmp_path / 'model.ckpt'
  save_checkpoint(path, model.params, _meta(tiny_config, step=3))
  loaded, vocab = load_recognizer(path)
  batch = _batch(rng)
  assert vocab == VOCAB
  assert loaded.sam is None
  assert [d.ids for d in loaded.recognize(batch, 5)] == [d.ids for d in model.recognize(batch, 5)]


def test_inference_load_needs_no_sam_records(tiny_config, tmp_path):
  model = Recognizer(tiny_config, len(VOCAB), with_sam=False, seed=9)
  path = tmp_path / 'plain.ckpt'
  save_checkpoint(path, model.params, _meta(tiny_config))
  assert load_checkpoint(path).recognizer.params.names() == model.params.names()
  with pytest.raises(CheckpointError, match='does not match'):
    load_checkpoint(path, with_sam=True)


def test_optimizer_records_are_carried(tiny_config, tmp_path):
  model = Recognizer(tiny_config, len(VOCAB), seed=9)
  records = ParamSet([('optim.eg2.decoder.out.bias', Tensor(np.full(len(VOCAB), 0.25)))])
  path = tmp_path / 'train.ckpt'
  save_checkpoint(path, model.params, _meta(tiny_config, step=12), records)
  loaded = load_checkpoint(path, with_sam=None)
  assert loaded.meta.state.step == 12
  assert loaded.recognizer.sam is not None
  np.testing.assert_array_equal(loaded.records['optim.eg2.decoder.out.bias'].values, 0.25)
