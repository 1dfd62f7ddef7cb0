import io

import numpy as np
import pytest
from PIL import Image

from sghmer.corpus import EOS_ID, build_vocab, read_pgm
from sghmer.network import CheckpointMeta, Recognizer, TrainingState, save_checkpoint
from sghmer.services.inference_service import InferenceService, attention_image


@pytest.fixture
def checkpoint(tiny_config, tmp_path, float64):
  """A checkpoint whose decoder always emits `x`, or eos when `stop` is set."""

  def write(stop: bool = False):
    vocab = build_vocab([('x', 'y')])
    model = Recognizer(tiny_config, len(vocab), seed=0)
    model.params['decoder.out.bias'].values[EOS_ID if stop else vocab.id_of('x')] = 100.0
    path = tmp_path / ('stop.ckpt' if stop else 'x.ckpt')
    save_checkpoint(path, model.params, CheckpointMeta(tiny_config, vocab, TrainingState()))
    return path

  return write


def _png(dark_on_light: bool) -> bytes:
  pixels = np.zeros((40, 48), dtype=np.uint8)
  pixels[10:30, 20:24] = 255
  if dark_on_light:
    pixels = 255 - pixels
  buffer = io.BytesIO()
  Image.fromarray(pixels).save(buffer, format='PNG')
  return buffer.getvalue()


def test_attention_image_upsamples_and_normalizes():
  alpha = np.array([[0.1, 0.3], [0.2, 0.4]])
  grid = attention_image(alpha, (20, 30))
  assert grid.shape == (20, 30)
  assert grid.max() == pytest.approx(1.0)
  assert grid[0, 0] == pytest.approx(0.25)
  assert grid[17, 17] == pytest.approx(1.0)


def test_recognize_bytes_decodes_upload(checkpoint):
  service = InferenceService()
  path = checkpoint(stop=True)
  for dark_on_light in (False, True):
    recognition = service.recognize_bytes(path, _png(dark_on_light), name='scan')
    assert recognition.name == 'scan'
    assert recognition.tokens == []
    assert recognition.latex == ''
    assert recognition.symbolCount == 0


def test_recognize_images_respects_max_len(checkpoint):
  service = InferenceService()
  images = [np.zeros((32, 32), dtype=np.float32), np.zeros((48, 64), dtype=np.float32)]
  results = service.recognize_images(checkpoint(), images, max_len=2)
  assert [r.name for r in results] == ['image0', 'image1']
  assert all(r.tokens == ['x', 'x'] for r in results)
  assert all(len(r.confidences) == 2 for r in results)


def test_undecodable_upload_rejected(checkpoint):
  with pytest.raises(ValueError, match='Cannot decode'):
    InferenceService().recognize_bytes(checkpoint(), b'not an image')


def test_checkpoint_loaded_once(checkpoint):
  service = InferenceService()
  path = checkpoint()
  assert service.load(path) is service.load(path)


def test_missing_checkpoint_rejected(tmp_path):
  with pytest.raises(FileNotFoundError):
    InferenceService().load(tmp_path / 'absent.ckpt')


def test_attention_dump_writes_one_map_per_step(checkpoint, tmp_path):
  image = np.zeros((40, 56), dtype=np.float32)
  recognition, paths = InferenceService().dump_attention(checkpoint(), image, tmp_path / 'att', 'expr', max_len=3)
  assert recognition.tokens == ['x', 'x', 'x']
  assert [p.name for p in paths] == ['expr_0.pgm', 'expr_1.pgm', 'expr_2.pgm']
  for path in paths:
    grid = read_pgm(path)
    assert grid.shape == (40, 56)
    assert grid.max() == pytest.approx(1.0)
