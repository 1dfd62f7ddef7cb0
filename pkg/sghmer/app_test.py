import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from sghmer.app import app
from sghmer.config import Settings, get_settings
from sghmer.corpus import build_vocab
from sghmer.network import CheckpointMeta, Recognizer, TrainingState, save_checkpoint
from sghmer.services.graph_service import graph_for_expressions
from sghmer.semgraph import save_graph

EXPRESSIONS = [('x', '+', '1'), ('x', '-', 'y'), ('y', '+', '1')]


@pytest.fixture
def served(tiny_config, tmp_path, monkeypatch):
  """Serve a tiny checkpoint whose decoder always emits `x`."""
  monkeypatch.chdir(tmp_path)
  vocab = build_vocab(EXPRESSIONS)
  model = Recognizer(tiny_config, len(vocab), seed=0)
  model.params['decoder.out.bias'].values[vocab.id_of('x')] = 100.0
  checkpoint = tmp_path / 'model.ckpt'
  save_checkpoint(checkpoint, model.params, CheckpointMeta(tiny_config, vocab, TrainingState()))
  graph_path = tmp_path / 'corpus.graph'
  save_graph(*graph_for_expressions(EXPRESSIONS, vocab), graph_path)

  def use(**values):
    settings = Settings(**values)
    app.dependency_overrides[get_settings] = lambda: settings
    return TestClient(app)

  yield use, str(checkpoint), str(graph_path)
  app.dependency_overrides.clear()


def _png(height: int = 40, width: int = 48) -> bytes:
  pixels = np.full((height, width), 255, dtype=np.uint8)
  pixels[10:30, 20:24] = 0
  buffer = io.BytesIO()
  Image.fromarray(pixels).save(buffer, format='PNG')
  return buffer.getvalue()


def test_health_reports_configuration(served):
  use, checkpoint, graph = served
  response = use(checkpoint=checkpoint, graph=graph).get('/health')
  assert response.status_code == 200
  assert response.json() == {'status': 'healthy', 'checkpoint': checkpoint, 'graph': graph}


def test_recognize_upload(served):
  use, checkpoint, _ = served
  client = use(checkpoint=checkpoint)
  response = client.post('/api/recognize?max_len=2', files={'image': ('scan.png', _png(), 'image/png')})
  assert response.status_code == 200
  body = response.json()
  assert body['checkpoint'] == checkpoint
  assert body['recognition']['name'] == 'scan.png'
  assert body['recognition']['tokens'] == ['x', 'x']
  assert body['recognition']['latex'] == 'x x'
  assert body['recognition']['symbolCount'] == 2
  assert len(body['recognition']['confidences']) == 2


def test_undecodable_upload_is_a_client_error(served):
  use, checkpoint, _ = served
  response = use(checkpoint=checkpoint).post(
    '/api/recognize', files={'image': ('notes.txt', b'plain text', 'text/plain')}
  )
  assert response.status_code == 400
  assert 'Cannot decode' in response.json()['detail']


def test_too_small_upload_is_a_client_error(served):
  use, checkpoint, _ = served
  response = use(checkpoint=checkpoint).post('/api/recognize', files={'image': ('tiny.png', _png(16, 16), 'image/png')})
  assert response.status_code == 400


def test_recognize_without_checkpoint_is_unavailable(served):
  use, _, _ = served
  response = use().post('/api/recognize', files={'image': ('scan.png', _png(), 'image/png')})
  assert response.status_code == 503


def test_missing_checkpoint_file_is_a_server_error(served, tmp_path):
  use, _, _ = served
  client = use(checkpoint=str(tmp_path / 'absent.ckpt'))
  response = client.post('/api/recognize', files={'image': ('scan.png', _png(), 'image/png')})
  assert response.status_code == 500


def test_graph_neighbors(served):
  use, _, graph = served
  response = use(graph=graph).get('/api/graph/neighbors', params={'symbol': '+', 'k': 2})
  assert response.status_code == 200
  body = response.json()
  assert body['symbol'] == '+'
  assert [n['symbol'] for n in body['neighbors']] == ['1', 'x']
  assert body['neighbors'][0]['weight'] == pytest.approx(1.0)


def test_unknown_symbol_is_a_client_error(served):
  use, _, graph = served
  response = use(graph=graph).get('/api/graph/neighbors', params={'symbol': 'zeta'})
  assert response.status_code == 400


def test_neighbors_without_graph_is_unavailable(served):
  use, _, _ = served
  assert use().get('/api/graph/neighbors', params={'symbol': 'x'}).status_code == 503
