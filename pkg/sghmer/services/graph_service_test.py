import numpy as np
import pytest

from sghmer.corpus import ManifestEntry, Vocab, build_vocab, make_batch, write_manifest
from sghmer.network import Recognizer
from sghmer.semgraph import load_graph, save_graph
from sghmer.services.graph_service import (
  build_graph_file,
  graph_for_expressions,
  graph_neighbors,
  resolve_graph,
  resolve_vocab,
)

EXPRESSIONS = [('a', 'b'), ('a', 'c')]


def _manifest(tmp_path):
  path = tmp_path / 'manifest.tsv'
  write_manifest(path, [ManifestEntry(f'img{i}.pgm', tokens) for i, tokens in enumerate(EXPRESSIONS)])
  return path


def test_graph_file_built_from_manifest_labels(tmp_path):
  out = tmp_path / 'corpus.graph'
  graph, vocab = build_graph_file(_manifest(tmp_path), out)
  assert vocab.symbols == ('<pad>', '<sos>', '<eos>', 'a', 'b', 'c')
  loaded, loaded_vocab = load_graph(out)
  assert loaded_vocab == vocab
  np.testing.assert_allclose(loaded, graph)
  a, b, c = (vocab.id_of(s) for s in 'abc')
  assert graph[a, b] == pytest.approx(0.75)
  assert graph[b, a] == pytest.approx(0.75)
  assert graph[b, c] == 0.0


def test_graph_indexed_by_given_vocab(tmp_path):
  vocab_path = tmp_path / 'vocab.txt'
  Vocab(['<pad>', '<sos>', '<eos>', 'c', 'b', 'a', 'z']).save(vocab_path)
  graph, vocab = build_graph_file(_manifest(tmp_path), tmp_path / 'g', vocab_path)
  assert graph.shape == (7, 7)
  assert vocab.id_of('a') == 5
  assert not graph[vocab.id_of('z')].any()


def test_vocab_built_when_unset(tmp_path):
  assert resolve_vocab('', EXPRESSIONS) == build_vocab(EXPRESSIONS)
  path = tmp_path / 'vocab.txt'
  build_vocab([('q',)]).save(path)
  assert resolve_vocab(str(path), EXPRESSIONS).symbols[-1] == 'q'


def test_loaded_graph_must_share_the_vocab(tmp_path):
  graph, vocab = graph_for_expressions(EXPRESSIONS)
  path = tmp_path / 'g'
  save_graph(graph, vocab, path)
  np.testing.assert_allclose(resolve_graph(str(path), vocab, EXPRESSIONS), graph)
  other = build_vocab([('a', 'b', 'd')])
  with pytest.raises(ValueError, match='does not match the training vocab'):
    resolve_graph(str(path), other, EXPRESSIONS)


def test_graph_built_when_unset():
  graph, vocab = graph_for_expressions(EXPRESSIONS)
  np.testing.assert_array_equal(resolve_graph('', vocab, EXPRESSIONS), graph)


def test_neighbors_read_from_graph_file(tmp_path):
  graph, vocab = graph_for_expressions(EXPRESSIONS)
  path = tmp_path / 'g'
  save_graph(graph, vocab, path)
  ranked = graph_neighbors(path, 'b', k=2)
  assert ranked[0] == ('a', pytest.approx(0.75))
  assert graph_neighbors(path, 'b', k=2) == ranked
  with pytest.raises(ValueError, match='not in vocab'):
    graph_neighbors(path, 'q')


def test_reloaded_graph_gives_the_same_sam_losses(tiny_config, tiny_corpus, tmp_path, float64):
  expressions = [s.tokens for s in tiny_corpus.train]
  graph, vocab = graph_for_expressions(expressions)
  path = tmp_path / 'train.graph'
  save_graph(graph, vocab, path)
  built = resolve_graph('', vocab, expressions)
  reloaded = resolve_graph(str(path), vocab, expressions)
  np.testing.assert_allclose(reloaded, built, rtol=1e-8)

  model = Recognizer(tiny_config, len(vocab), with_sam=True, seed=0)
  batch = make_batch(tiny_corpus.train[:2], vocab)
  from_memory = model.losses(batch, built, 'eval')
  from_file = model.losses(batch, reloaded, 'eval')
  assert from_file.vis == pytest.approx(from_memory.vis, abs=1e-7)
  assert from_file.cls == pytest.approx(from_memory.cls, abs=1e-7)
  assert from_file.total.item() == pytest.approx(from_memory.total.item(), abs=1e-7)
