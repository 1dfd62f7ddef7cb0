import re

import pandas as pd
import pytest

from sghmer.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from sghmer.corpus import EOS_ID, build_vocab, read_manifest
from sghmer.network import CheckpointMeta, Recognizer, TrainingState, save_checkpoint


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
  monkeypatch.chdir(tmp_path)
  for name in ('SGHMER_LOG_LEVEL', 'SGHMER_RENDER_WORKERS', 'SGHMER_MLFLOW_TRACKING_URI'):
    monkeypatch.delenv(name, raising=False)
  return tmp_path


@pytest.fixture(scope='module')
def corpus_dir(tmp_path_factory):
  out = tmp_path_factory.mktemp('synth')
  assert main(['synth', '--n', '3', '--seed', '7', '--out', str(out)]) == EXIT_OK
  return out


def _checkpoint(path, config, manifest, forced):
  """A checkpoint over the manifest vocab whose decoder always emits forced(vocab)."""
  vocab = build_vocab(entry.tokens for entry in read_manifest(manifest))
  model = Recognizer(config, len(vocab), seed=0)
  model.params['decoder.out.bias'].values[forced(vocab)] = 100.0
  save_checkpoint(path, model.params, CheckpointMeta(config, vocab, TrainingState()))
  return path


def test_unknown_command_is_a_usage_error(capsys):
  assert main(['transmogrify']) == EXIT_USAGE
  assert 'No such command' in capsys.readouterr().err


def test_help_succeeds(capsys):
  assert main(['--help']) == EXIT_OK
  out = capsys.readouterr().out
  for command in ('build-graph', 'synth', 'train', 'eval', 'infer', 'gradcheck', 'dump-attention', 'ablate'):
    assert command in out


def test_synth_is_reproducible(corpus_dir, tmp_path):
  again = tmp_path / 'again'
  assert main(['synth', '--n', '3', '--seed', '7', '--out', str(again)]) == EXIT_OK
  names = sorted(p.name for p in (corpus_dir / 'images').iterdir())
  assert len(names) == 3
  for name in names:
    assert (again / 'images' / name).read_bytes() == (corpus_dir / 'images' / name).read_bytes()
  assert (again / 'manifest.tsv').read_text() == (corpus_dir / 'manifest.tsv').read_text()


def test_vocab_graph_and_neighbors(corpus_dir, tmp_path, capsys):
  manifest = corpus_dir / 'manifest.tsv'
  vocab_path, graph_path = tmp_path / 'vocab.txt', tmp_path / 'corpus.graph'
  assert main(['build-vocab', '--manifest', str(manifest), '--out', str(vocab_path)]) == EXIT_OK
  assert main(['build-graph', '--manifest', str(manifest), '--out', str(graph_path), '--vocab', str(vocab_path)]) == 0
  symbol = read_manifest(manifest)[0].tokens[0]
  capsys.readouterr()
  assert main(['graph-neighbors', '--graph', str(graph_path), '--symbol', symbol, '--k', '2']) == EXIT_OK
  lines = capsys.readouterr().out.strip().splitlines()
  assert len(lines) == 2
  assert all(re.fullmatch(r'\S+\t\d\.\d{6}', line) for line in lines)


def test_eval_prints_a_single_exprate_line(corpus_dir, tmp_path, tiny_config, capsys):
  manifest = corpus_dir / 'manifest.tsv'
  ckpt = _checkpoint(tmp_path / 'stop.ckpt', tiny_config, manifest, lambda vocab: EOS_ID)
  capsys.readouterr()
  assert main(['eval', '--ckpt', str(ckpt), '--manifest', str(manifest)]) == EXIT_OK
  assert capsys.readouterr().out == 'ExpRate: 0.00\n'


def test_eval_report(corpus_dir, tmp_path, tiny_config):
  manifest = corpus_dir / 'manifest.tsv'
  ckpt = _checkpoint(tmp_path / 'stop.ckpt', tiny_config, manifest, lambda vocab: EOS_ID)
  report = tmp_path / 'report.csv'
  assert main(['eval', '--ckpt', str(ckpt), '--manifest', str(manifest), '--report', str(report)]) == EXIT_OK
  table = pd.read_csv(report)
  assert len(table) == 3
  assert not table['correct'].any()


def test_infer_and_attention_dump(corpus_dir, tmp_path, tiny_config, capsys):
  manifest = corpus_dir / 'manifest.tsv'
  first = read_manifest(manifest)[0]
  symbol = first.tokens[0]
  ckpt = _checkpoint(tmp_path / 'sym.ckpt', tiny_config, manifest, lambda vocab: vocab.id_of(symbol))
  image = corpus_dir / first.path

  capsys.readouterr()
  assert main(['infer', '--ckpt', str(ckpt), '--max-len', '2', str(image)]) == EXIT_OK
  assert capsys.readouterr().out == f'{image.stem}\t{symbol} {symbol}\n'

  out = tmp_path / 'attention'
  assert main(['dump-attention', '--ckpt', str(ckpt), '--image', str(image), '--out', str(out), '--max-len', '2']) == 0
  assert sorted(p.name for p in out.iterdir()) == [f'{image.stem}_0.pgm', f'{image.stem}_1.pgm']


def test_train_from_config_file(tmp_path, tiny_config, capsys):
  config = tiny_config.with_overrides([
    'data.synth_train = 2',
    'train.batch_size = 2',
    'train.epochs = 1',
    f'train.out_dir = {tmp_path / "run"}',
  ])
  path = tmp_path / 'tiny.conf'
  path.write_text(config.to_text(), encoding='utf-8')
  assert main(['train', '--config', str(path)]) == EXIT_OK
  assert 'Best ExpRate' in capsys.readouterr().out
  assert (tmp_path / 'run' / 'best.ckpt').exists()
  assert (tmp_path / 'run' / 'train_log.csv').exists()


def test_bad_override_is_a_usage_error(capsys):
  assert main(['train', '--set', 'train.nonsense=3']) == EXIT_USAGE
  assert 'unknown config key' in capsys.readouterr().err


def test_config_and_profile_together_rejected(tmp_path):
  path = tmp_path / 'empty.conf'
  path.write_text('', encoding='utf-8')
  assert main(['train', '--config', str(path), '--profile', 'overfit32']) == EXIT_USAGE


def test_corrupt_checkpoint_is_a_runtime_failure(corpus_dir, tmp_path, capsys):
  ckpt = tmp_path / 'broken.ckpt'
  ckpt.write_bytes(b'definitely not a checkpoint')
  assert main(['eval', '--ckpt', str(ckpt), '--manifest', str(corpus_dir / 'manifest.tsv')]) == EXIT_FAILURE
  err = capsys.readouterr().err.strip().splitlines()
  assert err[-1].startswith('Error: ')


def test_bad_seed_list_is_a_usage_error():
  assert main(['ablate', '--profile', 'overfit32', '--seeds', 'a,b']) == EXIT_USAGE


def test_gradcheck_passes(capsys):
  assert main(['gradcheck']) == EXIT_OK
  out = capsys.readouterr().out
  assert 'masked_softmax' in out
  assert 'FAIL' not in out
