"""
Command-line interface.

Exit codes: 0 on success, 1 on a usage error, 2 on a runtime failure.
"""

import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import click
from rich.console import Console
from rich.table import Table

from sghmer import __version__
from sghmer.config import configure_logging, load_settings

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2

config_option = click.option(
  '--config', 'config_path', type=click.Path(exists=True, dir_okay=False), help='Experiment config file'
)
profile_option = click.option('--profile', help='In-repo experiment profile (overfit32, synth-small, paper-parity)')
set_option = click.option('--set', 'overrides', multiple=True, metavar='KEY=VALUE', help='Config override; repeatable')


def _experiment(config_path: Optional[str], profile: Optional[str], overrides: Sequence[str]):
  from sghmer.models.experiment import load_experiment

  try:
    return load_experiment(config_path, profile, overrides)
  except ValueError as e:
    raise click.UsageError(str(e)) from e


def _read_images(paths: Sequence[str]):
  from sghmer.corpus import normalize_ink
  from sghmer.corpus.manifest import read_image

  return [normalize_ink(read_image(path)) for path in paths]


@click.group()
@click.version_option(__version__, prog_name='sghmer')
def cli() -> None:
  """Handwritten math expression recognition with semantic graph supervision."""
  configure_logging(load_settings().log_level)


@cli.command('build-vocab')
@click.option('--manifest', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--out', required=True, type=click.Path(dir_okay=False))
def build_vocab_command(manifest: str, out: str) -> None:
  """Write the vocab of a manifest's labels."""
  from sghmer.corpus import build_vocab, read_manifest

  vocab = build_vocab(entry.tokens for entry in read_manifest(manifest))
  vocab.save(out)
  click.echo(f'Wrote {len(vocab)} symbols to {out}')


@cli.command('build-graph')
@click.option('--manifest', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--out', required=True, type=click.Path(dir_okay=False))
@click.option('--vocab', 'vocab_path', type=click.Path(exists=True, dir_okay=False), help='Index by this vocab')
def build_graph_command(manifest: str, out: str, vocab_path: Optional[str]) -> None:
  """Build the semantic co-occurrence graph of a manifest's labels."""
  from sghmer.services.graph_service import build_graph_file

  _, vocab = build_graph_file(manifest, out, vocab_path)
  click.echo(f'Wrote {len(vocab)}-symbol graph to {out}')


@cli.command('graph-neighbors')
@click.option('--graph', 'graph_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--symbol', required=True)
@click.option('--k', default=5, show_default=True, type=click.IntRange(min=1))
def graph_neighbors_command(graph_path: str, symbol: str, k: int) -> None:
  """List the symbols most correlated with SYMBOL."""
  from sghmer.services.graph_service import graph_neighbors

  for neighbor, weight in graph_neighbors(graph_path, symbol, k):
    click.echo(f'{neighbor}\t{weight:.6f}')


@cli.command()
@click.option('--n', 'count', required=True, type=click.IntRange(min=1), help='Number of samples')
@click.option('--seed', default=0, show_default=True, type=click.IntRange(min=0))
@click.option('--out', required=True, type=click.Path(file_okay=False))
@click.option('--workers', type=click.IntRange(min=1), help='Render processes (default: SGHMER_RENDER_WORKERS)')
def synth(count: int, seed: int, out: str, workers: Optional[int]) -> None:
  """Render a synthetic corpus: PGM images plus a manifest."""
  from sghmer.services.corpus_service import write_synthetic

  manifest = write_synthetic(out, count, seed, workers or load_settings().render_workers)
  click.echo(f'Wrote {count} samples and {manifest}')


@cli.command()
@config_option
@profile_option
@set_option
@click.option('--resume', type=click.Path(exists=True, dir_okay=False), help='last.ckpt of an earlier run')
def train(
  config_path: Optional[str],
  profile: Optional[str],
  overrides: tuple[str, ...],
  resume: Optional[str],
) -> None:
  """Train a recognizer."""
  from sghmer.services.training_service import TrainingService

  config = _experiment(config_path, profile, overrides)
  result = TrainingService(config, load_settings()).train(resume)
  click.echo(f'Best ExpRate {result.best_exprate:.2f} -> {result.best_checkpoint}')


@cli.command('eval')
@click.option('--ckpt', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--manifest', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--report', type=click.Path(dir_okay=False), help='Write the per-sample outcome table as CSV')
@click.option('--batch-size', default=8, show_default=True, type=click.IntRange(min=1))
@click.option('--max-len', type=click.IntRange(min=1), help='Greedy decoding step limit')
def eval_command(ckpt: str, manifest: str, report: Optional[str], batch_size: int, max_len: Optional[int]) -> None:
  """Greedy-decode a manifest and print its ExpRate."""
  from sghmer.corpus import load_manifest_samples
  from sghmer.network import load_recognizer
  from sghmer.services.evaluation_service import EvaluationService, print_buckets

  recognizer, vocab = load_recognizer(ckpt)
  result = EvaluationService(recognizer, vocab, batch_size, max_len).evaluate(load_manifest_samples(manifest))
  click.echo(f'ExpRate: {result.exprate:.2f}')
  if report:
    result.write_csv(report)
    print_buckets(result)


@cli.command()
@click.option('--ckpt', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--max-len', type=click.IntRange(min=1), help='Greedy decoding step limit')
@click.argument('images', nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
def infer(ckpt: str, max_len: Optional[int], images: tuple[str, ...]) -> None:
  """Recognize IMAGES; prints `<name>\\t<latex>` per image."""
  from sghmer.services.inference_service import InferenceService

  names = [Path(path).stem for path in images]
  for recognition in InferenceService().recognize_images(ckpt, _read_images(images), names, max_len):
    click.echo(f'{recognition.name}\t{recognition.latex}')


@cli.command('dump-attention')
@click.option('--ckpt', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--image', 'image_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--out', required=True, type=click.Path(file_okay=False))
@click.option('--max-len', type=click.IntRange(min=1), help='Greedy decoding step limit')
def dump_attention(ckpt: str, image_path: str, out: str, max_len: Optional[int]) -> None:
  """Write one attention heatmap per decoding step."""
  from sghmer.services.inference_service import InferenceService

  (image,) = _read_images([image_path])
  name = Path(image_path).stem
  recognition, paths = InferenceService().dump_attention(ckpt, image, out, name, max_len)
  click.echo(f'{name}\t{recognition.latex}')
  click.echo(f'Wrote {len(paths)} attention maps to {out}')


@cli.command()
@click.option('--seed', default=0, show_default=True, type=click.IntRange(min=0))
def gradcheck(seed: int) -> None:
  """Compare analytic and finite-difference gradients of every primitive."""
  from sghmer.tensor.gradcheck import PRIMITIVE_TOLERANCE, run_all

  results = run_all(seed)
  table = Table(title=f'Gradient check (max relative error, tolerance {PRIMITIVE_TOLERANCE:.0e})')
  table.add_column('primitive')
  table.add_column('max rel err', justify='right')
  table.add_column('status')
  for name, error in results.items():
    ok = error < PRIMITIVE_TOLERANCE
    table.add_row(name, f'{error:.3e}', '[green]ok[/green]' if ok else '[red]FAIL[/red]')
  Console().print(table)
  failed = [name for name, error in results.items() if not error < PRIMITIVE_TOLERANCE]
  if failed:
    raise click.ClickException(f'gradient check failed for: {", ".join(failed)}')


@cli.command()
@config_option
@profile_option
@set_option
@click.option('--seeds', default='0,1,2', show_default=True, help='Comma-separated training seeds')
@click.option('--out', default='runs/ablation', show_default=True, type=click.Path(file_okay=False))
def ablate(
  config_path: Optional[str],
  profile: Optional[str],
  overrides: tuple[str, ...],
  seeds: str,
  out: str,
) -> None:
  """Train the baseline / vis / cls / sam variants for every seed."""
  from sghmer.services.ablation_service import print_summary, run_ablation

  try:
    seed_list = [int(s) for s in seeds.split(',') if s.strip()]
  except ValueError as e:
    raise click.BadParameter(f'expected comma-separated integers, got {seeds!r}', param_hint='--seeds') from e
  config = _experiment(config_path, profile, overrides)
  table = run_ablation(config, seed_list, out, settings=load_settings())
  print_summary(table)
  click.echo(f'Wrote {Path(out) / "ablation.csv"}')


@cli.command()
@click.option('--ckpt', type=click.Path(exists=True, dir_okay=False), help='Checkpoint to serve')
@click.option('--graph', 'graph_path', type=click.Path(exists=True, dir_okay=False), help='Semantic graph to serve')
@click.option('--host', default='127.0.0.1', show_default=True)
@click.option('--port', default=8000, show_default=True, type=click.IntRange(1, 65535))
def serve(ckpt: Optional[str], graph_path: Optional[str], host: str, port: int) -> None:
  """Serve recognition over HTTP."""
  import uvicorn

  from sghmer.app import app
  from sghmer.config import get_settings

  updates = {key: value for key, value in (('checkpoint', ckpt), ('graph', graph_path)) if value}
  settings = load_settings().model_copy(update=updates)
  app.dependency_overrides[get_settings] = lambda: settings
  uvicorn.run(app, host=host, port=port)


def main(argv: Optional[Sequence[str]] = None) -> int:
  """Run the CLI and map outcomes to exit codes."""
  try:
    result = cli.main(args=list(argv) if argv is not None else None, prog_name='sghmer', standalone_mode=False)
  except click.UsageError as e:
    e.show()
    return EXIT_USAGE
  except click.ClickException as e:
    e.show()
    return EXIT_FAILURE
  except click.Abort:
    click.echo('Aborted!', err=True)
    return EXIT_FAILURE
  except Exception as e:
    logger.debug('Command failed', exc_info=True)
    click.echo(f'Error: {e}', err=True)
    return EXIT_FAILURE
  return result if isinstance(result, int) else EXIT_OK


if __name__ == '__main__':
  sys.exit(main())
