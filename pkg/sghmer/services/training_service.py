"""
Training loop.

Each epoch visits the training samples in the order default_rng([seed, epoch])
draws, one Adadelta update per batch. The loss is L_symbol + L_vis + L_cls
under teacher forcing. Every `validate_every` epochs (and after the last one)
the model greedy-decodes the validation set, falling back to the training set
when there is none. The epoch summary goes to `train_log.csv`, the best
validation ExpRate (ties to the earlier epoch) to `best.ckpt` and the final
state, optimizer accumulators included, to `last.ckpt`.
"""

import logging
import math
from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from sghmer.config import Settings
from sghmer.corpus import Sample, Vocab, make_batch
from sghmer.models.experiment import ExperimentConfig
from sghmer.network import (
  CheckpointMeta,
  NonFiniteLossError,
  Recognizer,
  TrainingState,
  save_checkpoint,
)
from sghmer.network.checkpoint import decode_meta
from sghmer.services.corpus_service import CorpusService, CorpusSplit
from sghmer.services.evaluation_service import EvaluationService
from sghmer.services.graph_service import resolve_graph, resolve_vocab
from sghmer.services.optimizer import Adadelta, clip_grad_norm, lr_schedule
from sghmer.tensor import ParamSet, profile

logger = logging.getLogger(__name__)

LOG_NAME = 'train_log.csv'
BEST_NAME = 'best.ckpt'
LAST_NAME = 'last.ckpt'
LOG_COLUMNS = ['epoch', 'step', 'L_symbol', 'L_vis', 'L_cls', 'ExpRate(val)']
GAP_COLUMNS = ['epoch', 'gap_vis', 'gap_cls']


@dataclass
class TrainResult:
  best_checkpoint: Path
  last_checkpoint: Path
  log_path: Path
  best_exprate: float
  history: pd.DataFrame
  # Mean |cos - G| per epoch of this call: epoch, gap_vis, gap_cls.
  gaps: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=GAP_COLUMNS))


@dataclass
class EpochStats:
  symbol: float = 0.0
  vis: float = 0.0
  cls: float = 0.0
  gap_vis: float = 0.0
  gap_cls: float = 0.0
  updates: int = 0
  skipped: int = 0

  def add(self, breakdown) -> None:
    self.symbol += breakdown.symbol
    self.vis += breakdown.vis
    self.cls += breakdown.cls
    self.gap_vis += breakdown.gap_vis
    self.gap_cls += breakdown.gap_cls
    self.updates += 1

  def mean(self, value: float) -> float:
    return value / self.updates if self.updates else math.nan


def batches_for_epoch(count: int, batch_size: int, seed: int, epoch: int) -> list[np.ndarray]:
  """Sample indices of every batch of an epoch; depends only on (seed, epoch)."""
  order = np.random.default_rng([seed, epoch]).permutation(count)
  return [order[i : i + batch_size] for i in range(0, count, batch_size)]


def append_log_row(path: Path, row: dict) -> None:
  frame = pd.DataFrame([row], columns=LOG_COLUMNS)
  frame.to_csv(path, mode='a', header=not path.exists(), index=False)


class TrainingService:
  """Owns the model, optimizer and data of one run."""

  def __init__(
    self,
    config: ExperimentConfig,
    settings: Optional[Settings] = None,
    corpus: Optional[CorpusSplit] = None,
  ):
    """
    Args:
        config: Experiment configuration
        settings: Process settings (render workers, MLflow); defaults apply when None
        corpus: Pre-loaded samples; loaded from config.data when None
    """
    self.config = config
    self.settings = settings or Settings()
    self.corpus = corpus
    self.out_dir = Path(config.train.out_dir)

  def train(self, resume: Optional[Union[str, Path]] = None) -> TrainResult:
    """
    Run (or continue) training.

    Args:
        resume: last.ckpt of an earlier run of the same config

    Returns:
        Paths of the artifacts and the per-epoch history

    Raises:
        ValueError: If the graph or checkpoint vocab does not match the data,
            or the resumed checkpoint was written by a different config
    """
    with profile(self.config.numeric.profile):
      return self._train(resume)

  def _train(self, resume: Optional[Union[str, Path]]) -> TrainResult:
    config = self.config
    corpus = self.corpus or CorpusService(config.data, self.settings.render_workers).load()
    expressions = [s.tokens for s in corpus.train]

    records, meta = self._read_resume(resume) if resume else (None, None)
    vocab = meta.vocab if meta else resolve_vocab(config.data.vocab, expressions)
    self._check_labels(corpus.train, vocab)
    with_sam = config.sam.enabled
    graph = resolve_graph(config.data.graph, vocab, expressions) if with_sam or config.data.graph else None
    if graph is not None and not with_sam:
      logger.warning(f'SAM is disabled; graph {config.data.graph} matches the vocab but is unused')
      graph = None

    model = Recognizer(config, len(vocab), with_sam=with_sam)
    optimizer = Adadelta(model.params, config.train.rho, config.train.eps)
    state = TrainingState()
    if meta is not None:
      model.params.copy_from(records)
      optimizer.state.load_records(records)
      state = meta.state
      logger.info(f'Resumed from {resume} at epoch {state.epoch}, step {state.step}')

    self.out_dir.mkdir(parents=True, exist_ok=True)
    log_path = self.out_dir / LOG_NAME
    if meta is None and log_path.exists():
      log_path.unlink()
    best_path, last_path = self.out_dir / BEST_NAME, self.out_dir / LAST_NAME

    steps_per_epoch = math.ceil(len(corpus.train) / config.train.batch_size)
    evaluator = EvaluationService(model, vocab, config.train.batch_size)
    tracker = self._tracking()
    gaps = []
    with tracker:
      for epoch in range(state.epoch + 1, config.train.epochs + 1):
        stats = self._run_epoch(model, optimizer, corpus.train, vocab, graph, state, epoch, steps_per_epoch)
        exprate = math.nan
        if epoch % config.train.validate_every == 0 or epoch == config.train.epochs:
          exprate = evaluator.evaluate(corpus.validation).exprate
        state.epoch = epoch
        if not math.isnan(exprate) and exprate > state.best_exprate:
          state.best_exprate, state.best_epoch = exprate, epoch
          save_checkpoint(best_path, model.params, CheckpointMeta(config, vocab, state))
        save_checkpoint(last_path, model.params, CheckpointMeta(config, vocab, state), optimizer.state.to_records())

        row = {
          'epoch': epoch,
          'step': state.step,
          'L_symbol': stats.mean(stats.symbol),
          'L_vis': stats.mean(stats.vis),
          'L_cls': stats.mean(stats.cls),
          'ExpRate(val)': exprate,
        }
        append_log_row(log_path, row)
        gaps.append({'epoch': epoch, 'gap_vis': stats.mean(stats.gap_vis), 'gap_cls': stats.mean(stats.gap_cls)})
        self._log_metrics(tracker, row, stats)
        logger.info(
          f'[TRAIN_EPOCH] epoch {epoch}/{config.train.epochs} step {state.step} '
          f'L_symbol {row["L_symbol"]:.4f} L_vis {row["L_vis"]:.4f} L_cls {row["L_cls"]:.4f} '
          f'ExpRate {exprate:.2f} gap vis/cls {stats.mean(stats.gap_vis):.4f}/{stats.mean(stats.gap_cls):.4f}'
        )

    if not best_path.exists():
      save_checkpoint(best_path, model.params, CheckpointMeta(config, vocab, state))
    history = pd.read_csv(log_path) if log_path.exists() else pd.DataFrame(columns=LOG_COLUMNS)
    return TrainResult(
      best_path, last_path, log_path, state.best_exprate, history, pd.DataFrame(gaps, columns=GAP_COLUMNS)
    )

  def _run_epoch(self, model, optimizer, samples, vocab, graph, state, epoch, steps_per_epoch) -> EpochStats:
    config = self.config.train
    stats = EpochStats()
    for indices in batches_for_epoch(len(samples), config.batch_size, config.seed, epoch):
      batch = make_batch([samples[i] for i in indices], vocab)
      model.params.zero_grad()
      try:
        breakdown = model.losses(batch, graph, 'train')
      except NonFiniteLossError as e:
        logger.warning(f'[TRAIN_SKIP] epoch {epoch} step {state.step}: {e}')
        stats.skipped += 1
        state.step += 1
        continue
      breakdown.total.backward()
      clip_grad_norm(model.params, config.clip_norm)
      if optimizer.step(lr_schedule(state.step, steps_per_epoch, config.epochs)):
        stats.add(breakdown)
      else:
        stats.skipped += 1
      state.step += 1
    return stats

  def _read_resume(self, path: Union[str, Path]) -> tuple[ParamSet, CheckpointMeta]:
    records, text = ParamSet.load(path)
    meta = decode_meta(text)
    extended = meta.config.with_overrides([
      f'train.epochs = {self.config.train.epochs}',
      f'train.out_dir = {self.config.train.out_dir}',
    ])
    if extended != self.config:
      raise ValueError(f'Checkpoint {path} was written by a different experiment config')
    return records, meta

  @staticmethod
  def _check_labels(samples: list[Sample], vocab: Vocab) -> None:
    unknown = sorted({t for s in samples for t in s.tokens if t not in vocab})
    if unknown:
      raise ValueError(f'Training labels use symbols missing from the vocab: {unknown[:10]}')

  def _tracking(self):
    """MLflow run context when a tracking URI is configured, else a no-op."""
    uri = self.settings.mlflow_tracking_uri
    if not uri:
      return nullcontext()
    import mlflow

    mlflow.set_tracking_uri(uri)
    run = mlflow.start_run(run_name=self.out_dir.name)
    mlflow.log_params({key: value for key, value in self.config.model_dump()['train'].items()})
    return run

  def _log_metrics(self, tracker, row: dict, stats: EpochStats) -> None:
    if isinstance(tracker, nullcontext):
      return
    import mlflow

    metrics = {key.replace('(', '_').replace(')', ''): value for key, value in row.items() if key != 'epoch'}
    metrics['gap_vis'] = stats.mean(stats.gap_vis)
    metrics['gap_cls'] = stats.mean(stats.gap_cls)
    mlflow.log_metrics({k: v for k, v in metrics.items() if not math.isnan(v)}, step=row['epoch'])
