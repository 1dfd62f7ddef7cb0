"""
Model checkpoints.

The binary record set holds every parameter (including batch-norm running
statistics) and, when training state is saved, `optim.eg2.<name>` and
`optim.edx2.<name>` accumulator records. The embedded text block carries three
sections: the experiment config, the training state and the vocab.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from sghmer.corpus.vocab import Vocab
from sghmer.models.experiment import ExperimentConfig
from sghmer.network.recognizer import Recognizer
from sghmer.tensor import CheckpointError, ParamSet

logger = logging.getLogger(__name__)

OPTIM_PREFIX = 'optim.'


@dataclass
class TrainingState:
  step: int = 0
  epoch: int = 0
  best_exprate: float = -1.0
  best_epoch: int = -1


@dataclass
class CheckpointMeta:
  config: ExperimentConfig
  vocab: Vocab
  state: TrainingState


def encode_meta(meta: CheckpointMeta) -> str:
  state = meta.state
  return (
    '[config]\n'
    + meta.config.to_text()
    + '[state]\n'
    + f'step = {state.step}\nepoch = {state.epoch}\n'
    + f'best_exprate = {state.best_exprate!r}\nbest_epoch = {state.best_epoch}\n'
    + '[vocab]\n'
    + ''.join(f'{s}\n' for s in meta.vocab.symbols)
  )


def decode_meta(text: str) -> CheckpointMeta:
  """
  Parse the embedded text block.

  Raises:
      CheckpointError: If a section is missing or malformed
  """
  sections: dict[str, list[str]] = {}
  current = None
  for line in text.splitlines():
    if line in ('[config]', '[state]', '[vocab]'):
      current = line[1:-1]
      sections[current] = []
    elif current is not None:
      sections[current].append(line)
  missing = {'config', 'state', 'vocab'} - set(sections)
  if missing:
    raise CheckpointError(f'Checkpoint text block lacks sections: {", ".join(sorted(missing))}')
  try:
    config = ExperimentConfig.from_text('\n'.join(sections['config']))
    fields = dict(line.split(' = ', 1) for line in sections['state'] if line)
    state = TrainingState(
      step=int(fields['step']),
      epoch=int(fields['epoch']),
      best_exprate=float(fields['best_exprate']),
      best_epoch=int(fields['best_epoch']),
    )
    vocab = Vocab([s for s in sections['vocab'] if s])
  except (KeyError, ValueError) as e:
    raise CheckpointError(f'Checkpoint text block is malformed: {e}') from e
  return CheckpointMeta(config, vocab, state)


def save_checkpoint(
  path: Union[str, Path],
  params: ParamSet,
  meta: CheckpointMeta,
  optimizer_records: Optional[ParamSet] = None,
) -> None:
  records = ParamSet(params.items())
  for name, tensor in (optimizer_records.items() if optimizer_records else ()):
    records.add(name, tensor)
  records.save(path, encode_meta(meta))
  logger.info(f'Saved checkpoint {path} (step {meta.state.step}, epoch {meta.state.epoch})')


@dataclass
class LoadedCheckpoint:
  recognizer: Recognizer
  meta: CheckpointMeta
  records: ParamSet

  @property
  def vocab(self) -> Vocab:
    return self.meta.vocab

  @property
  def config(self) -> ExperimentConfig:
    return self.meta.config


def load_checkpoint(path: Union[str, Path], with_sam: Optional[bool] = False) -> LoadedCheckpoint:
  """
  Rebuild a recognizer from a checkpoint.

  Args:
      path: Checkpoint file
      with_sam: Also build and load the SAM branches (None follows the config);
          otherwise `sam.*` records are ignored and may be absent

  Raises:
      CheckpointError: On a corrupt file or a missing recognition parameter
  """
  records, text = ParamSet.load(path)
  meta = decode_meta(text)
  recognizer = Recognizer(meta.config, len(meta.vocab), with_sam=with_sam)
  try:
    recognizer.params.copy_from(records)
  except ValueError as e:
    raise CheckpointError(f'Checkpoint {path} does not match its config: {e}') from e
  return LoadedCheckpoint(recognizer, meta, records)


def load_recognizer(path: Union[str, Path]) -> tuple[Recognizer, Vocab]:
  """Inference view of a checkpoint: the recognizer and its vocab."""
  loaded = load_checkpoint(path)
  return loaded.recognizer, loaded.vocab
