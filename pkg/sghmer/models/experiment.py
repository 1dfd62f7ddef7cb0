"""
Experiment configuration.

An experiment is described by six sections (encoder, decoder, sam, train, data,
numeric). The on-disk form is line-based UTF-8 text of dotted `key = value`
pairs; `#` starts a comment. The same text is embedded in every checkpoint.
"""

import logging
import re
from pathlib import Path
from typing import Annotated, Iterable, Literal, Optional, Union

from pydantic import AfterValidator, BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

PROFILE_DIR = Path(__file__).resolve().parent.parent / 'profiles'

# Dense blocks in the encoder; with the stride-2 stem, the stem pool and two
# transitions the spatial reduction is exactly 16.
DENSE_BLOCKS = 3
DOWNSAMPLE = 16


class _Section(BaseModel):
  model_config = ConfigDict(extra='forbid', frozen=True)


def _odd(v: int) -> int:
  if v % 2 == 0:
    raise ValueError(f'must be odd, got {v}')
  return v


OddInt = Annotated[int, Field(gt=0), AfterValidator(_odd)]


class EncoderConfig(_Section):
  """DenseNet-lite encoder."""

  growth_rate: int = Field(24, gt=0, description='Channels added by each dense layer')
  layers_per_block: int = Field(4, gt=0, description='3×3 layers in each of the three dense blocks')
  stem_channels: int = Field(48, gt=0, description='Output channels of the stride-2 stem convolution')
  stem_kernel: OddInt = Field(7, description='Stem kernel extent (odd)')
  out_channels: int = Field(128, gt=0, description='Feature map channels C')


class DecoderConfig(_Section):
  """Coverage-attention GRU decoder."""

  hidden: int = Field(256, gt=0, description='GRU hidden size, also the v_cls width')
  embedding: int = Field(256, gt=0, description='Symbol embedding width')
  attention_dim: int = Field(512, gt=0, description='Attention hidden width')
  coverage_kernel: OddInt = Field(1, description='Coverage transform kernel (1 = per-position linear)')
  max_len: int = Field(200, gt=0, description='Greedy decoding step limit')


class SamConfig(_Section):
  """Semantic aware projection branches, training only."""

  enable_vis: bool = Field(True, description='Regress visual-context similarities onto the graph')
  enable_cls: bool = Field(True, description='Regress classification-feature similarities onto the graph')
  hidden: int = Field(512, gt=0, description='Width of the two LBR blocks')
  dim: int = Field(256, gt=0, description='Semantic projection width d_sem')
  loss_reduction: Literal['mean', 'sum'] = Field('mean', description='Normalize over valid pairs or sum them')

  @property
  def enabled(self) -> bool:
    return self.enable_vis or self.enable_cls


class TrainConfig(_Section):
  batch_size: int = Field(8, gt=0)
  epochs: int = Field(10, gt=0)
  rho: float = Field(0.95, gt=0, lt=1, description='Adadelta decay')
  eps: float = Field(1e-6, gt=0, description='Adadelta epsilon')
  seed: int = Field(0, ge=0)
  clip_norm: float = Field(100.0, gt=0, description='Global gradient-norm clip')
  out_dir: str = Field('runs/default', min_length=1)
  validate_every: int = Field(1, gt=0, description='Epochs between validations')


class DataConfig(_Section):
  """Data sources; empty manifests fall back to rendered synthetic samples."""

  train_manifest: str = ''
  val_manifest: str = ''
  graph: str = Field('', description='Semantic graph file; built from the training corpus when empty')
  vocab: str = Field('', description='Vocab file; built from the training corpus when empty')
  synth_train: int = Field(0, ge=0)
  synth_val: int = Field(0, ge=0)
  synth_seed: int = Field(0, ge=0)


class NumericConfig(_Section):
  profile: Literal['float32', 'float64'] = 'float32'


SECTIONS = ('encoder', 'decoder', 'sam', 'train', 'data', 'numeric')


class ExperimentConfig(BaseModel):
  """Every setting of a training or evaluation run."""

  model_config = ConfigDict(extra='forbid', frozen=True)

  encoder: EncoderConfig = Field(default_factory=EncoderConfig)
  decoder: DecoderConfig = Field(default_factory=DecoderConfig)
  sam: SamConfig = Field(default_factory=SamConfig)
  train: TrainConfig = Field(default_factory=TrainConfig)
  data: DataConfig = Field(default_factory=DataConfig)
  numeric: NumericConfig = Field(default_factory=NumericConfig)

  def to_text(self) -> str:
    """Every key in fixed section and field order."""
    lines = []
    for section in SECTIONS:
      for name, value in getattr(self, section).model_dump().items():
        lines.append(f'{section}.{name} = {_format_value(value)}')
    return '\n'.join(lines) + '\n'

  @classmethod
  def from_text(cls, text: str, overrides: Iterable[str] = ()) -> 'ExperimentConfig':
    """
    Parse `key = value` text, then apply `key=value` overrides.

    Raises:
        ValueError: On malformed lines, unknown or duplicate keys, or invalid values
    """
    values = _parse_lines(text.splitlines(), source='config')
    for number, override in enumerate(overrides, start=1):
      key, value = _split_pair(override, f'--set #{number}')
      values[key] = value
    nested: dict[str, dict[str, str]] = {section: {} for section in SECTIONS}
    for key, value in values.items():
      section, name = key.split('.', 1)
      nested[section][name] = value
    return cls.model_validate(nested)

  @classmethod
  def from_file(cls, path: Union[str, Path], overrides: Iterable[str] = ()) -> 'ExperimentConfig':
    return cls.from_text(Path(path).read_text(encoding='utf-8'), overrides)

  def with_overrides(self, overrides: Iterable[str]) -> 'ExperimentConfig':
    return ExperimentConfig.from_text(self.to_text(), overrides)


def _format_value(value) -> str:
  if isinstance(value, bool):
    return 'true' if value else 'false'
  if isinstance(value, float):
    return repr(value)
  return str(value)


def _known_keys() -> set[str]:
  return {
    f'{section}.{name}'
    for section in SECTIONS
    for name in ExperimentConfig.model_fields[section].annotation.model_fields
  }


def _split_pair(line: str, where: str) -> tuple[str, str]:
  if '=' not in line:
    raise ValueError(f'{where}: expected "key = value", got {line!r}')
  key, value = (part.strip() for part in line.split('=', 1))
  if key not in _known_keys():
    raise ValueError(f'{where}: unknown config key {key!r}')
  return key, value


# '#' starts a comment only at line start or after whitespace.
_COMMENT = re.compile(r'(?:^|\s)#.*$')


def _parse_lines(lines: Iterable[str], source: str) -> dict[str, str]:
  values: dict[str, str] = {}
  for number, raw in enumerate(lines, start=1):
    line = _COMMENT.sub('', raw).strip()
    if not line:
      continue
    key, value = _split_pair(line, f'{source}:{number}')
    if key in values:
      raise ValueError(f'{source}:{number}: duplicate config key {key!r}')
    values[key] = value
  return values


def list_profiles() -> list[str]:
  return sorted(p.stem for p in PROFILE_DIR.glob('*.conf'))


def load_experiment(
  config_path: Optional[Union[str, Path]] = None,
  profile: Optional[str] = None,
  overrides: Iterable[str] = (),
) -> ExperimentConfig:
  """
  Resolve an experiment from a config file or an in-repo profile plus overrides.

  Args:
      config_path: `key = value` file
      profile: Name of a file in sghmer/profiles (without .conf)
      overrides: `key=value` strings applied last

  Raises:
      ValueError: If both sources are given, the profile is unknown, or parsing fails
  """
  if config_path and profile:
    raise ValueError('Pass either a config file or a profile, not both')
  if profile:
    path = PROFILE_DIR / f'{profile}.conf'
    if not path.is_file():
      raise ValueError(f'Unknown profile {profile!r}; available: {", ".join(list_profiles())}')
    return ExperimentConfig.from_file(path, overrides)
  if config_path:
    return ExperimentConfig.from_file(config_path, overrides)
  return ExperimentConfig.from_text('', overrides)
