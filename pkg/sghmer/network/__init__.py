"""DenseNet-lite encoder, coverage-attention decoder and the semantic aware module."""

from sghmer.network.checkpoint import (
  CheckpointMeta,
  LoadedCheckpoint,
  TrainingState,
  load_checkpoint,
  load_recognizer,
  save_checkpoint,
)
from sghmer.network.decoder import AttentionDecoder, DecoderState, StepOutput
from sghmer.network.encoder import DenseEncoder, FeatureMap, pool_mask
from sghmer.network.recognizer import Decoded, LossBreakdown, Recognizer, TeacherForcedOutput
from sghmer.network.sam import (
  NonFiniteLossError,
  SamBranch,
  SamLoss,
  SamModule,
  SamTargets,
  build_targets,
  gather_steps,
  pairwise_cosine,
  project,
  sam_loss,
  total_loss,
)

__all__ = [
  'AttentionDecoder',
  'CheckpointMeta',
  'Decoded',
  'LossBreakdown',
  'DecoderState',
  'DenseEncoder',
  'FeatureMap',
  'LoadedCheckpoint',
  'Recognizer',
  'NonFiniteLossError',
  'SamBranch',
  'SamLoss',
  'SamModule',
  'SamTargets',
  'StepOutput',
  'TeacherForcedOutput',
  'TrainingState',
  'build_targets',
  'gather_steps',
  'load_checkpoint',
  'load_recognizer',
  'pairwise_cosine',
  'pool_mask',
  'project',
  'sam_loss',
  'save_checkpoint',
  'total_loss',
]
