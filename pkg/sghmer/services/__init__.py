"""Training, evaluation, inference and data services."""

from sghmer.services.ablation_service import run_ablation
from sghmer.services.corpus_service import CorpusService, CorpusSplit, synthesize, write_synthetic
from sghmer.services.evaluation_service import EvaluationService, exprate, exprate_by_length
from sghmer.services.graph_service import build_graph_file
from sghmer.services.inference_service import InferenceService
from sghmer.services.optimizer import Adadelta, OptState, adadelta_step, clip_grad_norm, lr_schedule
from sghmer.services.training_service import TrainingService, TrainResult

__all__ = [
  'Adadelta',
  'CorpusService',
  'CorpusSplit',
  'EvaluationService',
  'InferenceService',
  'OptState',
  'TrainResult',
  'TrainingService',
  'adadelta_step',
  'build_graph_file',
  'clip_grad_norm',
  'exprate',
  'exprate_by_length',
  'lr_schedule',
  'run_ablation',
  'synthesize',
  'write_synthetic',
]
