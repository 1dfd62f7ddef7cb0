"""
Ablation grid: the recognizer trained without SAM, with one branch, and with both.
"""

import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import pandas as pd
from rich.console import Console
from rich.table import Table

from sghmer.config import Settings
from sghmer.models.experiment import ExperimentConfig
from sghmer.services.corpus_service import CorpusService
from sghmer.services.training_service import TrainingService

logger = logging.getLogger(__name__)

# variant -> (enable_vis, enable_cls)
VARIANTS: dict[str, tuple[bool, bool]] = {
  'baseline': (False, False),
  'vis': (True, False),
  'cls': (False, True),
  'sam': (True, True),
}
ABLATION_NAME = 'ablation.csv'


def variant_config(config: ExperimentConfig, variant: str, seed: int, out_dir: Union[str, Path]) -> ExperimentConfig:
  vis, cls = VARIANTS[variant]
  return config.with_overrides([
    f'sam.enable_vis = {str(vis).lower()}',
    f'sam.enable_cls = {str(cls).lower()}',
    f'train.seed = {seed}',
    f'train.out_dir = {Path(out_dir) / f"{variant}-seed{seed}"}',
  ])


def run_ablation(
  config: ExperimentConfig,
  seeds: Sequence[int],
  out_dir: Union[str, Path],
  variants: Sequence[str] = tuple(VARIANTS),
  settings: Optional[Settings] = None,
) -> pd.DataFrame:
  """
  Train every variant for every seed on the same data.

  Returns:
      One row per run (variant, seed, best_exprate, final L_symbol/L_vis/L_cls),
      also written to `<out_dir>/ablation.csv`

  Raises:
      ValueError: On an unknown variant or an empty seed list
  """
  unknown = [v for v in variants if v not in VARIANTS]
  if unknown:
    raise ValueError(f'Unknown ablation variants {unknown}; expected some of {list(VARIANTS)}')
  if not seeds:
    raise ValueError('Ablation needs at least one seed')
  settings = settings or Settings()
  corpus = CorpusService(config.data, settings.render_workers).load()

  rows = []
  for seed in seeds:
    for variant in variants:
      run_config = variant_config(config, variant, seed, out_dir)
      logger.info(f'Ablation run {variant} seed {seed} -> {run_config.train.out_dir}')
      result = TrainingService(run_config, settings, corpus).train()
      final = result.history.iloc[-1]
      rows.append({
        'variant': variant,
        'seed': seed,
        'best_exprate': result.best_exprate,
        'L_symbol': final['L_symbol'],
        'L_vis': final['L_vis'],
        'L_cls': final['L_cls'],
      })

  table = pd.DataFrame(rows)
  Path(out_dir).mkdir(parents=True, exist_ok=True)
  table.to_csv(Path(out_dir) / ABLATION_NAME, index=False)
  return table


def summarize(table: pd.DataFrame) -> pd.DataFrame:
  """Mean and spread of best ExpRate per variant, in grid order."""
  grouped = table.groupby('variant')['best_exprate'].agg(['mean', 'std', 'count'])
  order = [v for v in VARIANTS if v in grouped.index]
  return grouped.reindex(order).reset_index()


def print_summary(table: pd.DataFrame, console: Optional[Console] = None) -> None:
  summary = summarize(table)
  rich_table = Table(title='Ablation: best validation ExpRate per variant')
  rich_table.add_column('variant')
  rich_table.add_column('runs', justify='right')
  rich_table.add_column('mean', justify='right')
  rich_table.add_column('std', justify='right')
  for variant, mean, std, count in zip(summary['variant'], summary['mean'], summary['std'], summary['count']):
    rich_table.add_row(variant, str(count), f'{mean:.2f}', '-' if pd.isna(std) else f'{std:.2f}')
  (console or Console()).print(rich_table)
