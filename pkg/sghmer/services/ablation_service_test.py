import pandas as pd
import pytest

from sghmer.models.experiment import load_experiment
from sghmer.services.ablation_service import VARIANTS, run_ablation, summarize, variant_config


def test_variant_config_switches_branches(tiny_config, tmp_path):
  config = variant_config(tiny_config, 'vis', 3, tmp_path)
  assert config.sam.enable_vis and not config.sam.enable_cls
  assert config.train.seed == 3
  assert config.train.out_dir == str(tmp_path / 'vis-seed3')
  assert not variant_config(tiny_config, 'baseline', 0, tmp_path).sam.enabled


def test_summary_keeps_grid_order():
  table = pd.DataFrame({
    'variant': ['sam', 'baseline', 'sam', 'baseline'],
    'seed': [0, 0, 1, 1],
    'best_exprate': [50.0, 25.0, 70.0, 35.0],
  })
  summary = summarize(table)
  assert summary['variant'].tolist() == ['baseline', 'sam']
  assert summary['mean'].tolist() == [30.0, 60.0]


def test_unknown_variant_rejected(tiny_config, tmp_path):
  with pytest.raises(ValueError, match='Unknown ablation variants'):
    run_ablation(tiny_config, [0], tmp_path, variants=['both'])


@pytest.mark.slow
def test_graph_supervision_trend_on_small_synthetic_corpus(tmp_path):
  config = load_experiment(profile='synth-small')
  table = run_ablation(config, [0, 1, 2], tmp_path)
  assert (tmp_path / 'ablation.csv').exists()
  assert sorted(table['variant'].unique()) == sorted(VARIANTS)
  assert (table.groupby('variant')['seed'].nunique() == 3).all()
  means = summarize(table).set_index('variant')['mean']
  assert means['sam'] >= means['baseline']
  assert means['vis'] >= means['baseline'] - 0.5
  assert means['cls'] >= means['baseline'] - 0.5
