import hashlib

import numpy as np
import pytest

from sghmer.corpus.glyphs import ATLAS, STRUCTURAL, SUPPORTED
from sghmer.corpus.renderer import layout, parse, random_expression, render_synthetic


def _center_y(bbox):
  return (bbox[1] + bbox[3]) / 2


def test_single_token_is_deterministic():
  first = render_synthetic(['1'], seed=0)
  second = render_synthetic(['1'], seed=0)
  assert first.tokens == ('1',)
  assert first.source == 'synthetic'
  assert first.image.tobytes() == second.image.tobytes()
  assert [m.token for m in layout(['1']).marks] == ['1']


def test_different_seeds_jitter_differently():
  assert render_synthetic(['x', '+', '1'], 0).image.tobytes() != render_synthetic(['x', '+', '1'], 1).image.tobytes()


def test_image_is_bright_ink_on_dark_and_at_least_32():
  sample = render_synthetic(['-'], seed=3)
  h, w = sample.image.shape
  assert h >= 32 and w >= 32
  assert sample.image.min() == 0.0
  assert sample.image.max() == 1.0
  assert sample.image.mean() < 0.5


def test_superscript_is_smaller_and_higher():
  x_mark, two_mark = layout(['x', '^', '{', '2', '}']).marks
  assert (x_mark.token, two_mark.token) == ('x', '2')
  x_box, two_box = x_mark.bbox, two_mark.bbox
  assert two_box[2] - two_box[0] < x_box[2] - x_box[0]
  assert two_box[1] > x_box[1]
  assert _center_y(two_box) > _center_y(x_box)
  assert two_box[0] >= x_box[2]


def test_script_is_scaled_copy_of_the_plain_glyph():
  base, script = layout(['2', '^', '{', '2', '}']).marks
  base_h = base.bbox[3] - base.bbox[1]
  script_h = script.bbox[3] - script.bbox[1]
  assert script_h == pytest.approx(0.7 * base_h)
  assert script.bbox[1] == pytest.approx(0.4)


def test_subscript_is_lower():
  base, script = layout(['x', '_', '{', 'i', '}']).marks
  assert _center_y(script.bbox) < _center_y(base.bbox)
  assert script.bbox[1] < base.bbox[1]


def test_braces_are_not_drawn():
  tokens = [m.token for m in layout(['{', 'a', '+', 'b', '}']).marks]
  assert tokens == ['a', '+', 'b']


def test_fraction_places_groups_around_bar():
  marks = {m.token: m for m in layout(['\\frac', '{', 'a', '}', '{', 'b', '}']).marks}
  bar_y = marks['\\frac'].bbox[1]
  assert marks['a'].bbox[1] > bar_y
  assert marks['b'].bbox[3] < bar_y
  assert marks['\\frac'].bbox[0] <= marks['a'].bbox[0]
  assert marks['\\frac'].bbox[2] >= marks['a'].bbox[2]


def test_sqrt_overbar_spans_argument():
  marks = {m.token: m for m in layout(['\\sqrt', '{', 'x', '+', '1', '}']).marks}
  radical = marks['\\sqrt'].bbox
  for token in ('x', '+', '1'):
    assert radical[0] < marks[token].bbox[0]
    assert radical[2] > marks[token].bbox[2]
    assert radical[3] > marks[token].bbox[3]


def test_unknown_token_rejected_by_name():
  with pytest.raises(ValueError, match='foo'):
    render_synthetic(['x', '\\foo'], seed=0)


@pytest.mark.parametrize('tokens', [['{', 'a'], ['a', '}'], ['x', '^'], ['x', '^', '2', '^', '3']])
def test_malformed_grouping_rejected(tokens):
  with pytest.raises(ValueError):
    parse(tokens)


def test_every_atlas_glyph_renders():
  for i, token in enumerate(sorted(ATLAS)):
    sample = render_synthetic([token], seed=i)
    assert sample.image.max() > 0, token


def test_random_expressions_respect_grammar():
  rng = np.random.default_rng(5)
  for _ in range(200):
    tokens = random_expression(rng)
    assert 1 <= len(tokens) <= 20
    assert set(tokens) <= SUPPORTED
    parse(tokens)


def test_random_expressions_use_structure():
  rng = np.random.default_rng(0)
  seen = set()
  for _ in range(300):
    seen.update(random_expression(rng))
  assert {'^', '_', '\\frac', '\\sqrt'} <= seen & STRUCTURAL


def test_corpus_hash_is_reproducible():
  def corpus_hash():
    rng = np.random.default_rng(11)
    digest = hashlib.sha256()
    for seed in range(100):
      sample = render_synthetic(random_expression(rng), seed)
      digest.update(' '.join(sample.tokens).encode())
      digest.update(sample.image.tobytes())
    return digest.hexdigest()

  assert corpus_hash() == corpus_hash()
