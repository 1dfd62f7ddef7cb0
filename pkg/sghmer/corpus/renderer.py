"""
Synthetic expression renderer.

Tokens are parsed into a small layout tree (rows, scripts, fractions, radicals),
laid out in em units with y pointing up, and rasterized with Pillow as bright
strokes on a dark canvas. All randomness (glyph scale, slant, offset, stroke
noise and width) is drawn from a generator seeded by the caller, so a
(tokens, seed) pair always produces the same pixels.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from PIL import Image, ImageDraw

from sghmer.corpus.batching import MIN_EXTENT, Sample
from sghmer.corpus.glyphs import glyph

logger = logging.getLogger(__name__)

PIXELS_PER_EM = 28
MARGIN_EM = 0.35
SCRIPT_SCALE = 0.7
SCRIPT_SHIFT = 0.4
FRACTION_SCALE = 0.8
MATH_AXIS = 0.4
GLYPH_GAP = 0.15


@dataclass
class Atom:
  token: str


@dataclass
class Row:
  children: list = field(default_factory=list)


@dataclass
class Scripted:
  base: Union[Atom, Row, 'Scripted', 'Fraction', 'Radical']
  sup: Optional[Row] = None
  sub: Optional[Row] = None


@dataclass
class Fraction:
  numerator: Union[Atom, Row]
  denominator: Union[Atom, Row]


@dataclass
class Radical:
  body: Union[Atom, Row]


Node = Union[Atom, Row, Scripted, Fraction, Radical]


@dataclass
class Mark:
  """Strokes drawn for one token, in em units."""

  token: str
  strokes: list[np.ndarray]

  @property
  def bbox(self) -> tuple[float, float, float, float]:
    """(x0, y0, x1, y1) with y pointing up."""
    points = np.concatenate(self.strokes)
    return (
      float(points[:, 0].min()),
      float(points[:, 1].min()),
      float(points[:, 0].max()),
      float(points[:, 1].max()),
    )

  def shifted(self, dx: float, dy: float) -> 'Mark':
    offset = np.array([dx, dy])
    return Mark(self.token, [s + offset for s in self.strokes])


@dataclass
class Box:
  """Laid-out subtree: advance width plus its marks relative to (0, baseline)."""

  width: float
  marks: list[Mark] = field(default_factory=list)

  @property
  def top(self) -> float:
    return max((m.bbox[3] for m in self.marks), default=0.0)

  @property
  def bottom(self) -> float:
    return min((m.bbox[1] for m in self.marks), default=0.0)

  def shifted(self, dx: float, dy: float) -> 'Box':
    return Box(self.width, [m.shifted(dx, dy) for m in self.marks])


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def parse(tokens: Sequence[str]) -> Row:
  """
  Layout tree of a token sequence.

  Raises:
      ValueError: On unbalanced braces, a missing argument or a token outside the atlas
  """
  row, pos = _parse_row(list(tokens), 0, inside_group=False)
  return row


def _parse_row(tokens: list[str], pos: int, inside_group: bool) -> tuple[Row, int]:
  items: list[Node] = []
  while pos < len(tokens):
    token = tokens[pos]
    if token == '}':
      if not inside_group:
        raise ValueError(f'Unbalanced "}}" at token {pos}')
      return Row(items), pos + 1
    if token in ('^', '_'):
      argument, pos = _parse_argument(tokens, pos + 1)
      base = items.pop() if items else Row()
      if not isinstance(base, Scripted):
        base = Scripted(base)
      slot = 'sup' if token == '^' else 'sub'
      if getattr(base, slot) is not None:
        raise ValueError(f'Double {token!r} on one base at token {pos}')
      setattr(base, slot, argument if isinstance(argument, Row) else Row([argument]))
      items.append(base)
      continue
    node, pos = _parse_argument(tokens, pos)
    items.append(node)
  if inside_group:
    raise ValueError('Unbalanced "{": missing "}"')
  return Row(items), pos


def _parse_argument(tokens: list[str], pos: int) -> tuple[Node, int]:
  if pos >= len(tokens):
    raise ValueError('Missing argument at end of expression')
  token = tokens[pos]
  if token == '{':
    return _parse_row(tokens, pos + 1, inside_group=True)
  if token == '\\frac':
    numerator, pos = _parse_argument(tokens, pos + 1)
    denominator, pos = _parse_argument(tokens, pos)
    return Fraction(numerator, denominator), pos
  if token == '\\sqrt':
    body, pos = _parse_argument(tokens, pos + 1)
    return Radical(body), pos
  if token in ('^', '_', '}'):
    raise ValueError(f'Unexpected {token!r} at token {pos}')
  glyph(token)
  return Atom(token), pos + 1


# ---------------------------------------------------------------------------
# Layout
# ---------------------------------------------------------------------------


def layout(tokens: Sequence[str], rng: Optional[np.random.Generator] = None) -> Box:
  """
  Place every glyph of an expression.

  Args:
      tokens: Expression tokens
      rng: Jitter source; None lays out the clean, unjittered form

  Returns:
      Box whose marks carry per-token strokes and bounding boxes
  """
  return _layout(parse(tokens), 1.0, rng)


def _uniform(rng: Optional[np.random.Generator], bound: float) -> float:
  return float(rng.uniform(-bound, bound)) if rng is not None else 0.0


def _layout(node: Node, scale: float, rng: Optional[np.random.Generator]) -> Box:
  if isinstance(node, Atom):
    return _layout_atom(node.token, scale, rng)
  if isinstance(node, Row):
    x = 0.0
    marks: list[Mark] = []
    for child in node.children:
      box = _layout(child, scale, rng)
      marks.extend(box.shifted(x, 0.0).marks)
      x += box.width
    return Box(x, marks)
  if isinstance(node, Scripted):
    base = _layout(node.base, scale, rng)
    marks = list(base.marks)
    extra = 0.0
    for script, direction in ((node.sup, 1.0), (node.sub, -1.0)):
      if script is None:
        continue
      box = _layout(script, scale * SCRIPT_SCALE, rng)
      marks.extend(box.shifted(base.width, direction * SCRIPT_SHIFT * scale).marks)
      extra = max(extra, box.width)
    return Box(base.width + extra, marks)
  if isinstance(node, Fraction):
    return _layout_fraction(node, scale, rng)
  if isinstance(node, Radical):
    return _layout_radical(node, scale, rng)
  raise TypeError(f'Unknown layout node {node!r}')


def _layout_atom(token: str, scale: float, rng: Optional[np.random.Generator]) -> Box:
  g = glyph(token)
  size = scale * (1.0 + _uniform(rng, 0.06))
  slant = _uniform(rng, 0.08)
  lift = _uniform(rng, 0.04) * scale
  strokes = []
  for stroke in g.strokes:
    points = stroke * size
    points[:, 0] += slant * points[:, 1]
    points[:, 1] += lift
    if rng is not None:
      points = points + rng.normal(0.0, 0.012 * scale, size=points.shape)
    strokes.append(points)
  return Box(g.width * size + GLYPH_GAP * scale, [Mark(token, strokes)])


def _layout_fraction(node: Fraction, scale: float, rng: Optional[np.random.Generator]) -> Box:
  numerator = _layout(node.numerator, scale * FRACTION_SCALE, rng)
  denominator = _layout(node.denominator, scale * FRACTION_SCALE, rng)
  inner = max(numerator.width, denominator.width)
  axis = MATH_AXIS * scale + _uniform(rng, 0.03) * scale
  gap = 0.15 * scale
  pad = 0.1 * scale
  marks = numerator.shifted(pad + (inner - numerator.width) / 2, axis + gap - numerator.bottom).marks
  marks += denominator.shifted(pad + (inner - denominator.width) / 2, axis - gap - denominator.top).marks
  bar = np.array([[0.5 * pad, axis], [1.5 * pad + inner, axis + _uniform(rng, 0.02) * scale]])
  marks.append(Mark('\\frac', [bar]))
  return Box(inner + 3 * pad, marks)


def _layout_radical(node: Radical, scale: float, rng: Optional[np.random.Generator]) -> Box:
  body = _layout(node.body, scale, rng)
  top = max(body.top, 0.6 * scale) + 0.12 * scale
  bottom = min(body.bottom, 0.0) - 0.1 * scale
  mid = bottom + 0.45 * (top - bottom)
  indent = 0.4 * scale
  sign = np.array([
    [0.0, mid],
    [0.08 * scale, mid + 0.06 * scale],
    [0.2 * scale, bottom],
    [0.35 * scale, top + _uniform(rng, 0.02) * scale],
    [indent + body.width + 0.05 * scale, top],
  ])
  marks = body.shifted(indent, 0.0).marks + [Mark('\\sqrt', [sign])]
  return Box(indent + body.width + 0.1 * scale, marks)


# ---------------------------------------------------------------------------
# Rasterization
# ---------------------------------------------------------------------------


def rasterize(box: Box, stroke_width: int = 2) -> np.ndarray:
  """Draw a laid-out box as bright strokes on a black canvas of at least 32×32; values in [0, 1]."""
  left, right = -MARGIN_EM, box.width + MARGIN_EM
  upper, lower = box.top + MARGIN_EM, box.bottom - MARGIN_EM
  width = max(MIN_EXTENT, int(math.ceil((right - left) * PIXELS_PER_EM)))
  height = max(MIN_EXTENT, int(math.ceil((upper - lower) * PIXELS_PER_EM)))
  offset_x = (width - (right - left) * PIXELS_PER_EM) / 2
  offset_y = (height - (upper - lower) * PIXELS_PER_EM) / 2

  canvas = Image.new('L', (width, height), 0)
  draw = ImageDraw.Draw(canvas)
  for mark in box.marks:
    for stroke in mark.strokes:
      points = [
        ((x - left) * PIXELS_PER_EM + offset_x, (upper - y) * PIXELS_PER_EM + offset_y)
        for x, y in stroke.tolist()
      ]
      draw.line(points, fill=255, width=stroke_width, joint='curve')
  return np.asarray(canvas, dtype=np.float32) / 255.0


def render_synthetic(tokens: Sequence[str], seed: int, name: Optional[str] = None) -> Sample:
  """
  Render a token sequence as a handwriting-like image.

  Args:
      tokens: Expression tokens from the glyph atlas
      seed: Jitter seed; (tokens, seed) fixes the pixels
      name: Sample name, defaults to synth_<seed>

  Returns:
      Sample labelled with the original tokens

  Raises:
      ValueError: If a token is outside the atlas or the grouping is malformed
  """
  rng = np.random.default_rng(seed)
  box = _layout(parse(tokens), 1.0, rng)
  image = rasterize(box, stroke_width=int(rng.integers(2, 4)))
  return Sample(name=name or f'synth_{seed}', image=image, tokens=tuple(tokens), source='synthetic')


# ---------------------------------------------------------------------------
# Expression grammar
# ---------------------------------------------------------------------------

ATOMS = tuple('0123456789abcdxyznmkt') + ('A', 'B', 'C', 'F', '\\alpha', '\\beta', '\\theta', '\\pi')
OPERATORS = ('+', '-', '=', '\\times', '\\div', '\\pm', '<', '>', '\\leq', '\\geq', '\\neq')


def random_expression(
  rng: np.random.Generator,
  max_tokens: int = 20,
  max_depth: int = 2,
) -> list[str]:
  """
  Draw an expression with at most max_depth nested structures and 1..max_tokens tokens.

  Terms are atoms, superscripts, subscripts, fractions, square roots or
  parenthesized sub-expressions, joined by binary operators.
  """
  while True:
    tokens = _expression(rng, 0, max_depth)
    if 1 <= len(tokens) <= max_tokens:
      return tokens


def _pick(rng: np.random.Generator, options: Sequence[str]) -> str:
  return options[int(rng.integers(len(options)))]


def _expression(rng: np.random.Generator, depth: int, max_depth: int) -> list[str]:
  terms = int(rng.integers(1, 4 if depth == 0 else 3))
  tokens: list[str] = []
  for i in range(terms):
    if i:
      tokens.append(_pick(rng, OPERATORS))
    tokens.extend(_term(rng, depth, max_depth))
  return tokens


def _group(rng: np.random.Generator, depth: int, max_depth: int) -> list[str]:
  return ['{', *_expression(rng, depth, max_depth), '}']


def _term(rng: np.random.Generator, depth: int, max_depth: int) -> list[str]:
  atom = _pick(rng, ATOMS)
  if depth >= max_depth:
    return [atom]
  roll = rng.random()
  if roll < 0.5:
    return [atom]
  if roll < 0.65:
    return [atom, '^', *_group(rng, depth + 1, max_depth)]
  if roll < 0.75:
    return [atom, '_', *_group(rng, depth + 1, max_depth)]
  if roll < 0.85:
    return ['\\frac', *_group(rng, depth + 1, max_depth), *_group(rng, depth + 1, max_depth)]
  if roll < 0.95:
    return ['\\sqrt', *_group(rng, depth + 1, max_depth)]
  return ['(', *_expression(rng, depth + 1, max_depth), ')']
