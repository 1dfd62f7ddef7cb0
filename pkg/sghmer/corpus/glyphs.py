"""
Stroke glyph atlas for the synthetic renderer.

Every drawable token is a set of polylines in a design grid measured in tenths of
an em: baseline at y=0, x-height 6, cap height 10, descender -3, y pointing up.
Strokes are written compactly as "x,y x,y ...; x,y ..." and parsed once at import.
"""

from dataclasses import dataclass

import numpy as np

# Grouping and layout tokens: consumed by the layout, never drawn as glyphs.
STRUCTURAL = frozenset({'^', '_', '{', '}', '\\frac', '\\sqrt'})

_STROKES: dict[str, tuple[float, str]] = {
  '0': (6, '0,1 0,9 1,10 5,10 6,9 6,1 5,0 1,0 0,1'),
  '1': (6, '1,8 3,10 3,0; 1,0 5,0'),
  '2': (6, '0,8 1,10 5,10 6,8 6,6 0,0 6,0'),
  '3': (6, '0,10 6,10 3,6 5,5 6,3 6,1 5,0 1,0 0,1'),
  '4': (6, '5,0 5,10 0,3 6,3'),
  '5': (6, '6,10 0,10 0,6 4,6 6,4 6,1 5,0 0,0'),
  '6': (6, '5,10 2,10 0,7 0,1 1,0 5,0 6,1 6,4 5,5 0,5'),
  '7': (6, '0,10 6,10 2,0'),
  '8': (6, '1,5 0,7 0,9 1,10 5,10 6,9 6,7 5,5 1,5 0,4 0,1 1,0 5,0 6,1 6,4 5,5'),
  '9': (6, '6,5 1,5 0,6 0,9 1,10 5,10 6,9 6,3 4,0 1,0'),
  'a': (5, '5,6 5,0; 5,5 4,6 1,6 0,5 0,1 1,0 4,0 5,1'),
  'b': (5, '0,10 0,0; 0,5 1,6 4,6 5,5 5,1 4,0 1,0 0,1'),
  'c': (5, '5,5 4,6 1,6 0,5 0,1 1,0 4,0 5,1'),
  'd': (5, '5,10 5,0; 5,5 4,6 1,6 0,5 0,1 1,0 4,0 5,1'),
  'e': (5, '0,3 5,3 5,5 4,6 1,6 0,5 0,1 1,0 5,0'),
  'f': (4, '4,10 3,10 2,9 2,0; 0,6 4,6'),
  'g': (5, '5,6 5,-2 4,-3 1,-3; 5,5 4,6 1,6 0,5 0,2 1,1 4,1 5,2'),
  'h': (5, '0,10 0,0; 0,5 1,6 4,6 5,5 5,0'),
  'i': (3, '1.5,6 1.5,0; 1.5,8 1.5,9'),
  'j': (4, '3,6 3,-2 2,-3 0,-3; 3,8 3,9'),
  'k': (5, '0,10 0,0; 5,6 0,2; 1.5,3 5,0'),
  'l': (3, '1.5,10 1.5,0'),
  'm': (8, '0,6 0,0; 0,5 1,6 3,6 4,5 4,0; 4,5 5,6 7,6 8,5 8,0'),
  'n': (5, '0,6 0,0; 0,5 1,6 4,6 5,5 5,0'),
  'o': (5, '1,0 0,1 0,5 1,6 4,6 5,5 5,1 4,0 1,0'),
  'p': (5, '0,6 0,-3; 0,5 1,6 4,6 5,5 5,1 4,0 1,0 0,1'),
  'q': (5, '5,6 5,-3; 5,5 4,6 1,6 0,5 0,1 1,0 4,0 5,1'),
  'r': (4, '0,6 0,0; 0,4 2,6 4,6'),
  's': (5, '5,5 4,6 1,6 0,5 0,4 1,3 4,3 5,2 5,1 4,0 1,0 0,1'),
  't': (4, '2,9 2,1 3,0 4,0; 0,6 4,6'),
  'u': (5, '0,6 0,1 1,0 4,0 5,1; 5,6 5,0'),
  'v': (5, '0,6 2.5,0 5,6'),
  'w': (8, '0,6 2,0 4,5 6,0 8,6'),
  'x': (5, '0,6 5,0; 0,0 5,6'),
  'y': (5, '0,6 2.5,0; 5,6 1.5,-3'),
  'z': (5, '0,6 5,6 0,0 5,0'),
  'A': (6, '0,0 3,10 6,0; 1,3.5 5,3.5'),
  'B': (6, '0,0 0,10 4,10 5,9 5,6 4,5 0,5; 4,5 6,4 6,1 5,0 0,0'),
  'C': (6, '6,9 5,10 1,10 0,9 0,1 1,0 5,0 6,1'),
  'D': (6, '0,0 0,10 4,10 6,8 6,2 4,0 0,0'),
  'E': (6, '6,10 0,10 0,0 6,0; 0,5 4,5'),
  'F': (6, '6,10 0,10 0,0; 0,5 4,5'),
  'G': (6, '6,9 5,10 1,10 0,9 0,1 1,0 5,0 6,1 6,4 3,4'),
  'H': (6, '0,10 0,0; 6,10 6,0; 0,5 6,5'),
  'I': (6, '1,10 5,10; 3,10 3,0; 1,0 5,0'),
  'J': (6, '6,10 6,1 5,0 1,0 0,1 0,3'),
  'K': (6, '0,10 0,0; 6,10 0,4; 2,6 6,0'),
  'L': (6, '0,10 0,0 6,0'),
  'M': (8, '0,0 0,10 4,4 8,10 8,0'),
  'N': (6, '0,0 0,10 6,0 6,10'),
  'O': (6, '1,0 0,1 0,9 1,10 5,10 6,9 6,1 5,0 1,0'),
  'P': (6, '0,0 0,10 5,10 6,9 6,6 5,5 0,5'),
  'Q': (7, '1,0 0,1 0,9 1,10 5,10 6,9 6,1 5,0 1,0; 4,2 7,-1'),
  'R': (6, '0,0 0,10 5,10 6,9 6,6 5,5 0,5; 3,5 6,0'),
  'S': (6, '6,9 5,10 1,10 0,9 0,6 1,5 5,5 6,4 6,1 5,0 1,0 0,1'),
  'T': (6, '0,10 6,10; 3,10 3,0'),
  'U': (6, '0,10 0,1 1,0 5,0 6,1 6,10'),
  'V': (6, '0,10 3,0 6,10'),
  'W': (8, '0,10 2,0 4,7 6,0 8,10'),
  'X': (6, '0,10 6,0; 0,0 6,10'),
  'Y': (6, '0,10 3,5 6,10; 3,5 3,0'),
  'Z': (6, '0,10 6,10 0,0 6,0'),
  '+': (6, '0,4 6,4; 3,1 3,7'),
  '-': (6, '0,4 6,4'),
  '=': (6, '0,5.5 6,5.5; 0,2.5 6,2.5'),
  '(': (3, '3,11 1.5,9 1,4 1.5,-1 3,-3'),
  ')': (3, '0,11 1.5,9 2,4 1.5,-1 0,-3'),
  '[': (3, '3,11 1,11 1,-3 3,-3'),
  ']': (3, '0,11 2,11 2,-3 0,-3'),
  '<': (6, '6,7 0,4 6,1'),
  '>': (6, '0,7 6,4 0,1'),
  ',': (2, '1,0.5 1,-0.5 0,-2'),
  '.': (2, '1,0 1,0.6'),
  '!': (3, '1.5,10 1.5,3; 1.5,0.5 1.5,0'),
  '/': (5, '0,-2 5,11'),
  '|': (3, '1.5,11 1.5,-3'),
  '\\times': (5, '0,7 5,2; 0,2 5,7'),
  '\\div': (6, '0,4 6,4; 3,6.5 3,7; 3,1 3,1.5'),
  '\\pm': (6, '0,5 6,5; 3,2 3,8; 0,0 6,0'),
  '\\cdot': (2, '1,4 1,4.6'),
  '\\alpha': (6, '6,6 5.5,4 3,0 1,0 0,1 0,5 1,6 2.5,6 4.5,3 6,0'),
  '\\beta': (5, '0,-3 0,8 1,10 4,10 5,9 5,7 3,6 5,5 5,1 4,0 1,0 0,1'),
  '\\gamma': (5, '0,6 1,6 2.5,1 2.5,-3; 2.5,1 5,6'),
  '\\theta': (5, '1,0 0,1 0,9 1,10 4,10 5,9 5,1 4,0 1,0; 0,5 5,5'),
  '\\pi': (6, '0,6 6,6; 1.5,6 1.5,0; 4.5,6 4.5,1 5.5,0'),
  '\\sigma': (6, '6,6 2,6 0,4 0,1 1,0 4,0 5,1 5,4 3,6'),
  '\\lambda': (5, '0,10 1,10 5,0; 2.5,6 0,0'),
  '\\mu': (5, '0,-3 0,6; 0,1 1,0 4,0 5,1; 5,6 5,0'),
  '\\infty': (8, '4,3 2.5,5 1,5 0,3.5 1,2 2.5,2 5.5,5 7,5 8,3.5 7,2 5.5,2 4,3'),
  '\\sum': (7, '7,11 0,11 4,4 0,-3 7,-3'),
  '\\int': (4, '4,11 3,11 2,9 2,-1 1,-3 0,-3'),
  '\\leq': (6, '6,8 0,5 6,2; 0,0 6,0'),
  '\\geq': (6, '0,8 6,5 0,2; 0,0 6,0'),
  '\\neq': (6, '0,5.5 6,5.5; 0,2.5 6,2.5; 4.5,8 1.5,0'),
  '\\rightarrow': (8, '0,4 8,4; 6,6 8,4 6,2'),
  '\\ldots': (8, '1,0 1,0.6; 4,0 4,0.6; 7,0 7,0.6'),
}

# Function names drawn as their letters.
_WORDS = ('\\sin', '\\cos', '\\tan', '\\log', '\\lim')


@dataclass(frozen=True)
class Glyph:
  """Polylines of one token in em units, with its advance width."""

  token: str
  width: float
  strokes: tuple[np.ndarray, ...]

  @property
  def top(self) -> float:
    return max(float(s[:, 1].max()) for s in self.strokes)

  @property
  def bottom(self) -> float:
    return min(float(s[:, 1].min()) for s in self.strokes)


def _parse(spec: str) -> tuple[np.ndarray, ...]:
  strokes = []
  for part in spec.split(';'):
    points = [tuple(float(v) for v in pair.split(',')) for pair in part.split()]
    strokes.append(np.array(points, dtype=np.float64) / 10.0)
  return tuple(strokes)


def _word(token: str, letters: dict[str, Glyph]) -> Glyph:
  strokes = []
  x = 0.0
  for ch in token[1:]:
    letter = letters[ch]
    strokes.extend(s + np.array([x, 0.0]) for s in letter.strokes)
    x += letter.width + 0.15
  return Glyph(token, x - 0.15, tuple(strokes))


def _build_atlas() -> dict[str, Glyph]:
  atlas = {token: Glyph(token, width / 10.0, _parse(spec)) for token, (width, spec) in _STROKES.items()}
  for token in _WORDS:
    atlas[token] = _word(token, atlas)
  return atlas


ATLAS: dict[str, Glyph] = _build_atlas()

# Every token the renderer accepts.
SUPPORTED = frozenset(ATLAS) | STRUCTURAL


def glyph(token: str) -> Glyph:
  """
  Atlas entry for a drawable token.

  Raises:
      ValueError: If the token has no glyph
  """
  try:
    return ATLAS[token]
  except KeyError:
    raise ValueError(f'Token {token!r} is not in the glyph atlas') from None
