"""LaTeX label tokenization."""

import logging

logger = logging.getLogger(__name__)


def tokenize(latex: str) -> list[str]:
  """
  Split a LaTeX label into tokens.

  Whitespace-delimited input is split on whitespace. Otherwise the string is
  scanned: a backslash followed by a maximal run of letters is one token, a
  backslash followed by any other character is a two-character token, and every
  other character (brace, caret, underscore, digit, letter, glyph) is one token.

  Args:
      latex: Label text

  Returns:
      Token list

  Raises:
      ValueError: On empty input or a lone trailing backslash
  """
  text = latex.strip()
  if not text:
    raise ValueError('Cannot tokenize an empty label')

  if any(ch.isspace() for ch in text):
    tokens = text.split()
    if '\\' in tokens:
      raise ValueError(f'Lone backslash in label: {latex!r}')
    return tokens

  tokens = []
  i = 0
  while i < len(text):
    ch = text[i]
    if ch != '\\':
      tokens.append(ch)
      i += 1
      continue
    if i + 1 >= len(text):
      raise ValueError(f'Lone trailing backslash in label: {latex!r}')
    j = i + 1
    while j < len(text) and text[j].isalpha():
      j += 1
    if j == i + 1:
      j += 1
    tokens.append(text[i:j])
    i = j
  return tokens


def detokenize(tokens: list[str]) -> str:
  """Space-joined label; tokenize(detokenize(t)) == t for any tokenize output t."""
  return ' '.join(tokens)
