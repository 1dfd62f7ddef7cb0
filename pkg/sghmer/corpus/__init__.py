"""Tokenization, vocabulary, synthetic rendering, manifests and batching."""

from sghmer.corpus.batching import Batch, Sample, make_batch, make_image_batch
from sghmer.corpus.manifest import (
  ManifestEntry,
  decode_image_bytes,
  load_manifest_samples,
  load_sample,
  normalize_ink,
  read_manifest,
  read_pgm,
  write_manifest,
  write_pgm,
)
from sghmer.corpus.renderer import layout, random_expression, render_synthetic
from sghmer.corpus.tokenizer import detokenize, tokenize
from sghmer.corpus.vocab import EOS_ID, PAD_ID, RESERVED, SOS_ID, Vocab, build_vocab

__all__ = [
  'Batch',
  'EOS_ID',
  'ManifestEntry',
  'PAD_ID',
  'RESERVED',
  'SOS_ID',
  'Sample',
  'Vocab',
  'build_vocab',
  'decode_image_bytes',
  'detokenize',
  'layout',
  'load_manifest_samples',
  'load_sample',
  'make_batch',
  'make_image_batch',
  'normalize_ink',
  'random_expression',
  'read_manifest',
  'read_pgm',
  'render_synthetic',
  'tokenize',
  'write_manifest',
  'write_pgm',
]
