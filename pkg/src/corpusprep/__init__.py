"""Corpus curation and pretraining data preparation toolkit.

Stages: quality filtering, exact and MinHash-LSH near-deduplication,
n-gram LM perplexity filtering, subword token budgeting, length-stratified
sampling, greedy sequence packing, and MLM mask planning.
"""

from corpusprep.core import Document, StageStats, normalize_text, word_count

__all__ = ["Document", "StageStats", "normalize_text", "word_count"]

__version__ = "0.1.0"
