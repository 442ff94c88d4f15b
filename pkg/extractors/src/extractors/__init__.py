"""Transcript-to-ingestion-file extractors.

Turns a sentence-per-line story transcript into the encoding pipeline's
input files: bracketed constituency trees, CoNLL-U dependency parses, a
word-timing TSV, and word-level contextual embeddings in BMAT form.
Each extractor prefers an off-the-shelf NLP tool when one is importable
and falls back to a deterministic offline backend otherwise; the
manifest records which backend produced every file.
"""

__version__ = "0.1.0"
