"""Convert GloVe text vectors to a corpus-aligned BMAT.

Reads the standard "word v1 ... vD" text format and emits one row per
corpus token (case-folded lookup); out-of-vocabulary tokens get zero
rows with a logged count.  Training GloVe is out of scope; this only
re-shapes downloaded vectors for the probe.
"""

from __future__ import annotations

import logging

import numpy as np

from .tokenize import read_transcript

log = logging.getLogger(__name__)


def parse_glove(text: str) -> dict[str, np.ndarray]:
    table = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        parts = line.rstrip().split(" ")
        table[parts[0]] = np.array([float(v) for v in parts[1:]], dtype=np.float64)
    if not table:
        raise ValueError("no vectors found")
    dims = {v.shape[0] for v in table.values()}
    if len(dims) != 1:
        raise ValueError(f"inconsistent vector dimensions: {sorted(dims)}")
    return table


def corpus_glove_matrix(transcript_text: str, glove_text: str) -> np.ndarray:
    table = parse_glove(glove_text)
    dim = next(iter(table.values())).shape[0]
    rows = []
    missing = 0
    for tokens in read_transcript(transcript_text):
        for tok in tokens:
            vec = table.get(tok.casefold())
            if vec is None:
                missing += 1
                vec = np.zeros(dim)
            rows.append(vec)
    if missing:
        log.warning("%d corpus tokens missing from the vector table", missing)
    return np.array(rows, dtype=np.float64)
