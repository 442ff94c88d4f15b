"""Word-level contextual embeddings (words x 768) in BMAT form.

Prefers a locally cached bidirectional transformer (subword vectors
from the last hidden layer, mean-pooled per word).  The offline backend
composes a deterministic hashed word vector with a window of neighbor
vectors, so rows stay context-dependent without any model weights.
"""

from __future__ import annotations

import hashlib
import logging

import numpy as np

from .tokenize import read_transcript

log = logging.getLogger(__name__)

DIM = 768
_CONTEXT_WINDOW = 2
_CONTEXT_WEIGHT = 0.3


class AlignmentError(RuntimeError):
    """Tokenizer words could not be aligned back to corpus tokens."""


def _transformer_backend():
    try:
        import torch  # noqa: F401
        from transformers import AutoModel, AutoTokenizer

        tok = AutoTokenizer.from_pretrained("bert-base-uncased", local_files_only=True)
        model = AutoModel.from_pretrained("bert-base-uncased", local_files_only=True)
        model.eval()
        return tok, model
    except Exception:
        return None


def _transformer_rows(sentences, tok, model):
    import torch

    rows = []
    for sid, words in enumerate(sentences):
        enc = tok(words, is_split_into_words=True, return_tensors="pt",
                  truncation=True)
        with torch.no_grad():
            hidden = model(**enc).last_hidden_state[0]
        word_ids = enc.word_ids(0)
        pooled = [[] for _ in words]
        for pos, wid in enumerate(word_ids):
            if wid is not None:
                pooled[wid].append(hidden[pos].numpy())
        for wid, vecs in enumerate(pooled):
            if not vecs:
                raise AlignmentError(
                    f"sentence {sid}: word {words[wid]!r} got no subwords"
                )
            rows.append(np.mean(vecs, axis=0))
    return np.array(rows, dtype=np.float64)


def _word_vector(word: str) -> np.ndarray:
    digest = hashlib.blake2b(word.casefold().encode(), digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    return rng.standard_normal(DIM) / np.sqrt(DIM)


def _offline_rows(sentences) -> np.ndarray:
    rows = []
    for words in sentences:
        base = [_word_vector(w) for w in words]
        for i in range(len(words)):
            vec = base[i].copy()
            for off in range(1, _CONTEXT_WINDOW + 1):
                for j in (i - off, i + off):
                    if 0 <= j < len(words):
                        vec += (_CONTEXT_WEIGHT / off) * base[j]
            rows.append(vec)
    return np.array(rows, dtype=np.float64)


def extract_embeddings(transcript_text: str) -> tuple[np.ndarray, str]:
    """Returns (words x 768 matrix in corpus order, backend name)."""
    sentences = read_transcript(transcript_text)
    backend = _transformer_backend()
    if backend is not None:
        return _transformer_rows(sentences, *backend), "transformers:bert-base-uncased"
    log.info("no local transformer weights; using the hashed offline backend")
    return _offline_rows(sentences), "offline-hashed"
