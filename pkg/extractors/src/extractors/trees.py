"""Constituency-tree extraction: one bracketed parse per transcript line.

Prefers the Berkeley neural parser (via benepar+spacy) when importable;
otherwise a deterministic shallow chunker builds valid PTB-style
bracketings (NP/PP/VP groups under S).  Chunker output is structurally
well-formed, not linguistically deep.
"""

from __future__ import annotations

import logging

from .tokenize import is_punct, pos_tag, read_transcript

log = logging.getLogger(__name__)

NOMINAL = {"DT", "JJ", "CD", "NN", "NNS", "NNP", "PRP"}
VERBAL = {"VBD", "VBG", "MD"}


def _benepar_backend():
    try:
        import benepar  # noqa: F401
        import spacy

        nlp = spacy.load("en_core_web_sm")
        nlp.add_pipe("benepar", config={"model": "benepar_en3"})
        return nlp
    except Exception:
        return None


def _leaf(tag: str, word: str) -> str:
    return f"({tag} {word})"


def _np(chunk: list[tuple[str, str]]) -> str:
    if len(chunk) == 1:
        return _leaf(*chunk[0])
    return "(NP " + " ".join(_leaf(t, w) for t, w in chunk) + ")"


def chunk_parse(tokens: list[str], tags: list[str]) -> str:
    """Shallow deterministic bracketing covering every token."""
    pairs = list(zip(tags, tokens))
    units: list[str] = []
    i = 0
    while i < len(pairs):
        tag, word = pairs[i]
        if tag in NOMINAL:
            j = i
            while j < len(pairs) and pairs[j][0] in NOMINAL:
                j += 1
            units.append(_np(pairs[i:j]))
            i = j
        elif tag == "IN":
            j = i + 1
            while j < len(pairs) and pairs[j][0] in NOMINAL:
                j += 1
            if j > i + 1:
                units.append("(PP " + _leaf(tag, word) + " " + _np(pairs[i + 1 : j]) + ")")
            else:
                units.append(_leaf(tag, word))
            i = j if j > i + 1 else i + 1
        else:
            units.append(_leaf(tag, word))
            i += 1
    # wrap everything from the first verbal unit to the last non-punct
    # unit into a VP so sentences get a two-level skeleton
    verb_at = next(
        (k for k, u in enumerate(units) if u.startswith(tuple(f"({t} " for t in VERBAL))),
        None,
    )
    if verb_at is not None and verb_at < len(units) - 1:
        tail_end = len(units)
        while tail_end > verb_at + 1 and units[tail_end - 1].startswith(
            ("(. ", "(, ", "(: ")
        ):
            tail_end -= 1
        if tail_end > verb_at + 1:
            vp = "(VP " + " ".join(units[verb_at:tail_end]) + ")"
            units = units[:verb_at] + [vp] + units[tail_end:]
    return "(S " + " ".join(units) + ")"


def extract_trees(transcript_text: str) -> tuple[list[str], str]:
    """Returns (one bracketed tree per sentence, backend name)."""
    sentences = read_transcript(transcript_text)
    nlp = _benepar_backend()
    if nlp is not None:
        trees = []
        for tokens in sentences:
            doc = nlp(" ".join(tokens))
            sent = next(doc.sents)
            trees.append(sent._.parse_string)
        return trees, "benepar"
    log.info("benepar unavailable; using the offline chunker backend")
    trees = [chunk_parse(toks, pos_tag(toks)) for toks in sentences]
    return trees, "offline-chunker"
