"""Dependency extraction to CoNLL-U, one block per transcript line.

Prefers a spaCy pipeline when importable; the offline backend assigns
heads with deterministic rules that always yield a single root and an
acyclic (tree-shaped) arc set: determiners/adjectives attach forward to
the next nominal, case markers to their noun, nominals and everything
else to the root verb.
"""

from __future__ import annotations

import logging

from .tokenize import is_punct, pos_tag, read_transcript

log = logging.getLogger(__name__)

NOMINAL = {"NN", "NNS", "NNP", "PRP", "CD"}
FORWARD_ATTACH = {"DT": "det", "JJ": "amod", "IN": "case"}
UPOS = {
    "DT": "DET", "JJ": "ADJ", "CD": "NUM", "NN": "NOUN", "NNS": "NOUN",
    "NNP": "PROPN", "PRP": "PRON", "IN": "ADP", "CC": "CCONJ", "RB": "ADV",
    "VBD": "VERB", "VBG": "VERB", "MD": "AUX",
}


def _spacy_backend():
    try:
        import spacy

        return spacy.load("en_core_web_sm")
    except Exception:
        return None


def rule_parse(tokens: list[str], tags: list[str]) -> list[tuple[int, str]]:
    """(head, relation) per token, 0-based heads, -1 for the root.

    Acyclicity: every non-root token attaches either to the root or to a
    strictly later nominal, and nominals attach to the root.
    """
    n = len(tokens)
    root = next((i for i, t in enumerate(tags) if t in ("VBD", "VBG", "MD")), 0)

    def next_nominal(start: int):
        for j in range(start, n):
            if tags[j] in NOMINAL:
                return j
        return None

    arcs: list[tuple[int, str]] = []
    for i, (tok, tag) in enumerate(zip(tokens, tags)):
        if i == root:
            arcs.append((-1, "root"))
        elif is_punct(tok):
            arcs.append((root, "punct"))
        elif tag in FORWARD_ATTACH:
            target = next_nominal(i + 1)
            if target is not None and target != root:
                arcs.append((target, FORWARD_ATTACH[tag]))
            else:
                arcs.append((root, FORWARD_ATTACH[tag]))
        elif tag in NOMINAL:
            arcs.append((root, "nsubj" if i < root else "obj"))
        else:
            arcs.append((root, "advmod" if tag == "RB" else "dep"))
    return arcs


def _conllu_block(tokens, tags, arcs) -> str:
    lines = []
    for i, (tok, tag, (head, rel)) in enumerate(zip(tokens, tags, arcs)):
        upos = "PUNCT" if is_punct(tok) else UPOS.get(tag, "NOUN")
        lines.append(
            f"{i + 1}\t{tok}\t_\t{upos}\t{tag}\t_\t{head + 1}\t{rel}\t_\t_"
        )
    return "\n".join(lines)


def extract_dependencies(transcript_text: str) -> tuple[str, str]:
    """Returns (CoNLL-U text, backend name)."""
    sentences = read_transcript(transcript_text)
    nlp = _spacy_backend()
    blocks = []
    if nlp is not None:
        for tokens in sentences:
            doc = nlp(" ".join(tokens))
            lines = []
            for i, tok in enumerate(doc):
                head = 0 if tok.head is tok else tok.head.i + 1
                rel = "root" if tok.head is tok else tok.dep_
                lines.append(
                    f"{i + 1}\t{tok.text}\t_\t{tok.pos_}\t{tok.tag_}\t_\t{head}\t{rel}\t_\t_"
                )
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n", "spacy"
    log.info("spacy unavailable; using the offline rule backend")
    for tokens in sentences:
        tags = pos_tag(tokens)
        blocks.append(_conllu_block(tokens, tags, rule_parse(tokens, tags)))
    return "\n\n".join(blocks) + "\n", "offline-rules"
