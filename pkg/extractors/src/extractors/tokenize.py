"""Shared tokenizer and heuristic POS tagger for the offline backends."""

from __future__ import annotations

import logging
import re
import unicodedata

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"\w+(?:['’]\w+)*|[^\w\s]+")

DETERMINERS = {"the", "a", "an", "this", "that", "these", "those", "my", "your",
               "his", "her", "its", "our", "their"}
PREPOSITIONS = {"in", "on", "at", "of", "to", "for", "with", "from", "by",
                "about", "as", "into", "over", "under", "after", "before",
                "near", "through", "during"}
PRONOUNS = {"i", "you", "he", "she", "it", "we", "they", "me", "him", "us",
            "them", "who", "what"}
CONJUNCTIONS = {"and", "or", "but", "nor", "so", "yet"}
AUX_VERBS = {"is", "am", "are", "was", "were", "be", "been", "being", "do",
             "does", "did", "have", "has", "had", "will", "would", "can",
             "could", "shall", "should", "may", "might", "must"}
COMMON_VERBS = {"began", "ran", "said", "told", "went", "saw", "heard",
                "found", "left", "got", "made", "took", "came", "knew",
                "thought", "toiled", "worked", "lived", "walked"}
ADVERB_SUFFIX = ("ly",)
PUNCT_TAGS = {".": ".", ",": ",", ";": ":", ":": ":", "!": ".", "?": ".",
              "(": "-LRB-", ")": "-RRB-"}


_BRACKET_TAGS = {"-LRB-": "-LRB-", "-RRB-": "-RRB-",
                 "-LCB-": "-LRB-", "-RCB-": "-RRB-"}


def is_punct(token: str) -> bool:
    if token in _BRACKET_TAGS:
        return True
    return all(unicodedata.category(c).startswith("P") for c in token)


_BRACKET_ESCAPES = {"(": "-LRB-", ")": "-RRB-", "{": "-LCB-", "}": "-RCB-"}


def tokenize(sentence: str) -> list[str]:
    """Word/punctuation split; bracket characters take their PTB escape
    so every downstream file format stays parseable."""
    return [_BRACKET_ESCAPES.get(t, t) for t in _TOKEN_RE.findall(sentence)]


def pos_tag(tokens: list[str]) -> list[str]:
    """Rule-lexicon tagger; the goal is plausible PTB tags with stable
    behavior, not tagging accuracy."""
    tags = []
    for i, tok in enumerate(tokens):
        low = tok.lower()
        if tok in _BRACKET_TAGS:
            tags.append(_BRACKET_TAGS[tok])
        elif is_punct(tok):
            tags.append(PUNCT_TAGS.get(tok[0], ":" if len(tok) > 1 else "SYM"))
        elif low in DETERMINERS:
            tags.append("DT")
        elif low in PREPOSITIONS:
            tags.append("IN")
        elif low in PRONOUNS:
            tags.append("PRP")
        elif low in CONJUNCTIONS:
            tags.append("CC")
        elif low in AUX_VERBS:
            tags.append("MD" if low in ("will", "would", "can", "could",
                                        "shall", "should", "may", "might",
                                        "must") else "VBD")
        elif low in COMMON_VERBS or (low.endswith("ed") and len(low) > 3):
            tags.append("VBD")
        elif low.endswith("ing") and len(low) > 4:
            tags.append("VBG")
        elif low.endswith(ADVERB_SUFFIX) and len(low) > 3:
            tags.append("RB")
        elif low.isdigit():
            tags.append("CD")
        elif tok[0].isupper() and i > 0:
            tags.append("NNP")
        elif low.endswith("s") and len(low) > 3 and not low.endswith("ss"):
            tags.append("NNS")
        else:
            tags.append("NN")
    return tags


def read_transcript(text: str) -> list[list[str]]:
    """Sentence-per-line transcript -> token lists; empty lines skipped
    with a warning."""
    sentences = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            log.warning("transcript line %d is empty; skipped", lineno)
            continue
        tokens = tokenize(line.strip())
        if tokens:
            sentences.append(tokens)
    return sentences
