"""Word-timing estimation: transcript -> timing TSV.

Without audio there is nothing to force-align against, so timings are
estimated from word lengths at a configurable speaking rate (a constant
per-word gap plus per-character duration, with a longer pause at
sentence boundaries).  Estimates are monotone by construction.
"""

from __future__ import annotations

from .tokenize import is_punct, read_transcript

BASE_SEC = 0.12          # articulation floor per word
PER_CHAR_SEC = 0.055
GAP_SEC = 0.08
SENTENCE_PAUSE_SEC = 0.45
LEAD_IN_SEC = 1.0


def estimate_timing(transcript_text: str) -> str:
    """TSV with columns word/onset_sec/offset_sec/sentence_id/token_id."""
    rows = ["word\tonset_sec\toffset_sec\tsentence_id\ttoken_id"]
    t = LEAD_IN_SEC
    for sid, tokens in enumerate(read_transcript(transcript_text)):
        for tid, tok in enumerate(tokens):
            dur = 0.02 if is_punct(tok) else BASE_SEC + PER_CHAR_SEC * len(tok)
            rows.append(f"{tok}\t{t:.4f}\t{t + dur:.4f}\t{sid}\t{tid}")
            t += dur + GAP_SEC
        t += SENTENCE_PAUSE_SEC
    return "\n".join(rows) + "\n"


def total_duration(timing_tsv: str) -> float:
    last = timing_tsv.strip().splitlines()[-1].split("\t")
    return float(last[2])
