import json

import numpy as np
import pytest

from extractors import dependencies as dep
from extractors import embeddings as emb
from extractors import glove as gl
from extractors import timing as tm
from extractors import tokenize as tk
from extractors import trees as tr
from extractors.cli import extract_all
from extractors.manifest import ExtractionManifest


def test_tokenize_words_and_punct():
    assert tk.tokenize("I began, then stopped.") == [
        "I", "began", ",", "then", "stopped", ".",
    ]
    assert tk.tokenize("it's fine") == ["it's", "fine"]


def test_tokenize_escapes_brackets():
    assert tk.tokenize("a (quiet) word") == ["a", "-LRB-", "quiet", "-RRB-", "word"]
    assert tk.is_punct("-LRB-")


def test_pos_tag_basics():
    toks = ["The", "old", "cat", "ran", "quickly", "."]
    tags = tk.pos_tag(toks)
    assert tags[0] == "DT"
    assert tags[3] == "VBD"
    assert tags[4] == "RB"
    assert tags[5] == "."


def test_read_transcript_skips_empty_lines(caplog):
    with caplog.at_level("WARNING"):
        sents = tk.read_transcript("one line\n\ntwo line\n")
    assert len(sents) == 2
    assert any("empty" in r.message for r in caplog.records)


def balanced(text: str) -> bool:
    depth = 0
    for c in text:
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def test_chunk_parse_is_balanced_and_covers_tokens():
    toks = tk.tokenize("The old man told a story about the river.")
    tree = tr.chunk_parse(toks, tk.pos_tag(toks))
    assert balanced(tree)
    for tok in toks:
        assert f" {tok})" in tree


def test_chunk_parse_single_word():
    tree = tr.chunk_parse(["Hello"], tk.pos_tag(["Hello"]))
    assert balanced(tree)
    assert tree.startswith("(S ")


def test_rule_parse_single_root_and_tree():
    toks = tk.tokenize("The cat saw a small bird in the house.")
    tags = tk.pos_tag(toks)
    arcs = dep.rule_parse(toks, tags)
    roots = [i for i, (h, _) in enumerate(arcs) if h == -1]
    assert len(roots) == 1
    heads = {i: h for i, (h, _) in enumerate(arcs)}
    for start in heads:
        seen = set()
        cur = start
        while cur != -1:
            assert cur not in seen, "cycle"
            seen.add(cur)
            cur = heads[cur]


def test_rule_parse_verbless_sentence():
    toks = ["Quiet", "night", "."]
    arcs = dep.rule_parse(toks, tk.pos_tag(toks))
    assert sum(1 for h, _ in arcs if h == -1) == 1


def test_timing_monotone_and_counts():
    text = "one two three\nfour five\n"
    tsv = tm.estimate_timing(text)
    lines = tsv.strip().splitlines()[1:]
    assert len(lines) == 5
    onsets = [float(l.split("\t")[1]) for l in lines]
    offsets = [float(l.split("\t")[2]) for l in lines]
    assert all(b > a for a, b in zip(onsets, onsets[1:]))
    assert all(off > on for on, off in zip(onsets, offsets))


def test_embeddings_shape_and_context_dependence():
    text = "the cat ran\nthe cat slept\n"
    M, backend = emb.extract_embeddings(text)
    assert M.shape == (6, 768)
    assert backend in ("offline-hashed", "transformers:bert-base-uncased")
    # same word, different neighbors -> different rows
    assert not np.allclose(M[1], M[4])
    # determinism
    M2, _ = emb.extract_embeddings(text)
    assert np.array_equal(M, M2)


def test_glove_conversion(caplog):
    glove_text = "the 1.0 2.0\ncat 0.5 -0.5\n"
    with caplog.at_level("WARNING"):
        M = gl.corpus_glove_matrix("the cat ran\n", glove_text)
    assert M.shape == (3, 2)
    assert np.allclose(M[0], [1.0, 2.0])
    assert np.allclose(M[2], 0.0)  # OOV row
    assert any("missing" in r.message for r in caplog.records)


def test_glove_rejects_ragged():
    with pytest.raises(ValueError):
        gl.parse_glove("a 1.0 2.0\nb 1.0\n")


def test_manifest_checksums_and_verify(tmp_path):
    transcript = tmp_path / "story.txt"
    transcript.write_text("The cat ran home.\nA bird saw the cat.\n")
    manifest_path = extract_all(transcript, tmp_path / "out")
    payload = json.loads(manifest_path.read_text())
    assert payload["tools"]["constituency"]
    assert len(payload["outputs"]) == 4
    assert ExtractionManifest.verify(manifest_path) == []
    # tamper with one output: verify must flag it
    (tmp_path / "out" / "timing.tsv").write_text("word\tonset\n")
    assert ExtractionManifest.verify(manifest_path) == ["timing.tsv"]
