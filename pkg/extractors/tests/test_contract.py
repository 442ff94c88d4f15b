"""Contract acceptance: extractor outputs must pass the encoding
pipeline's own ingest validation with zero errors, with token counts
agreeing across every produced file."""

import numpy as np
import pytest

from extractors.cli import extract_all

neurosyntax = pytest.importorskip("neurosyntax")
from neurosyntax.bmat import read_bmat  # noqa: E402
from neurosyntax.treebank import load_corpus  # noqa: E402

TEN_SENTENCES = """\
I began my illustrious career as a reporter in the Bronx.
The old man told a quiet story about the river.
A small bird saw the cat near the road.

She heard the story and, uh, left the house.
They found a bright road to the river.
The dog ran home after the storm.
He said it's fine.
We walked over the bridge (slowly) at night.
The reporter wrote about the story.
A cat and a dog lived in the house.
"""


@pytest.fixture(scope="module")
def extracted(tmp_path_factory):
    root = tmp_path_factory.mktemp("contract")
    transcript = root / "story.txt"
    transcript.write_text(TEN_SENTENCES)
    manifest_path = extract_all(transcript, root / "out")
    return manifest_path.parent


def test_outputs_pass_primary_ingest(extracted):
    corpus = load_corpus(
        extracted / "stimulus.trees",
        extracted / "stimulus.conllu",
        extracted / "timing.tsv",
    )
    assert len(corpus.sentences) == 10  # empty line skipped


def test_token_counts_agree_across_files(extracted):
    corpus = load_corpus(
        extracted / "stimulus.trees",
        extracted / "stimulus.conllu",
        extracted / "timing.tsv",
    )
    n = corpus.n_tokens
    embeddings = read_bmat(extracted / "embeddings.bmat")
    assert embeddings.shape == (n, 768)
    timing_rows = (extracted / "timing.tsv").read_text().strip().splitlines()
    assert len(timing_rows) - 1 == n
    tree_lines = (extracted / "stimulus.trees").read_text().strip().splitlines()
    assert len(tree_lines) == 10


def test_every_block_has_single_root(extracted):
    from neurosyntax.treebank import parse_conllu

    graphs = parse_conllu((extracted / "stimulus.conllu").read_text())
    assert len(graphs) == 10
    for g in graphs:
        assert sum(1 for e in g.edges if e.head == -1) == 1


def test_embeddings_feed_sem_space(extracted, tmp_path):
    """The embeddings BMAT drives the pipeline's SEM space end to end."""
    from neurosyntax.config import parse_config
    from neurosyntax.pipeline import cmd_features

    cfg = parse_config(
        "trees = out/stimulus.trees\n"
        "conllu = out/stimulus.conllu\n"
        "timing = out/timing.tsv\n"
        "embeddings = out/embeddings.bmat\n"
        "spaces = SEM\n"
        f"out = {tmp_path}\n"
        "sem_dim = 32\n",
        base_dir=str(extracted.parent),
    )
    written = cmd_features(cfg)
    sem = read_bmat(written["SEM"])
    assert sem.shape[1] <= 32
    assert np.all(np.isfinite(sem))
