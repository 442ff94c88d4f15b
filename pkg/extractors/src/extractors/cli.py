"""CLI: produce every ingestion file for a transcript in one pass."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from .bmat import write_bmat
from .dependencies import extract_dependencies
from .embeddings import extract_embeddings
from .glove import corpus_glove_matrix
from .manifest import ExtractionManifest
from .timing import estimate_timing
from .trees import extract_trees


def extract_all(transcript_path: str | Path, out_dir: str | Path,
                glove_path: str | Path | None = None) -> Path:
    """Run every extractor; returns the manifest path."""
    transcript_path = Path(transcript_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    text = transcript_path.read_text(encoding="utf-8")
    manifest = ExtractionManifest(transcript_path)

    trees, tree_backend = extract_trees(text)
    trees_path = out / "stimulus.trees"
    trees_path.write_text("\n".join(trees) + "\n")
    manifest.record_tool("constituency", tree_backend)
    manifest.record_output(trees_path, sentences=len(trees))

    conllu, dep_backend = extract_dependencies(text)
    conllu_path = out / "stimulus.conllu"
    conllu_path.write_text(conllu)
    manifest.record_tool("dependency", dep_backend)
    manifest.record_output(conllu_path)

    timing = estimate_timing(text)
    timing_path = out / "timing.tsv"
    timing_path.write_text(timing)
    manifest.record_tool("timing", "offline-length-model")
    manifest.record_output(timing_path, rows=len(timing.strip().splitlines()) - 1)

    matrix, emb_backend = extract_embeddings(text)
    emb_path = out / "embeddings.bmat"
    write_bmat(emb_path, matrix)
    manifest.record_tool("embeddings", emb_backend)
    manifest.record_output(emb_path, rows=int(matrix.shape[0]), dim=int(matrix.shape[1]))

    if glove_path is not None:
        glove_matrix = corpus_glove_matrix(text, Path(glove_path).read_text(encoding="utf-8"))
        glove_out = out / "glove.bmat"
        write_bmat(glove_out, glove_matrix)
        manifest.record_tool("glove", "text-to-bmat converter")
        manifest.record_output(glove_out, rows=int(glove_matrix.shape[0]),
                               dim=int(glove_matrix.shape[1]))

    manifest_path = out / "manifest.json"
    manifest.write(manifest_path)
    return manifest_path


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    ap = argparse.ArgumentParser(
        prog="story-extract",
        description="Produce encoding-pipeline ingestion files from a transcript",
    )
    ap.add_argument("--transcript", required=True, help="sentence-per-line text file")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--glove", default=None, help="GloVe .txt to convert alongside")
    ap.add_argument("--verify", action="store_true",
                    help="re-check checksums of an existing manifest and exit")
    args = ap.parse_args(argv)
    if args.verify:
        from .manifest import ExtractionManifest

        stale = ExtractionManifest.verify(Path(args.out) / "manifest.json")
        for name in stale:
            print(f"STALE  {name}")
        return 1 if stale else 0
    manifest_path = extract_all(args.transcript, args.out, args.glove)
    print(f"wrote {manifest_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
