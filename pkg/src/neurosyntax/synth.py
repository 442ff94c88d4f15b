"""Synthetic desk-scale datasets for end-to-end pipeline runs.

Generates a small story corpus (trees, dependencies, timing, frequency
table), subject fMRI matrices, and parcel files.  Optionally plants a
signal driven by one feature space's aligned design into the voxels of
a chosen ROI so comparison studies have a known ground truth.
"""

from __future__ import annotations

import random
from pathlib import Path

import numpy as np

from . import atlas
from .bmat import read_matrix, write_bmat
from .config import RunConfig, parse_config
from .signal import FirConfig, ResampleConfig, fir_expand, resample_to_tr, zscore_columns

NOUNS = ["cat", "dog", "man", "story", "river", "house", "bird", "road"]
VERBS = ["ran", "saw", "told", "found", "heard", "left"]
DETS = ["the", "a"]
ADJS = ["old", "small", "quiet", "bright"]

OTHER_PARCELS = ["V1", "V2", "MT", "A1", "LIPv", "FEF", "6a", "4"]


def _sentence(rng: random.Random):
    """A tiny NP-VP sentence with tree and dependency chain."""
    det, adj, noun = rng.choice(DETS), rng.choice(ADJS), rng.choice(NOUNS)
    verb, obj_det, obj = rng.choice(VERBS), rng.choice(DETS), rng.choice(NOUNS)
    with_adj = rng.random() < 0.5
    if with_adj:
        words = [det, adj, noun, verb, obj_det, obj]
        tree = (
            f"(S (NP (DT {det}) (JJ {adj}) (NN {noun})) "
            f"(VP (VBD {verb}) (NP (DT {obj_det}) (NN {obj}))))"
        )
        pos = ["DT", "JJ", "NN", "VBD", "DT", "NN"]
        heads = [3, 3, 4, 0, 6, 4]  # 1-based CoNLL-U heads, verb is root
        rels = ["det", "amod", "nsubj", "root", "det", "obj"]
    else:
        words = [det, noun, verb, obj_det, obj]
        tree = (
            f"(S (NP (DT {det}) (NN {noun})) "
            f"(VP (VBD {verb}) (NP (DT {obj_det}) (NN {obj}))))"
        )
        pos = ["DT", "NN", "VBD", "DT", "NN"]
        heads = [2, 3, 0, 5, 3]
        rels = ["det", "nsubj", "root", "det", "obj"]
    conllu = "\n".join(
        f"{i + 1}\t{w}\t_\t{p}\t_\t_\t{h}\t{r}\t_\t_"
        for i, (w, p, h, r) in enumerate(zip(words, pos, heads, rels))
    )
    return words, tree, conllu


def write_corpus_files(
    out: Path, n_sentences: int, run_duration: float, seed: int
) -> int:
    """Write trees/conllu/timing/frequency files; returns token count."""
    rng = random.Random(seed)
    trees, conllus, rows = [], [], []
    all_words = []
    for sid in range(n_sentences):
        words, tree, conllu = _sentence(rng)
        trees.append(tree)
        conllus.append(conllu)
        all_words.append(words)
    n_tokens = sum(len(w) for w in all_words)
    # spread word onsets uniformly over the run with a leading pause
    usable = run_duration * 0.95
    step = usable / n_tokens
    t = run_duration * 0.02
    cursor = 0
    for sid, words in enumerate(all_words):
        for tid, word in enumerate(words):
            onset = t + cursor * step
            rows.append(f"{word}\t{onset:.4f}\t{onset + step * 0.8:.4f}\t{sid}\t{tid}")
            cursor += 1
    (out / "stimulus.trees").write_text("\n".join(trees) + "\n")
    (out / "stimulus.conllu").write_text("\n\n".join(conllus) + "\n")
    (out / "timing.tsv").write_text(
        "word\tonset_sec\toffset_sec\tsentence_id\ttoken_id\n" + "\n".join(rows) + "\n"
    )
    vocab = sorted({w for ws in all_words for w in ws})
    freq_rng = random.Random(seed + 1)
    (out / "frequency.tsv").write_text(
        "\n".join(f"{w}\t{freq_rng.uniform(100, 1e6):.1f}" for w in vocab) + "\n"
    )
    return n_tokens


def write_parcels(
    out: Path, subject: str, n_voxels: int, planted_roi: str, planted_frac: float, seed: int
) -> np.ndarray:
    """Parcel TSV: the first block of voxels belongs to the planted ROI
    (left hemisphere); the rest cycle through other language and
    non-language parcels.  Returns the planted voxel index mask."""
    rng = random.Random(seed)
    n_planted = int(n_voxels * planted_frac)
    planted_parcels = atlas.ROI_PARCELS[planted_roi]
    filler = [
        (roi, p)
        for roi, ps in atlas.ROI_PARCELS.items()
        if roi != planted_roi
        for p in ps
    ]
    lines = []
    mask = np.zeros(n_voxels, dtype=bool)
    for v in range(n_voxels):
        if v < n_planted:
            parcel = planted_parcels[v % len(planted_parcels)]
            hemi = "L"
            mask[v] = True
        elif rng.random() < 0.6:
            _, parcel = filler[v % len(filler)]
            hemi = "L" if rng.random() < 0.5 else "R"
        else:
            parcel = OTHER_PARCELS[v % len(OTHER_PARCELS)]
            hemi = "L" if rng.random() < 0.5 else "R"
        lines.append(f"{v}\t{hemi}\t{parcel}")
    (out / f"{subject}_parcels.tsv").write_text("\n".join(lines) + "\n")
    return mask


def make_dataset(
    out_dir: str | Path,
    n_subjects: int = 3,
    n_voxels: int = 2000,
    n_tr: int = 282,
    tr: float = 1.5,
    n_sentences: int = 40,
    seed: int = 0,
    planted_space: str | None = "CC",
    baseline_space: str = "CM",
    planted_roi: str = "MFG",
    snr: float = 10.0,
    subtree_dim: int = 16,
    extra_config: str = "",
) -> Path:
    """Build a complete runnable dataset directory and its config file.

    planted_space=None produces a pure-null dataset (fMRI is white
    noise).  Otherwise Y in the planted ROI is driven by that space's
    FIR-expanded design at the requested SNR.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    run_duration = n_tr * tr
    write_corpus_files(out, n_sentences, run_duration, seed)

    subject_lines = []
    for si in range(n_subjects):
        subject = f"s{si + 1:02d}"
        subject_lines.append(f"subject.{subject}.fmri = {subject}.bmat")
        subject_lines.append(f"subject.{subject}.parcels = {subject}_parcels.tsv")

    config_text = "\n".join(
        [
            "trees = stimulus.trees",
            "conllu = stimulus.conllu",
            "timing = timing.tsv",
            "frequency = frequency.tsv",
            "out = out",
            f"seed = {seed}",
            f"spaces = {baseline_space},{planted_space or 'CC'}",
            f"tr = {tr}",
            f"n_tr = {n_tr}",
            f"subtree_dim = {subtree_dim}",
            # desk-scale designs run near p = n; the grid must reach real
            # shrinkage strengths or every voxel interpolates noise
            "lambda_grid = 0.001,0.01,0.1,1,10,100,1000,10000",
            "gcn_epochs = 2",
            "gcn_hidden = 16",
            "n_permutations = 199",
            "n_bootstrap = 999",
            f"study_individual = {baseline_space};{planted_space or 'CC'}",
            f"study_hierarchical = {baseline_space};{baseline_space}+{planted_space or 'CC'}",
            f"study_pairwise = {baseline_space}+{planted_space or 'CC'}-{baseline_space}",
            *subject_lines,
            extra_config,
        ]
    )
    config_path = out / "run.cfg"
    config_path.write_text(config_text + "\n")

    # build the driving design the same way the encoder will see it
    cfg = parse_config(config_text, base_dir=str(out))
    from .pipeline import build_corpus, build_feature_space

    corpus = build_corpus(cfg)
    rng = np.random.default_rng(seed + 7)
    signal_design = None
    if planted_space is not None:
        fm = build_feature_space(cfg, corpus, planted_space)
        rcfg = ResampleConfig(tr=tr)
        tr_mat = resample_to_tr(
            fm.values, np.array(corpus.token_onsets()), rcfg, n_tr
        )
        tr_mat = zscore_columns(tr_mat, tr_mat)
        fir = FirConfig(n_delays=cfg.n_delays, window_sec=cfg.n_delays * tr, tr=tr)
        signal_design = fir_expand(tr_mat, fir)

    for si in range(n_subjects):
        subject = f"s{si + 1:02d}"
        mask = write_parcels(
            out, subject, n_voxels, planted_roi, planted_frac=0.05, seed=seed + si
        )
        noise = rng.standard_normal((n_tr, n_voxels))
        data = noise
        if signal_design is not None:
            w = rng.standard_normal((signal_design.shape[1], int(mask.sum())))
            sig = signal_design @ w
            sig_sd = sig.std(axis=0)
            sig_sd[sig_sd < 1e-12] = 1.0
            sig = sig / sig_sd * np.sqrt(snr)
            data = noise.copy()
            data[:, mask] += sig
        write_bmat(out / f"{subject}.bmat", data)
    return config_path
