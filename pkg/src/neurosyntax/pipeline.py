"""End-to-end orchestration: features -> encode -> compare -> report.

Every artifact is a BMAT matrix plus a JSON sidecar carrying the run
config hash; reports refuse to mix artifacts from different runs.
Identical config and seed produce a byte-identical output tree.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import atlas, features as ft, gcn, incparser as ip, report, stats, treebank as tb
from .bmat import read_matrix, write_bmat
from .config import RunConfig, group_name, parse_group, parse_pair
from .encoder import FoldSpec, RidgeConfig, cross_validate, semantic_probe
from .signal import FirConfig, ResampleConfig, fir_expand, resample_to_tr, zscore_columns
from .stats import StatsConfig

log = logging.getLogger(__name__)


class PipelineError(ValueError):
    pass


class TrMismatch(PipelineError):
    pass


class MissingEncoding(PipelineError):
    pass


class HashMismatch(PipelineError):
    pass


SPACE_NEEDS = {
    "PU": (),
    "CM": ("frequency",),
    "PD": ("conllu",),
    "CC": (),
    "CI": (),
    "INC": (),
    "DEP": ("conllu",),
    "SEM": ("embeddings",),
}


@dataclass
class FmriRun:
    subject: str
    data: np.ndarray  # TR x V
    tr: float
    labels: atlas.ParcelLabels

    def __post_init__(self):
        if self.data.ndim != 2:
            raise PipelineError(f"subject {self.subject}: fMRI must be 2-D")
        if not np.all(np.isfinite(self.data)):
            raise PipelineError(f"subject {self.subject}: non-finite fMRI values")
        if len(self.labels) != self.data.shape[1]:
            raise PipelineError(
                f"subject {self.subject}: {len(self.labels)} parcel labels "
                f"for {self.data.shape[1]} voxels"
            )


def _write_sidecar(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _read_sidecar(path: Path) -> dict:
    return json.loads(path.read_text())


def _chain_graphs(trees):
    """Placeholder dependency chains for runs without a CoNLL-U file
    (only graph-free spaces may be built on top of these)."""
    graphs = []
    for tree in trees:
        n = len(tree.tokens)
        edges = [tb.DependencyEdge(head=-1, dependent=n - 1, relation="root")]
        edges += [
            tb.DependencyEdge(head=i + 1, dependent=i, relation="dep")
            for i in range(n - 1)
        ]
        graphs.append(tb.DependencyGraph(tokens=tree.tokens, edges=tuple(edges)))
    return graphs


def build_corpus(cfg: RunConfig) -> tb.StimulusCorpus:
    if not cfg.trees:
        raise PipelineError("config has no trees path")
    with open(cfg.path(cfg.trees), encoding="utf-8") as fh:
        trees = [tb.parse_bracketed(line.strip()) for line in fh if line.strip()]
    if cfg.conllu:
        with open(cfg.path(cfg.conllu), encoding="utf-8") as fh:
            graphs = tb.parse_conllu(fh.read())
    else:
        graphs = _chain_graphs(trees)
    corpus = tb.corpus_from_parses(trees, graphs)
    if cfg.timing:
        corpus = tb.load_timing(cfg.path(cfg.timing).read_text(encoding="utf-8"), corpus)
    return corpus


def _check_space_inputs(cfg: RunConfig, spaces) -> None:
    for space in spaces:
        for need in SPACE_NEEDS[space]:
            if not getattr(cfg, need):
                raise PipelineError(
                    f"space {space} requires a {need} path in the config"
                )
        for need in SPACE_NEEDS[space]:
            p = cfg.path(getattr(cfg, need))
            if not p.exists():
                raise PipelineError(f"space {space}: missing input file {p}")


def build_feature_space(
    cfg: RunConfig, corpus: tb.StimulusCorpus, space: str
) -> ft.FeatureMatrix:
    enc_cfg = ft.SubtreeEncodingConfig(
        dim=cfg.subtree_dim, mode=cfg.subtree_mode, seed=cfg.seed
    )
    if space == "PU":
        return ft.punctuation_features(corpus, mark=cfg.pu_mark)
    if space == "CM":
        freq = ft.FrequencyTable.from_tsv(
            cfg.path(cfg.frequency).read_text(encoding="utf-8")
        )
        return ft.complexity_metrics(corpus, freq)
    if space == "PD":
        return ft.pos_dep_features(corpus)
    if space == "CC":
        return ft.cc_features(corpus, enc_cfg)
    if space == "CI":
        return ft.ci_features(corpus, enc_cfg)
    if space == "INC":
        grammar = ip.induce_pcfg(
            list(corpus.trees), smoothing_k=cfg.pcfg_smoothing
        )
        fm = ip.inc_corpus_features(corpus, grammar, enc_cfg, cfg.beam_width)
        fm.meta["pcfg_dump"] = grammar.dumps()
        return fm
    if space == "DEP":
        gcn_cfg = gcn.GcnConfig.from_corpus(
            corpus, layers=cfg.gcn_layers, hidden=cfg.gcn_hidden
        )
        tc = gcn.TrainConfig(epochs=cfg.gcn_epochs, learning_rate=cfg.gcn_lr, seed=cfg.seed)
        model = gcn.gcn_train(corpus, gcn_cfg, tc)
        fm = gcn.extract_dep_features(corpus, model)
        fm.meta["gcn_model"] = model
        return fm
    if space == "SEM":
        raw = read_matrix(cfg.path(cfg.embeddings))
        if raw.shape[0] != corpus.n_tokens:
            raise TrMismatch(
                f"embeddings rows {raw.shape[0]} != corpus tokens {corpus.n_tokens}"
            )
        fm = ft.FeatureMatrix(space="SEM", values=raw, meta={})
        return ft.pca_reduce(fm, dim=cfg.sem_dim)
    raise PipelineError(f"unknown space {space!r}")


def cmd_features(cfg: RunConfig, spaces=None) -> dict[str, Path]:
    """Build the requested feature spaces and write BMAT + JSON pairs."""
    spaces = tuple(spaces or cfg.spaces)
    _check_space_inputs(cfg, spaces)
    corpus = build_corpus(cfg)
    out = cfg.out_dir() / "features"
    out.mkdir(parents=True, exist_ok=True)
    run_hash = cfg.run_hash()
    written = {}
    for space in spaces:
        fm = build_feature_space(cfg, corpus, space)
        if fm.n_rows != corpus.n_tokens:
            raise PipelineError(f"{space}: row count diverged from corpus")
        bmat_path = out / f"{space}.bmat"
        write_bmat(bmat_path, fm.values)
        _write_sidecar(
            out / f"{space}.json",
            {
                "space": space,
                "rows": fm.n_rows,
                "dim": fm.dim,
                "feature_hash": fm.meta.get("config_hash", ""),
                "run_config_hash": run_hash,
            },
        )
        if "pcfg_dump" in fm.meta:
            (out / f"{space}.pcfg").write_text(fm.meta["pcfg_dump"])
        if "gcn_model" in fm.meta:
            gcn.save_model(fm.meta["gcn_model"], out / f"{space}.gcn")
        written[space] = bmat_path
        log.info("built %s: %d x %d", space, fm.n_rows, fm.dim)
    return written


def load_fmri_runs(cfg: RunConfig) -> list[FmriRun]:
    if not cfg.subjects:
        raise PipelineError("config lists no subjects")
    runs = []
    n_tr = None
    for sid in sorted(cfg.subjects):
        entry = cfg.subjects[sid]
        data = read_matrix(cfg.path(entry["fmri"]))
        labels = atlas.load_parcel_labels(
            cfg.path(entry["parcels"]).read_text(encoding="utf-8")
        )
        run = FmriRun(subject=sid, data=data, tr=cfg.tr, labels=labels)
        if n_tr is None:
            n_tr = data.shape[0]
        elif data.shape[0] != n_tr:
            raise TrMismatch(
                f"subject {sid}: {data.shape[0]} TRs, others have {n_tr}"
            )
        runs.append(run)
    return runs


def aligned_design(cfg: RunConfig, corpus, spaces) -> np.ndarray:
    """Word features -> TR design: per-space resample + z-score, column
    concatenation, then FIR delay expansion."""
    fdir = cfg.out_dir() / "features"
    onsets = np.array(corpus.token_onsets())
    rcfg = ResampleConfig(lobes=cfg.lanczos_lobes, tr=cfg.tr, mode=cfg.resample_mode)
    blocks = []
    for space in spaces:
        path = fdir / f"{space}.bmat"
        if not path.exists():
            raise MissingEncoding(f"feature space {space} not built (run features)")
        values = read_matrix(path)
        if values.shape[0] != corpus.n_tokens:
            raise TrMismatch(
                f"{space}: {values.shape[0]} rows vs {corpus.n_tokens} tokens"
            )
        tr_mat = resample_to_tr(values, onsets, rcfg, cfg.n_tr)
        blocks.append(zscore_columns(tr_mat, tr_mat))
    design = np.hstack(blocks)
    fir = FirConfig(n_delays=cfg.n_delays, window_sec=cfg.n_delays * cfg.tr, tr=cfg.tr)
    return fir_expand(design, fir)


def _encode_one(cfg, design, run, folds, out_dir, run_hash):
    ridge_cfg = RidgeConfig(
        lambda_grid=cfg.lambda_grid, validation_fraction=cfg.validation_fraction
    )
    if run.data.shape[0] != design.shape[0]:
        raise TrMismatch(
            f"subject {run.subject}: {run.data.shape[0]} fMRI TRs vs "
            f"{design.shape[0]} design rows"
        )
    scores = cross_validate(design, run.data, folds, ridge_cfg)
    pred, _ = scores.concatenated()
    write_bmat(out_dir / f"{run.subject}.pred.bmat", pred)
    write_bmat(
        out_dir / f"{run.subject}.scores.bmat",
        np.vstack([scores.fold_r2, scores.pooled_r2[None, :]]),
    )
    lam_values, lam_counts = np.unique(scores.chosen_lambdas, return_counts=True)
    _write_sidecar(
        out_dir / f"{run.subject}.json",
        {
            "subject": run.subject,
            "fold_boundaries": [list(b) for b in folds.boundaries],
            "lambda_histogram": {
                repr(float(v)): int(c) for v, c in zip(lam_values, lam_counts)
            },
            "mean_pooled_r2": float(scores.pooled_r2.mean()),
            "n_voxels": int(run.data.shape[1]),
            "run_config_hash": run_hash,
        },
    )
    return scores


def cmd_encode(cfg: RunConfig, groups=None) -> list[Path]:
    """Fit the CV ridge chain for each feature group and subject."""
    groups = [parse_group(g) if isinstance(g, str) else tuple(g) for g in (
        groups or required_groups(cfg)
    )]
    corpus = build_corpus(cfg)
    runs = load_fmri_runs(cfg)
    folds = FoldSpec.contiguous(cfg.n_tr, cfg.folds)
    run_hash = cfg.run_hash()
    written = []
    for group in groups:
        design = aligned_design(cfg, corpus, group)
        gdir = cfg.out_dir() / "encode" / group_name(group)
        gdir.mkdir(parents=True, exist_ok=True)
        if cfg.jobs > 1:
            with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                list(
                    pool.map(
                        lambda run: _encode_one(cfg, design, run, folds, gdir, run_hash),
                        runs,
                    )
                )
        else:
            for run in runs:
                _encode_one(cfg, design, run, folds, gdir, run_hash)
        written.append(gdir)
        log.info("encoded group %s (%d subjects)", group_name(group), len(runs))
    return written


def required_groups(cfg: RunConfig) -> list[str]:
    """Every feature group any configured study touches."""
    out: list[str] = []

    def add(name: str):
        if name not in out:
            out.append(name)

    for g in cfg.study_individual:
        add(g)
    for g in cfg.study_hierarchical:
        add(g)
    for pair in cfg.study_pairwise:
        left, right = parse_pair(pair)
        add(group_name(left))
        add(group_name(right))
    return out


def _load_encoding(cfg: RunConfig, group: tuple[str, ...], subject: str):
    gdir = cfg.out_dir() / "encode" / group_name(group)
    pred_path = gdir / f"{subject}.pred.bmat"
    meta_path = gdir / f"{subject}.json"
    if not pred_path.exists() or not meta_path.exists():
        raise MissingEncoding(
            f"no encoding for group {group_name(group)} subject {subject}"
        )
    meta = _read_sidecar(meta_path)
    if meta["run_config_hash"] != cfg.run_hash():
        raise HashMismatch(
            f"{meta_path} was produced by a different run config"
        )
    pred = read_matrix(pred_path)
    boundaries = [tuple(b) for b in meta["fold_boundaries"]]
    preds = [pred[a:b] for a, b in boundaries]
    scores_mat = read_matrix(gdir / f"{subject}.scores.bmat")
    pooled = scores_mat[-1]
    return preds, boundaries, pooled


@dataclass
class Analysis:
    name: str
    p_values: dict[str, np.ndarray]  # subject -> per-voxel p
    effect: dict[str, np.ndarray]  # subject -> per-voxel effect (R2 or diff)


def _stats_cfg(cfg: RunConfig) -> StatsConfig:
    return StatsConfig(
        block_size=cfg.block_size,
        n_permutations=cfg.n_permutations,
        n_bootstrap=cfg.n_bootstrap,
        fdr_q=cfg.fdr_q,
        seed=cfg.seed,
    )


def _individual_analysis(cfg, runs, group: tuple[str, ...]) -> Analysis:
    scfg = _stats_cfg(cfg)
    pvals, effect = {}, {}
    for run in runs:
        preds, boundaries, pooled = _load_encoding(cfg, group, run.subject)
        actuals = [run.data[a:b] for a, b in boundaries]
        pvals[run.subject] = stats.block_permutation_test(preds, actuals, scfg)
        effect[run.subject] = pooled
    return Analysis(name=group_name(group), p_values=pvals, effect=effect)


def _diff_analysis(
    cfg, runs, left: tuple[str, ...], right: tuple[str, ...]
) -> Analysis:
    scfg = _stats_cfg(cfg)
    pvals, effect = {}, {}
    for run in runs:
        preds_l, boundaries, pooled_l = _load_encoding(cfg, left, run.subject)
        preds_r, boundaries_r, pooled_r = _load_encoding(cfg, right, run.subject)
        if boundaries != boundaries_r:
            raise PipelineError("fold boundaries differ between encodings")
        actuals = [run.data[a:b] for a, b in boundaries]
        pvals[run.subject] = stats.bootstrap_diff_test(
            preds_l, preds_r, actuals, scfg
        )
        effect[run.subject] = pooled_l - pooled_r
    return Analysis(
        name=f"{group_name(left)}-{group_name(right)}", p_values=pvals, effect=effect
    )


def _finalize_analyses(cfg: RunConfig, runs, analyses: list[Analysis], mode: str):
    """Pool p-values per the FDR scope, write significance artifacts and
    per-analysis ROI reports."""
    out = cfg.out_dir() / "compare" / mode
    out.mkdir(parents=True, exist_ok=True)
    run_hash = cfg.run_hash()
    labels = {run.subject: run.labels for run in runs}

    def fdr_over(pool_analyses: list[Analysis], tag: str):
        flat = np.concatenate(
            [a.p_values[s] for a in pool_analyses for s in sorted(a.p_values)]
        )
        sig = stats.bh_fdr(flat, q=cfg.fdr_q)
        _write_sidecar(
            out / f"fdr_{tag}.json",
            {
                "threshold": sig.threshold,
                "q": cfg.fdr_q,
                "scope": cfg.fdr_scope,
                "n_pvalues": int(flat.size),
                "run_config_hash": run_hash,
            },
        )
        return sig.threshold

    if cfg.fdr_scope == "global":
        thresholds = {a.name: fdr_over(analyses, "global") for a in analyses}
    else:
        thresholds = {a.name: fdr_over([a], a.name) for a in analyses}

    summaries = {}
    for a in analyses:
        adir = out / a.name
        adir.mkdir(parents=True, exist_ok=True)
        reject = {
            s: a.p_values[s] <= thresholds[a.name] for s in a.p_values
        }
        for s in sorted(a.p_values):
            write_bmat(adir / f"{s}.pvals.bmat", a.p_values[s][None, :])
        rep = stats.roi_aggregate(reject, a.effect, labels)
        (adir / "roi_report.csv").write_text(rep.to_csv())
        _write_sidecar(
            adir / "roi_report.json",
            {
                "analysis": a.name,
                "rows": [
                    {
                        "roi": r.roi,
                        "hemisphere": r.hemisphere,
                        "subject": r.subject,
                        "pct_significant": r.pct_significant,
                        "mean_r2": r.mean_r2,
                    }
                    for r in rep.rows
                ],
                "run_config_hash": run_hash,
            },
        )
        summaries[a.name] = rep.summaries()
    return summaries


def cmd_compare(cfg: RunConfig, mode: str):
    """Run the configured study of one mode and emit ROI reports."""
    runs = load_fmri_runs(cfg)
    if mode == "individual":
        analyses = [
            _individual_analysis(cfg, runs, parse_group(g))
            for g in cfg.study_individual
        ]
    elif mode == "hierarchical":
        chain = [parse_group(g) for g in cfg.study_hierarchical]
        for earlier, later in zip(chain, chain[1:]):
            if not set(earlier) <= set(later):
                raise PipelineError(
                    f"hierarchy not nested: {earlier} vs {later}"
                )
        analyses = [
            _diff_analysis(cfg, runs, later, earlier)
            for earlier, later in zip(chain, chain[1:])
        ]
    elif mode == "pairwise":
        analyses = [
            _diff_analysis(cfg, runs, *parse_pair(p)) for p in cfg.study_pairwise
        ]
    else:
        raise PipelineError(f"unknown study mode {mode!r}")
    return _finalize_analyses(cfg, runs, analyses, mode)


def cmd_report(cfg: RunConfig) -> list[Path]:
    """Collect ROI reports under compare/ into CSV + JSON + SVG charts."""
    run_hash = cfg.run_hash()
    compare_dir = cfg.out_dir() / "compare"
    if not compare_dir.exists():
        raise PipelineError("nothing to report: run compare first")
    rdir = cfg.out_dir() / "report"
    rdir.mkdir(parents=True, exist_ok=True)
    (rdir / "atlas_rois.json").write_text(atlas.roi_table_json() + "\n")
    written = []
    for mode_dir in sorted(compare_dir.iterdir()):
        if not mode_dir.is_dir():
            continue
        per_analysis = {}
        for adir in sorted(mode_dir.iterdir()):
            if not adir.is_dir():
                continue
            payload = _read_sidecar(adir / "roi_report.json")
            if payload["run_config_hash"] != run_hash:
                raise HashMismatch(f"{adir} belongs to a different run")
            rep = stats.RoiReport(
                rows=[
                    stats.RoiRow(
                        roi=r["roi"],
                        hemisphere=r["hemisphere"],
                        subject=r["subject"],
                        pct_significant=r["pct_significant"],
                        mean_r2=r["mean_r2"],
                    )
                    for r in payload["rows"]
                ]
            )
            per_analysis[payload["analysis"]] = rep.summaries()
        if not per_analysis:
            continue
        mode = mode_dir.name
        (rdir / f"{mode}.csv").write_text(report.summaries_csv(per_analysis))
        (rdir / f"{mode}.json").write_text(
            report.summaries_json(per_analysis, run_hash)
        )
        for hemi in atlas.HEMISPHERES:
            svg = report.grouped_bar_svg(
                per_analysis,
                hemisphere=hemi,
                title=f"{mode}: % significant voxels per ROI ({hemi})",
                run_hash=run_hash,
            )
            path = rdir / f"{mode}_{hemi}.svg"
            path.write_text(svg)
            written.append(path)
        written += [rdir / f"{mode}.csv", rdir / f"{mode}.json"]
    return written


def cmd_probe(cfg: RunConfig, spaces=None) -> dict[str, float]:
    """Word-level semantic probe: predict the target embeddings from
    each feature space, 10-fold CV, mean R^2."""
    if not cfg.glove:
        raise PipelineError("probe needs a glove path in the config")
    targets = read_matrix(cfg.path(cfg.glove))
    fdir = cfg.out_dir() / "features"
    ridge_cfg = RidgeConfig(
        lambda_grid=cfg.lambda_grid, validation_fraction=cfg.validation_fraction
    )
    results = {}
    for space in spaces or cfg.spaces:
        path = fdir / f"{space}.bmat"
        if not path.exists():
            raise MissingEncoding(f"feature space {space} not built")
        values = read_matrix(path)
        if values.shape[0] != targets.shape[0]:
            raise TrMismatch(
                f"{space}: {values.shape[0]} rows vs {targets.shape[0]} targets"
            )
        results[space] = semantic_probe(values, targets, n_folds=10, cfg=ridge_cfg)
    pdir = cfg.out_dir() / "probe"
    pdir.mkdir(parents=True, exist_ok=True)
    _write_sidecar(
        pdir / "probe.json",
        {"r2": results, "run_config_hash": cfg.run_hash()},
    )
    lines = ["space,mean_r2"] + [
        f"{space},{results[space]!r}" for space in sorted(results)
    ]
    (pdir / "probe.csv").write_text("\n".join(lines) + "\n")
    return results


def cmd_selftest() -> bool:
    """Fast built-in smoke checks; prints one line per check."""
    from .encoder import ridge_fit
    from .signal import lanczos_weight

    checks = []

    tree = tb.parse_bracketed("(S (NP (PRP I)) (VP (VBD began)))")
    checks.append(("bracketed parse height", tb.tree_height(tree.root) == 3))
    checks.append(
        ("complete subtree", ft.complete_subtree(tree, 0).label == "NP")
    )
    checks.append(
        (
            "lanczos kernel points",
            lanczos_weight(0.0) == 1.0 and abs(lanczos_weight(1.0)) < 1e-12,
        )
    )
    model = ridge_fit(np.eye(3), np.diag([1.0, 2.0, 3.0]), 1e-9)
    checks.append(
        ("ridge identity fit", bool(np.allclose(model.weights, np.diag([1, 2, 3]), atol=1e-6)))
    )
    sig = stats.bh_fdr(np.array([0.01, 0.02, 0.5]), q=0.05)
    checks.append(("bh-fdr worked example", list(sig.reject) == [True, True, False]))
    g = ip.Pcfg(
        [ip.Rule("S", ("A", "B"), 1.0), ip.Rule("A", ("a",), 1.0), ip.Rule("B", ("b",), 1.0)]
    )
    beam = ip.beam_advance(ip.initial_beam(g), "a", g)
    checks.append(("beam scan", len(beam) == 1 and beam.derivations[0].stack == ("B",)))

    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok = ok and passed
    return ok
