"""Resampling significance machinery for encoding scores.

Block permutation tests (chance distribution for pooled R^2), block
bootstrap model comparison, Benjamini-Hochberg FDR over pooled
p-values, and per-ROI aggregation across subjects.  Blocks are
contiguous TRs within a fold; temporal autocorrelation makes row-wise
resampling invalid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import atlas
from .encoder import r2_score

log = logging.getLogger(__name__)


class StatsError(ValueError):
    pass


class FoldShorterThanBlock(StatsError):
    pass


@dataclass(frozen=True)
class StatsConfig:
    block_size: int = 10
    n_permutations: int = 5000
    n_bootstrap: int = 5000
    fdr_q: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.block_size < 1:
            raise StatsError("block size must be >= 1")
        if self.n_permutations < 0 or self.n_bootstrap < 1:
            raise StatsError("iteration counts out of range")
        if not 0 < self.fdr_q < 1:
            raise StatsError("FDR q must be in (0, 1)")


@dataclass
class SignificanceMap:
    p_values: np.ndarray
    reject: np.ndarray
    threshold: float

    def __post_init__(self):
        if self.p_values.shape != self.reject.shape:
            raise StatsError("p-value/rejection shape mismatch")


def _fold_blocks(n_rows: int, block: int, offset: int) -> list[np.ndarray]:
    """Contiguous row-index blocks of one fold (last may be short)."""
    if n_rows < block:
        raise FoldShorterThanBlock(f"fold of {n_rows} TRs < block {block}")
    return [
        np.arange(start, min(start + block, n_rows)) + offset
        for start in range(0, n_rows, block)
    ]


def _stack_blocks(fold_predictions, block: int):
    """Blocks over the concatenated prediction rows, fold by fold."""
    blocks = []
    fold_slices = []
    offset = 0
    for pred in fold_predictions:
        n = pred.shape[0]
        fold_blocks = _fold_blocks(n, block, offset)
        fold_slices.append((len(blocks), len(blocks) + len(fold_blocks)))
        blocks.extend(fold_blocks)
        offset += n
    return blocks, fold_slices


def _iteration_rng(seed: int, iteration: int) -> np.random.Generator:
    return np.random.default_rng([seed, iteration])


def block_permutation_test(
    fold_predictions: list[np.ndarray],
    fold_actuals: list[np.ndarray],
    cfg: StatsConfig,
    keep_distribution: bool = False,
):
    """Per-voxel p-value that pooled R^2 beats block-permuted chance.

    Prediction blocks are reordered uniformly within each fold; actual
    responses stay fixed.  p = (1 + #{perm >= observed}) / (1 + n).
    """
    pred = np.vstack(fold_predictions)
    actual = np.vstack(fold_actuals)
    observed = r2_score(actual, pred)
    blocks, fold_slices = _stack_blocks(fold_predictions, cfg.block_size)
    n_vox = pred.shape[1]
    count = np.zeros(n_vox, dtype=np.int64)
    dist = np.zeros((cfg.n_permutations, n_vox)) if keep_distribution else None
    for it in range(cfg.n_permutations):
        rng = _iteration_rng(cfg.seed, it)
        order: list[np.ndarray] = []
        for lo, hi in fold_slices:
            perm = rng.permutation(hi - lo) + lo
            order.extend(blocks[j] for j in perm)
        rows = np.concatenate(order)
        perm_r2 = r2_score(actual, pred[rows])
        count += perm_r2 >= observed
        if dist is not None:
            dist[it] = perm_r2
    p = (1.0 + count) / (1.0 + cfg.n_permutations)
    if keep_distribution:
        return p, observed, dist
    return p


def bootstrap_diff_test(
    fold_predictions_a: list[np.ndarray],
    fold_predictions_b: list[np.ndarray],
    fold_actuals: list[np.ndarray],
    cfg: StatsConfig,
    keep_distribution: bool = False,
):
    """One-sided per-voxel p-value for R^2(A) - R^2(B) > 0.

    Each iteration resamples blocks with replacement within folds (the
    same block choices applied to both prediction sets and the actual
    responses), recomputes the pooled R^2 difference, and the mean-
    centered bootstrap distribution supplies the null.
    """
    pred_a = np.vstack(fold_predictions_a)
    pred_b = np.vstack(fold_predictions_b)
    actual = np.vstack(fold_actuals)
    if pred_a.shape != pred_b.shape or pred_a.shape != actual.shape:
        raise StatsError("prediction/actual shapes differ")
    observed = r2_score(actual, pred_a) - r2_score(actual, pred_b)
    blocks, fold_slices = _stack_blocks(fold_predictions_a, cfg.block_size)
    n_vox = actual.shape[1]
    diffs = np.zeros((cfg.n_bootstrap, n_vox))
    for it in range(cfg.n_bootstrap):
        rng = _iteration_rng(cfg.seed + 0x5EED, it)
        chosen: list[np.ndarray] = []
        for lo, hi in fold_slices:
            picks = rng.integers(lo, hi, size=hi - lo)
            chosen.extend(blocks[j] for j in picks)
        rows = np.concatenate(chosen)
        diffs[it] = r2_score(actual[rows], pred_a[rows]) - r2_score(
            actual[rows], pred_b[rows]
        )
    centered = diffs - diffs.mean(axis=0)
    count = (centered >= observed).sum(axis=0)
    p = (1.0 + count) / (1.0 + cfg.n_bootstrap)
    if keep_distribution:
        return p, observed, diffs
    return p


def bh_fdr(p_values: np.ndarray, q: float = 0.05) -> SignificanceMap:
    """Benjamini-Hochberg: largest k with p_(k) <= q*k/m sets the
    rejection threshold over the pooled p-values."""
    p = np.asarray(p_values, dtype=np.float64)
    flat = p.reshape(-1)
    if flat.size == 0:
        raise StatsError("no p-values")
    if np.any((flat <= 0) | (flat > 1)):
        raise StatsError("p-values must lie in (0, 1]")
    order = np.sort(flat)
    m = flat.size
    criteria = order <= q * (np.arange(1, m + 1) / m)
    if not np.any(criteria):
        return SignificanceMap(
            p_values=p, reject=np.zeros_like(p, dtype=bool), threshold=0.0
        )
    threshold = float(order[np.nonzero(criteria)[0].max()])
    return SignificanceMap(p_values=p, reject=p <= threshold, threshold=threshold)


@dataclass
class RoiRow:
    roi: str
    hemisphere: str
    subject: str
    pct_significant: float
    mean_r2: float


@dataclass
class RoiSummary:
    roi: str
    hemisphere: str
    n_subjects: int
    mean_pct: float
    se_pct: float
    mean_r2: float
    se_r2: float


@dataclass
class RoiReport:
    rows: list[RoiRow] = field(default_factory=list)

    def summaries(self) -> list[RoiSummary]:
        out = []
        for roi in atlas.ROI_NAMES:
            for hemi in atlas.HEMISPHERES:
                pct = [
                    r.pct_significant
                    for r in self.rows
                    if r.roi == roi and r.hemisphere == hemi
                ]
                r2s = [
                    r.mean_r2
                    for r in self.rows
                    if r.roi == roi and r.hemisphere == hemi
                ]
                if not pct:
                    continue  # ROI absent, not 0%
                n = len(pct)
                out.append(
                    RoiSummary(
                        roi=roi,
                        hemisphere=hemi,
                        n_subjects=n,
                        mean_pct=float(np.mean(pct)),
                        se_pct=float(np.std(pct) / np.sqrt(n)),
                        mean_r2=float(np.mean(r2s)),
                        se_r2=float(np.std(r2s) / np.sqrt(n)),
                    )
                )
        return out

    def to_csv(self) -> str:
        lines = ["roi,hemisphere,subject,pct_significant,mean_r2"]
        for r in self.rows:
            lines.append(
                f"{r.roi},{r.hemisphere},{r.subject},{r.pct_significant!r},{r.mean_r2!r}"
            )
        return "\n".join(lines) + "\n"


def roi_aggregate(
    per_subject_reject: dict[str, np.ndarray],
    per_subject_scores: dict[str, np.ndarray],
    per_subject_labels: dict[str, atlas.ParcelLabels],
) -> RoiReport:
    """Per-ROI, per-subject percentage of significant voxels and mean
    R^2; ROIs with no labeled voxels for a subject stay absent."""
    report = RoiReport()
    for subject in sorted(per_subject_reject):
        reject = np.asarray(per_subject_reject[subject])
        scores = np.asarray(per_subject_scores[subject])
        labels = per_subject_labels[subject]
        if len(labels) != reject.shape[0] or len(labels) != scores.shape[0]:
            raise atlas.AtlasError(
                f"subject {subject}: {len(labels)} labels for "
                f"{reject.shape[0]} voxels"
            )
        for roi in atlas.ROI_NAMES:
            for hemi in atlas.HEMISPHERES:
                members = sorted(atlas.roi_members(roi, hemi, labels))
                if not members:
                    continue
                idx = np.array(members)
                report.rows.append(
                    RoiRow(
                        roi=roi,
                        hemisphere=hemi,
                        subject=subject,
                        pct_significant=float(100.0 * reject[idx].mean()),
                        mean_r2=float(scores[idx].mean()),
                    )
                )
    return report
