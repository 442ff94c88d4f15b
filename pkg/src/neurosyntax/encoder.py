"""Per-voxel ridge encoding models with cross-validated scoring.

The objective per voxel column y is min_w ||y - Xw||^2 + lambda ||w||^2,
solved through the regularized Gram matrix.  `ridge_fit` is the bare
formula; the cross-validation driver centers/z-scores with training-fold
statistics only.  Lambda is tuned per voxel on a contiguous validation
tail of each training fold; folds are contiguous TR blocks to respect
fMRI autocorrelation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .signal import zscore_columns

log = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = (1e-3, 1e-2, 1e-1)


class EncoderError(ValueError):
    pass


class SingularSystem(EncoderError):
    pass


class FoldTooSmall(EncoderError):
    pass


@dataclass(frozen=True)
class RidgeConfig:
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    validation_fraction: float = 0.2

    def __post_init__(self):
        if any(lam <= 0 for lam in self.lambda_grid):
            raise EncoderError("all lambdas must be > 0")
        if not 0 < self.validation_fraction < 1:
            raise EncoderError("validation fraction must be in (0, 1)")

    def grid(self) -> tuple[float, ...]:
        return tuple(sorted(set(self.lambda_grid)))


@dataclass(frozen=True)
class FoldSpec:
    """Contiguous TR ranges partitioning [0, n_tr)."""

    boundaries: tuple[tuple[int, int], ...]

    @classmethod
    def contiguous(cls, n_tr: int, k: int = 4) -> "FoldSpec":
        if n_tr < 2 * k:
            raise FoldTooSmall(f"{n_tr} TRs cannot make {k} usable folds")
        edges = np.linspace(0, n_tr, k + 1).astype(int)
        return cls(tuple((int(a), int(b)) for a, b in zip(edges, edges[1:])))

    def __post_init__(self):
        cursor = 0
        for a, b in self.boundaries:
            if a != cursor or b <= a:
                raise EncoderError("folds must partition [0, n_tr) contiguously")
            cursor = b

    @property
    def n_tr(self) -> int:
        return self.boundaries[-1][1]

    def split(self, fold: int):
        a, b = self.boundaries[fold]
        test = np.arange(a, b)
        train = np.concatenate(
            [np.arange(x, y) for i, (x, y) in enumerate(self.boundaries) if i != fold]
        )
        return train, test


@dataclass
class RidgeModel:
    weights: np.ndarray  # D x V
    lambdas: np.ndarray  # V (lambda used per voxel)
    x_offset: np.ndarray  # D
    y_offset: np.ndarray  # V

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)):
            raise EncoderError("non-finite weights")

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (X - self.x_offset) @ self.weights + self.y_offset


@dataclass
class VoxelScores:
    fold_r2: np.ndarray  # K x V
    pooled_r2: np.ndarray  # V
    fold_predictions: list[np.ndarray]  # per fold, len(test) x V
    fold_actuals: list[np.ndarray]
    folds: FoldSpec
    chosen_lambdas: np.ndarray = field(default=None)  # K x V

    def concatenated(self):
        return np.vstack(self.fold_predictions), np.vstack(self.fold_actuals)


def _solve_ridge(X: np.ndarray, Y: np.ndarray, lam: float) -> np.ndarray:
    d = X.shape[1]
    gram = X.T @ X + lam * np.eye(d)
    try:
        return np.linalg.solve(gram, X.T @ Y)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc


def ridge_fit(X: np.ndarray, Y: np.ndarray, lam: float) -> RidgeModel:
    """W = (X'X + lam I)^-1 X'Y, exactly; no centering or scaling."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if lam <= 0:
        raise SingularSystem("lambda must be > 0")
    W = _solve_ridge(X, Y, lam)
    return RidgeModel(
        weights=W,
        lambdas=np.full(Y.shape[1], lam),
        x_offset=np.zeros(X.shape[1]),
        y_offset=np.zeros(Y.shape[1]),
    )


def _centered_fit(
    X: np.ndarray, Y: np.ndarray, lambdas: np.ndarray
) -> RidgeModel:
    """Grouped per-lambda solve on column-centered X and Y."""
    x_mean = X.mean(axis=0)
    y_mean = Y.mean(axis=0)
    Xc = X - x_mean
    Yc = Y - y_mean
    W = np.zeros((X.shape[1], Y.shape[1]))
    for lam in np.unique(lambdas):
        cols = lambdas == lam
        W[:, cols] = _solve_ridge(Xc, Yc[:, cols], float(lam))
    return RidgeModel(
        weights=W, lambdas=lambdas.copy(), x_offset=x_mean, y_offset=y_mean
    )


def r2_score(actual: np.ndarray, predicted: np.ndarray) -> np.ndarray:
    """Per-column coefficient of determination, SS_tot around the actual
    mean of the evaluated rows.  Negative values are meaningful."""
    actual = np.asarray(actual, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    ss_res = np.sum((actual - predicted) ** 2, axis=0)
    mean = actual.mean(axis=0)
    ss_tot = np.sum((actual - mean) ** 2, axis=0)
    safe = np.where(ss_tot < 1e-12, 1.0, ss_tot)
    out = 1.0 - ss_res / safe
    out[ss_tot < 1e-12] = 0.0
    return out


def select_lambda(
    X_train: np.ndarray, Y_train: np.ndarray, cfg: RidgeConfig
) -> np.ndarray:
    """Per-voxel lambda maximizing R^2 on the contiguous validation tail
    of the training rows; ties resolve to the larger lambda."""
    n = X_train.shape[0]
    n_val = max(1, int(round(n * cfg.validation_fraction)))
    if n - n_val < 2:
        raise FoldTooSmall("training fold too small for a validation split")
    X_fit, X_val = X_train[: n - n_val], X_train[n - n_val :]
    Y_fit, Y_val = Y_train[: n - n_val], Y_train[n - n_val :]
    grid = cfg.grid()
    n_vox = Y_train.shape[1]
    best_r2 = np.full(n_vox, -np.inf)
    best_lam = np.full(n_vox, grid[0])
    for lam in grid:  # ascending: later (larger) lambda wins ties
        model = _centered_fit(X_fit, Y_fit, np.full(n_vox, lam))
        val_r2 = r2_score(Y_val, model.predict(X_val))
        better = val_r2 >= best_r2
        best_r2[better] = val_r2[better]
        best_lam[better] = lam
    return best_lam


def cross_validate(
    X: np.ndarray,
    Y: np.ndarray,
    folds: FoldSpec,
    cfg: RidgeConfig = RidgeConfig(),
) -> VoxelScores:
    """K-fold encoding run: z-score X on training rows, tune lambda on a
    training-tail validation split, fit, score the held-out fold."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[0] != Y.shape[0]:
        raise EncoderError(f"{X.shape[0]} design rows vs {Y.shape[0]} responses")
    if folds.n_tr != X.shape[0]:
        raise EncoderError("fold spec does not cover the data")
    k = len(folds.boundaries)
    n_vox = Y.shape[1]
    fold_r2 = np.zeros((k, n_vox))
    chosen = np.zeros((k, n_vox))
    preds, actuals = [], []
    for fold in range(k):
        train_idx, test_idx = folds.split(fold)
        X_train = X[train_idx]
        X_test = zscore_columns(X_train, X[test_idx])
        X_train_z = zscore_columns(X_train, X_train)
        lambdas = select_lambda(X_train_z, Y[train_idx], cfg)
        model = _centered_fit(X_train_z, Y[train_idx], lambdas)
        pred = model.predict(X_test)
        fold_r2[fold] = r2_score(Y[test_idx], pred)
        chosen[fold] = model.lambdas
        preds.append(pred)
        actuals.append(Y[test_idx])
    pooled = r2_score(np.vstack(actuals), np.vstack(preds))
    return VoxelScores(
        fold_r2=fold_r2,
        pooled_r2=pooled,
        fold_predictions=preds,
        fold_actuals=actuals,
        folds=folds,
        chosen_lambdas=chosen,
    )


def semantic_probe(
    features: np.ndarray,
    targets: np.ndarray,
    n_folds: int = 10,
    cfg: RidgeConfig = RidgeConfig(),
) -> float:
    """Mean held-out R^2 (across folds and target dimensions) when
    predicting `targets` from `features` at the word level."""
    scores = cross_validate(
        features, targets, FoldSpec.contiguous(features.shape[0], n_folds), cfg
    )
    return float(np.mean(scores.fold_r2))
