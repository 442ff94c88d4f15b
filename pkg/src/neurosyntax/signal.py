"""Temporal alignment of word-rate features to the fMRI TR grid.

Lanczos downsampling (or within-TR averaging), FIR delay expansion for
the hemodynamic response, and fold-safe column z-scoring.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


class SignalError(ValueError):
    pass


class NoTimings(SignalError):
    pass


@dataclass(frozen=True)
class ResampleConfig:
    lobes: int = 3
    tr: float = 1.5
    mode: str = "lanczos"  # or "chunk_average"

    def __post_init__(self):
        if self.lobes < 1:
            raise SignalError("lobes must be >= 1")
        if self.tr <= 0:
            raise SignalError("TR must be positive")
        if self.mode not in ("lanczos", "chunk_average"):
            raise SignalError(f"unknown resampling mode {self.mode!r}")


@dataclass(frozen=True)
class FirConfig:
    n_delays: int = 8
    window_sec: float = 12.0
    tr: float = 1.5

    def __post_init__(self):
        if self.n_delays < 1:
            raise SignalError("need at least one delay")
        if abs(self.n_delays * self.tr - self.window_sec) > 1e-9:
            raise SignalError(
                f"{self.n_delays} delays x {self.tr}s != {self.window_sec}s window"
            )


def lanczos_weight(t: float | np.ndarray, a: int = 3):
    """Lanczos kernel in TR units: sinc(t)*sinc(t/a) inside |t| < a.

    Nonzero integer offsets are exact zeros of the kernel; they are
    returned as exact 0.0 rather than sin(pi*k) rounding dust.
    """
    if a < 1:
        raise SignalError("lobes must be >= 1")
    t = np.asarray(t, dtype=np.float64)
    inside = np.abs(t) < a
    w = np.where(inside, np.sinc(t) * np.sinc(t / a), 0.0)
    w = np.where((t == np.round(t)) & (t != 0), 0.0, w)
    return w if w.ndim else float(w)


def resample_to_tr(
    features: np.ndarray,
    onsets: np.ndarray,
    cfg: ResampleConfig,
    n_tr: int,
) -> np.ndarray:
    """Word-rate rows -> TR-rate rows, sampling at TR centers.

    lanczos: weight-normalized kernel sum per TR (zero row when no word
    falls inside the kernel support).  chunk_average: mean over words
    whose onset lies inside the TR, zero row for silent TRs.
    """
    X = np.asarray(features, dtype=np.float64)
    onsets = np.asarray(onsets, dtype=np.float64)
    if X.ndim != 2:
        raise SignalError("features must be 2-D")
    if onsets.shape[0] != X.shape[0]:
        raise NoTimings(
            f"{onsets.shape[0]} onsets for {X.shape[0]} feature rows"
        )
    if onsets.shape[0] == 0:
        raise NoTimings("empty corpus")
    out = np.zeros((n_tr, X.shape[1]), dtype=np.float64)
    centers = (np.arange(n_tr) + 0.5) * cfg.tr
    if cfg.mode == "lanczos":
        offsets = (centers[:, None] - onsets[None, :]) / cfg.tr
        W = lanczos_weight(offsets, cfg.lobes)
        sums = W.sum(axis=1)
        live = np.abs(sums) > 1e-8
        out[live] = (W[live] / sums[live, None]) @ X
        return out
    bins = np.floor(onsets / cfg.tr).astype(np.int64)
    for r in range(n_tr):
        hit = bins == r
        if np.any(hit):
            out[r] = X[hit].mean(axis=0)
    return out


def fir_expand(X: np.ndarray, cfg: FirConfig) -> np.ndarray:
    """Concatenate delayed copies: output[r] = [X[r-1], ..., X[r-n]].

    Delays start at one TR (causal hemodynamic response); rows before
    the run start contribute zeros.
    """
    X = np.asarray(X, dtype=np.float64)
    n_tr, d = X.shape
    out = np.zeros((n_tr, d * cfg.n_delays), dtype=np.float64)
    for delay in range(1, cfg.n_delays + 1):
        block = slice((delay - 1) * d, delay * d)
        if delay < n_tr + 1:
            out[delay:, block] = X[: n_tr - delay]
    return out


def zscore_columns(train: np.ndarray, apply_to: np.ndarray):
    """Standardize columns of apply_to with train-row statistics.

    Zero-variance train columns pass through untouched (with a logged
    warning) so constant regressors stay visible downstream.
    """
    train = np.asarray(train, dtype=np.float64)
    apply_to = np.asarray(apply_to, dtype=np.float64)
    if train.shape[0] < 2:
        raise SignalError("need at least 2 training rows for z-scoring")
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    flat = std < 1e-12
    if np.any(flat):
        log.warning("%d zero-variance columns left unscaled", int(flat.sum()))
    safe_std = np.where(flat, 1.0, std)
    out = (apply_to - mean) / safe_std
    out[:, flat] = apply_to[:, flat]
    return out
