"""Regression metrics (RMSE, MAE, R2, PLCC, SRCC) and per-demographic correlations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import Dataset
from .errors import InvalidArgumentError, SchemaMismatchError, UndefinedMetricError


@dataclass(frozen=True)
class MetricBlock:
    rmse: float
    mae: float
    r2: float
    plcc: float
    srcc: float
    n: int

    def to_doc(self) -> dict:
        return {
            "rmse": self.rmse,
            "mae": self.mae,
            "r2": self.r2,
            "plcc": self.plcc,
            "srcc": self.srcc,
            "n": self.n,
        }


def _check_pair(y, y_hat):
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape or y.ndim != 1:
        raise InvalidArgumentError(f"shape mismatch: {y.shape} vs {y_hat.shape}")
    if y.size == 0:
        raise InvalidArgumentError("empty input")
    if not (np.isfinite(y).all() and np.isfinite(y_hat).all()):
        raise InvalidArgumentError("non-finite values in input")
    return y, y_hat


def rmse(y, y_hat) -> float:
    y, y_hat = _check_pair(y, y_hat)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def mae(y, y_hat) -> float:
    y, y_hat = _check_pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def r2(y, y_hat) -> float:
    y, y_hat = _check_pair(y, y_hat)
    denom = float(np.sum((y - np.mean(y)) ** 2))
    if denom == 0.0:
        raise UndefinedMetricError("r2 undefined for constant y")
    return float(1.0 - np.sum((y - y_hat) ** 2) / denom)


def plcc(a, b) -> float:
    a, b = _check_pair(a, b)
    if a.size < 2:
        raise InvalidArgumentError("plcc needs at least 2 points")
    da = a - np.mean(a)
    db = b - np.mean(b)
    denom = float(np.sqrt(np.sum(da**2) * np.sum(db**2)))
    if denom == 0.0:
        raise UndefinedMetricError("plcc undefined for constant input")
    return float(np.sum(da * db) / denom)


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties given the average of their rank range."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def srcc(a, b) -> float:
    """Spearman rank correlation; ties handled with average ranks.

    Without ties this equals the closed form 1 - 6*sum(d^2)/(N(N^2-1)).
    """
    a, b = _check_pair(a, b)
    if a.size < 2:
        raise InvalidArgumentError("srcc needs at least 2 points")
    ra = _average_ranks(a)
    rb = _average_ranks(b)
    has_ties = len(set(a.tolist())) < a.size or len(set(b.tolist())) < b.size
    if not has_ties:
        d = ra - rb
        n = a.size
        return float(1.0 - 6.0 * np.sum(d**2) / (n * (n**2 - 1)))
    return plcc(ra, rb)


def metric_block(y, y_hat) -> MetricBlock:
    y_arr = np.asarray(y, dtype=np.float64)
    return MetricBlock(
        rmse=rmse(y, y_hat),
        mae=mae(y, y_hat),
        r2=r2(y, y_hat),
        plcc=plcc(y, y_hat),
        srcc=srcc(y, y_hat),
        n=int(y_arr.size),
    )


def correlation_by_demographic(dataset: Dataset, feature: str) -> dict[str, float]:
    """Per-profile PLCC between a numeric feature column and MOS."""
    if not dataset.has_column("demographic"):
        raise SchemaMismatchError("dataset has no demographic column")
    if not dataset.has_column(feature):
        raise SchemaMismatchError(f"dataset has no column {feature!r}")
    values = dataset.column(feature).astype(np.float64)
    mos = dataset.column("mos").astype(np.float64)
    labels = dataset.column("demographic")
    out: dict[str, float] = {}
    from .demographics import PROFILE_IDS

    for profile in PROFILE_IDS:
        mask = labels == profile
        if not mask.any():
            continue
        out[profile] = plcc(values[mask], mos[mask])
    return out
