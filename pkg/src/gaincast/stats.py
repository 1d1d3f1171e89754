"""Correlation analytics over trajectory ensembles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import TrajectoryDataset


class UndefinedCorrelationError(ValueError):
    """Pearson correlation is undefined for constant inputs."""


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"pearson: need equal-length vectors, got {a.shape}, {b.shape}")
    if a.size < 2:
        raise ValueError("pearson: need at least two samples")
    da = a - a.mean()
    db = b - b.mean()
    na = np.sqrt((da * da).sum())
    nb = np.sqrt((db * db).sum())
    if na == 0.0 or nb == 0.0:
        raise UndefinedCorrelationError("pearson undefined for constant input")
    r = float((da * db).sum() / (na * nb))
    return min(1.0, max(-1.0, r))


@dataclass
class DiversityReport:
    mean: float
    std: float
    median: float
    stepwise: np.ndarray  # mean prefix correlation per step index (from step 2)
    n_pairs: int

    def as_row(self) -> dict:
        return {"pearson_mean": self.mean, "pearson_std": self.std,
                "pearson_median": self.median, "n_pairs": self.n_pairs}


def _prefix_pearson(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pearson over [0..t] for every prefix length t+1 >= 2, vectorized.

    Returns length T-1 (prefix lengths 2..T); undefined prefixes are NaN.
    """
    a = a.astype(np.float64)
    b = b.astype(np.float64)
    n = np.arange(1, a.size + 1)
    sa, sb = np.cumsum(a), np.cumsum(b)
    saa, sbb = np.cumsum(a * a), np.cumsum(b * b)
    sab = np.cumsum(a * b)
    cov = sab - sa * sb / n
    va = saa - sa * sa / n
    vb = sbb - sb * sb / n
    with np.errstate(invalid="ignore", divide="ignore"):
        r = cov / np.sqrt(va * vb)
    r = np.clip(r, -1.0, 1.0)
    return r[1:]


def diversity_report(ds: TrajectoryDataset, pair_budget: int = 500,
                     seed: int = 0) -> DiversityReport:
    """Pairwise Pearson statistics over sampled trajectory pairs (per AP)."""
    n = len(ds.trajectories)
    if n < 2:
        raise ValueError("diversity report needs at least two trajectories")
    rng = np.random.default_rng(seed)
    all_pairs = n * (n - 1) // 2
    if all_pairs <= pair_budget:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    else:
        seen = set()
        while len(seen) < pair_budget:
            i, j = rng.integers(0, n, size=2)
            if i != j:
                seen.add((min(i, j), max(i, j)))
        pairs = sorted(seen)

    values = []
    stepwise_acc = None
    stepwise_cnt = None
    for i, j in pairs:
        gi = ds.trajectories[i].steps
        gj = ds.trajectories[j].steps
        for ap in range(ds.n_ap):
            values.append(pearson(gi[:, ap], gj[:, ap]))
            curve = _prefix_pearson(gi[:, ap], gj[:, ap])
            if stepwise_acc is None:
                stepwise_acc = np.zeros_like(curve)
                stepwise_cnt = np.zeros_like(curve)
            ok = np.isfinite(curve)
            stepwise_acc[ok] += curve[ok]
            stepwise_cnt[ok] += 1
    values = np.asarray(values)
    with np.errstate(invalid="ignore", divide="ignore"):
        stepwise = stepwise_acc / stepwise_cnt
    return DiversityReport(
        mean=float(values.mean()),
        std=float(values.std()),
        median=float(np.median(values)),
        stepwise=stepwise,
        n_pairs=len(pairs),
    )
