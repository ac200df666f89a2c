"""Pillar importance scoring, selection, and threshold calibration.

Each active pillar gets a scalar importance score in two steps: a per-pillar
measure over its feature vector (mean or max of absolute values), then an
optional aggregation over the active 3x3 neighborhood (identity, average, or
max). Average pooling divides by the number of active neighbors only, so
isolated pillars are not diluted by empty cells.

Selection picks the pillars to dilate. Top-k selection takes the highest
ceil(t% * n) scores with ties broken by (row, col) ascending, which makes the
selected set deterministic and, for a fixed score map, nested as t grows.
Threshold selection keeps every pillar scoring at or above a calibrated
cutoff; `calibrate_threshold` pools score sets and returns the k-th largest
pooled score for k = ceil(t% * pool size), so that on the calibration pool
the threshold rate matches the top-k rate to within one pillar per set on
average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyCalibrationPoolError, SelectionNotSubsetError
from .tensor import Coord, PillarTensor


class Measure(str, Enum):
    MEAN_ABS = "mean_abs"
    MAX_ABS = "max_abs"


class Aggregate(str, Enum):
    IDENTITY = "identity"
    AVG_POOL = "avg_pool_3x3"
    MAX_POOL = "max_pool_3x3"


@dataclass(frozen=True)
class ImportanceConfig:
    measure: Measure = Measure.MEAN_ABS
    aggregate: Aggregate = Aggregate.IDENTITY


@dataclass(frozen=True)
class Selection:
    """A selected subset of active coordinates plus how it was chosen."""

    selected: frozenset[Coord]
    topk_percent: float | None = None
    threshold: float | None = None


_NEIGHBORHOOD = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1)]


def pillar_importance(t: PillarTensor, cfg: ImportanceConfig | None = None) -> dict[Coord, float]:
    """Score every active pillar. Returns a coord -> score map."""
    cfg = cfg or ImportanceConfig()
    if t.n_active == 0:
        return {}
    absf = np.abs(t.features.astype(np.float64))
    if cfg.measure is Measure.MEAN_ABS:
        base = absf.mean(axis=1)
    else:
        base = absf.max(axis=1)
    if cfg.aggregate is Aggregate.IDENTITY:
        return {c: float(base[i]) for i, c in enumerate(t.coords)}
    index = t.index_of
    out: dict[Coord, float] = {}
    for i, (r, c) in enumerate(t.coords):
        acc: list[float] = []
        for dr, dc in _NEIGHBORHOOD:
            j = index.get((r + dr, c + dc))
            if j is not None:
                acc.append(float(base[j]))
        if cfg.aggregate is Aggregate.AVG_POOL:
            out[(r, c)] = sum(acc) / len(acc)
        else:
            out[(r, c)] = max(acc)
    return out


def topk_count(n: int, t_percent: float) -> int:
    """Number of pillars selected at t percent out of n: ceil(t% * n), clamped."""
    if n == 0 or t_percent <= 0:
        return 0
    # tiny slack so exact products like 50% of 4 do not ceil up on float noise
    k = math.ceil(t_percent * n / 100.0 - 1e-9)
    return max(1, min(n, k))


def select_topk(scores: Mapping[Coord, float], t_percent: float) -> Selection:
    """Select the top ceil(t% * n) scores, ties broken by (row, col) ascending."""
    k = topk_count(len(scores), t_percent)
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return Selection(frozenset(c for c, _ in ranked[:k]), topk_percent=t_percent)


def select_threshold(scores: Mapping[Coord, float], theta: float) -> Selection:
    """Select every pillar scoring at or above theta."""
    return Selection(
        frozenset(c for c, s in scores.items() if s >= theta), threshold=theta
    )


def calibrate_threshold(score_sets: Sequence[Sequence[float]], t_percent: float) -> float:
    """Calibrate a dilation threshold from pooled score sets.

    Returns the k-th largest pooled score for k = ceil(t% * N) over the N
    pooled scores, i.e. the smallest score still inside the top t percent.
    t = 0 returns +inf (selects nothing); t >= 100 returns the pool minimum.
    """
    pool = np.concatenate([np.asarray(s, dtype=np.float64) for s in score_sets if len(s)]) \
        if any(len(s) for s in score_sets) else np.zeros(0)
    n = pool.size
    if n == 0:
        raise EmptyCalibrationPoolError("no scores to calibrate from")
    k = topk_count(n, t_percent)
    if k == 0:
        return math.inf
    if k >= n:
        return float(pool.min())
    return float(np.partition(pool, n - k)[n - k])


def prune_by_importance(
    t: PillarTensor, keep_percent: float, cfg: ImportanceConfig | None = None
) -> PillarTensor:
    """Keep only the top keep_percent of active pillars by importance."""
    sel = select_topk(pillar_importance(t, cfg), keep_percent)
    keep = [i for i, c in enumerate(t.coords) if c in sel.selected]
    coords = tuple(t.coords[i] for i in keep)
    feats = t.features[keep] if keep else t.features[:0]
    return PillarTensor(t.height, t.width, t.channels, coords, feats)


def selection_flags(t: PillarTensor, selection: Selection) -> np.ndarray:
    """Per-entry boolean flags for a selection; raises if not a subset."""
    extra = selection.selected - set(t.coords)
    if extra:
        raise SelectionNotSubsetError(f"selected coords not active: {sorted(extra)[:4]}")
    return np.array([c in selection.selected for c in t.coords], dtype=bool)
