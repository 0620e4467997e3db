"""Evaluation metrics for score predictions and action rankings."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Sequence

import numpy as np

from .errors import StructuralError, UndefinedMetricError, ValidationError


@dataclass(frozen=True, eq=False)
class ScorePredictionBatch:
    """Predicted and reference scores, one row per sample, one column per dimension."""

    predictions: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        pred = np.asarray(self.predictions, dtype=np.float64)
        lab = np.asarray(self.labels, dtype=np.float64)
        if pred.ndim == 1:
            pred = pred.reshape(1, -1)
        if lab.ndim == 1:
            lab = lab.reshape(1, -1)
        if pred.shape != lab.shape:
            raise StructuralError(f"prediction shape {pred.shape} != label shape {lab.shape}")
        if not (np.isfinite(pred).all() and np.isfinite(lab).all()):
            raise ValidationError("predictions and labels must be finite")
        object.__setattr__(self, "predictions", pred)
        object.__setattr__(self, "labels", lab)

    @property
    def D(self) -> int:
        return self.predictions.shape[1]

    @property
    def size(self) -> int:
        return self.predictions.size


def avg_acc(batch: ScorePredictionBatch, t: float) -> float:
    """Fraction of entries whose absolute error is strictly below ``t``."""
    if not t > 0:
        raise ValidationError(f"threshold must be positive, got {t!r}")
    if batch.size == 0:
        raise UndefinedMetricError("avg_acc of an empty batch")
    hits = np.abs(batch.predictions - batch.labels) < t
    return float(hits.sum()) / batch.size


def mae(batch: ScorePredictionBatch) -> float:
    if batch.size == 0:
        raise UndefinedMetricError("mae of an empty batch")
    return math.fsum(np.abs(batch.predictions - batch.labels).ravel().tolist()) / batch.size


@dataclass(frozen=True)
class RankingPair:
    """A predicted ordering and the reference ordering of the same ids."""

    predicted: tuple[Hashable, ...]
    reference: tuple[Hashable, ...]

    def __post_init__(self) -> None:
        pred = tuple(self.predicted)
        ref = tuple(self.reference)
        object.__setattr__(self, "predicted", pred)
        object.__setattr__(self, "reference", ref)
        problems = []
        if not pred or not ref:
            problems.append("rankings must be non-empty")
        for name, seq in (("predicted", pred), ("reference", ref)):
            if len(set(seq)) != len(seq):
                dupes = sorted({repr(x) for x in seq if seq.count(x) > 1})
                problems.append(f"{name} ranking repeats {', '.join(dupes)}")
        if set(pred) != set(ref):
            missing = sorted(repr(x) for x in set(ref) - set(pred))
            extra = sorted(repr(x) for x in set(pred) - set(ref))
            problems.append(f"id sets differ (missing {missing}, unexpected {extra})")
        if problems:
            raise ValidationError("; ".join(problems), problems)

    @property
    def n(self) -> int:
        return len(self.reference)


def _pair(predicted, reference=None) -> RankingPair:
    if isinstance(predicted, RankingPair):
        return predicted
    return RankingPair(tuple(predicted), tuple(reference))


def os_sim(predicted: Sequence[Hashable] | RankingPair, reference: Sequence[Hashable] | None = None) -> float:
    """Order-sensitive similarity: mean prefix overlap over depths 1..n.

    Accepts either a :class:`RankingPair` or two sequences.  Computed in
    exact rational arithmetic and rounded once at the end.

    >>> os_sim([5, 3, 1, 4, 2], [3, 1, 5, 4, 2])
    0.7
    """
    pair = _pair(predicted, reference)
    n = pair.n
    seen_s: set = set()
    seen_t: set = set()
    common = 0
    total = Fraction(0)
    for d, (s, t) in enumerate(zip(pair.predicted, pair.reference), start=1):
        if s == t:
            common += 1
        else:
            common += (s in seen_t) + (t in seen_s)
        seen_s.add(s)
        seen_t.add(t)
        total += Fraction(common, d)
    return float(total / n)


def mean_os_sim(pairs: Sequence[RankingPair]) -> float:
    if not pairs:
        raise UndefinedMetricError("mean OS-Sim over zero ranking pairs")
    return math.fsum(os_sim(p) for p in pairs) / len(pairs)


def first_acc(pairs: Sequence[RankingPair]) -> float:
    if not pairs:
        raise UndefinedMetricError("First-Acc over zero ranking pairs")
    return sum(p.predicted[0] == p.reference[0] for p in pairs) / len(pairs)


def rank_correlations(pair: RankingPair) -> dict[str, float | None]:
    """Spearman's rho and Kendall's tau between two orderings.

    Baselines only; both ignore where in the list a disagreement happens.
    ``None`` when undefined (fewer than two items).
    """
    from scipy.stats import kendalltau, spearmanr

    pair = _pair(pair)
    if pair.n < 2:
        return {"spearman": None, "kendall": None}
    position = {x: k for k, x in enumerate(pair.reference)}
    pred_pos = [position[x] for x in pair.predicted]
    ref_pos = list(range(pair.n))
    rho = spearmanr(pred_pos, ref_pos).statistic
    tau = kendalltau(pred_pos, ref_pos).statistic
    return {"spearman": float(rho), "kendall": float(tau)}
