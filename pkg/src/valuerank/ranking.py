"""Rank a scenario's actions with PROMETHEE or an alternative MCDA backend.

PROMETHEE here uses a sigmoid of the score difference as its per-criterion
preference function, weights criteria by the transformed preferences, and
orders actions by net outranking flow.  MAUT, TOPSIS and AHP are offered
as comparison backends over the same score matrix and weights; their exact
adaptation is a local convention and is flagged as such in every result.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import ConfigurationError, StructuralError
from .values import (
    AnnotatedScenario,
    PreferenceProfile,
    ScoreTrace,
    ScoringConfig,
    Variant,
    score_scenario,
)

# Saaty's random consistency indices, indexed by matrix size.
RANDOM_INDEX = {
    1: 0.0, 2: 0.0, 3: 0.58, 4: 0.90, 5: 1.12, 6: 1.24, 7: 1.32, 8: 1.41,
    9: 1.45, 10: 1.49, 11: 1.51, 12: 1.48, 13: 1.56, 14: 1.57, 15: 1.59,
}
AHP_CR_LIMIT = 0.1


class Backend(str, enum.Enum):
    PROMETHEE = "promethee"
    MAUT = "maut"
    TOPSIS = "topsis"
    AHP = "ahp"

    @classmethod
    def parse(cls, value: "Backend | str") -> "Backend":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            choices = ", ".join(b.value for b in cls)
            raise ConfigurationError(f"unknown backend {value!r}; expected one of {choices}") from None


CONVENTION_NOTES = {
    Backend.PROMETHEE: None,
    Backend.MAUT: "convention: additive utility sum_j w_j * x_ij",
    Backend.TOPSIS: "convention: vector-normalized columns, normalized weights, all criteria benefit-type",
    Backend.AHP: "convention: a_ii' = exp(x_ij - x_i'j) per criterion, principal eigenvector, normalized weights",
}

CRITERIA_CHOICES = ("contextualized", "objective")


@dataclass(frozen=True, eq=False)
class PairwisePreferenceTensor:
    """``values[i, k, j]`` is the preference of action i over k on dimension j."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class FlowSummary:
    positive: tuple[float, ...]
    negative: tuple[float, ...]
    net: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class RankingResult:
    order: tuple[int, ...]
    scores: tuple[float, ...]
    backend: Backend
    variant: Variant
    action_ids: tuple[str, ...] = ()
    flows: FlowSummary | None = None
    trace: ScoreTrace | None = None
    convention: str | None = None
    warnings: tuple[str, ...] = ()
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def ranked_ids(self) -> tuple[str, ...]:
        return tuple(self.action_ids[i] for i in self.order)


def _scores_of(trace_or_scores: ScoreTrace | np.ndarray) -> np.ndarray:
    if isinstance(trace_or_scores, ScoreTrace):
        return np.asarray(trace_or_scores.contextualized, dtype=np.float64)
    scores = np.asarray(trace_or_scores, dtype=np.float64)
    if scores.ndim != 2:
        raise StructuralError(f"score matrix must be 2-D (n x m), got shape {scores.shape}")
    return scores


def pairwise_preferences(trace: ScoreTrace | np.ndarray) -> PairwisePreferenceTensor:
    """Sigmoid of every pairwise score difference, per dimension."""
    r = _scores_of(trace)
    diff = r[:, None, :] - r[None, :, :]
    return PairwisePreferenceTensor(1.0 / (1.0 + np.exp(-diff)))


def _only_action_preferences(action_relevance: np.ndarray) -> np.ndarray:
    rho = np.asarray(action_relevance, dtype=np.float64)
    diff = rho[:, None, :] - rho[None, :, :]
    return (1.0 / (1.0 + np.exp(-diff))).sum(axis=2)


def aggregate_preferences(
    tensor: PairwisePreferenceTensor,
    weights: PreferenceProfile | Sequence[float],
    variant: Variant | str = Variant.FULL,
    action_relevance: np.ndarray | None = None,
) -> np.ndarray:
    """Collapse the pairwise tensor over dimensions into an ``n x n`` matrix.

    ``only_action`` ignores ``tensor`` and rebuilds the comparison from raw
    action relevances, so ``action_relevance`` is required for it.
    """
    variant = Variant.parse(variant)
    if isinstance(weights, PreferenceProfile):
        weights = weights.transformed
    w = np.asarray(weights, dtype=np.float64)
    if variant is Variant.ONLY_ACTION:
        if action_relevance is None:
            raise ConfigurationError("only_action aggregation needs the raw action relevances")
        rho = np.asarray(action_relevance, dtype=np.float64)
        if rho.shape[1] != tensor.m:
            raise StructuralError(f"action relevances have {rho.shape[1]} dimensions, expected {tensor.m}")
        return _only_action_preferences(rho)
    if w.shape != (tensor.m,):
        raise StructuralError(f"{w.size} preference weights for {tensor.m} dimensions")
    if variant is Variant.NO_PREFERENCE:
        return tensor.values.sum(axis=2)
    return tensor.values @ w


def promethee_flows(agg: np.ndarray, divisor: float | None = None) -> FlowSummary:
    """Positive, negative and net flows of an aggregated preference matrix.

    Off-diagonal sums are divided by ``n`` unless ``divisor`` is given.
    Sums use ``math.fsum`` so they do not depend on summation order, which
    keeps duplicate actions exactly tied.
    """
    agg = np.asarray(agg, dtype=np.float64)
    if agg.ndim != 2 or agg.shape[0] != agg.shape[1] or agg.shape[0] < 1:
        raise StructuralError(f"aggregated preferences must be a non-empty square matrix, got {agg.shape}")
    n = agg.shape[0]
    div = float(n if divisor is None else divisor)
    rows = agg.tolist()
    positive = []
    negative = []
    for i in range(n):
        positive.append(math.fsum(rows[i][k] for k in range(n) if k != i) / div)
        negative.append(math.fsum(rows[k][i] for k in range(n) if k != i) / div)
    net = tuple(a - b for a, b in zip(positive, negative))
    return FlowSummary(tuple(positive), tuple(negative), net)


def order_by_score(scores: Sequence[float]) -> tuple[int, ...]:
    """Descending by score; ties keep ascending original index."""
    return tuple(sorted(range(len(scores)), key=lambda i: (-scores[i], i)))


def _normalized(weights: np.ndarray) -> np.ndarray:
    total = weights.sum()
    if not total > 0:
        raise ConfigurationError("criterion weights must have a positive sum")
    return weights / total


def maut_scores(x: np.ndarray, weights: Sequence[float]) -> np.ndarray:
    return np.asarray(x, dtype=np.float64) @ np.asarray(weights, dtype=np.float64)


def topsis_scores(x: np.ndarray, weights: Sequence[float]) -> np.ndarray:
    """Closeness coefficient to the ideal solution, all criteria benefit-type."""
    x = np.asarray(x, dtype=np.float64)
    w = _normalized(np.asarray(weights, dtype=np.float64))
    norms = np.sqrt((x**2).sum(axis=0))
    safe = np.where(norms > 0, norms, 1.0)
    v = (x / safe) * w
    ideal = v.max(axis=0)
    anti = v.min(axis=0)
    d_plus = np.sqrt(((v - ideal) ** 2).sum(axis=1))
    d_minus = np.sqrt(((v - anti) ** 2).sum(axis=1))
    denom = d_plus + d_minus
    # All actions identical: every one is both ideal and anti-ideal.
    return np.where(denom > 0, d_minus / np.where(denom > 0, denom, 1.0), 0.5)


def ahp_local_priorities(column: np.ndarray) -> tuple[np.ndarray, float]:
    """Principal eigenvector and its eigenvalue for one criterion's comparison matrix."""
    column = np.asarray(column, dtype=np.float64)
    n = column.size
    if n == 1:
        return np.ones(1), 1.0
    matrix = np.exp(column[:, None] - column[None, :])
    eigvals, eigvecs = np.linalg.eig(matrix)
    k = int(np.argmax(eigvals.real))
    vec = np.abs(eigvecs[:, k].real)
    # Equal inputs must get bitwise-equal priorities; eig leaves ulp-level noise.
    _, groups = np.unique(column, return_inverse=True)
    vec = (np.bincount(groups, weights=vec) / np.bincount(groups))[groups]
    return vec / vec.sum(), float(eigvals[k].real)


def consistency_ratio(lambda_max: float, n: int) -> float:
    if n <= 2:
        return 0.0
    ci = (lambda_max - n) / (n - 1)
    return max(ci, 0.0) / RANDOM_INDEX.get(n, RANDOM_INDEX[15])


def ahp_scores(x: np.ndarray, weights: Sequence[float]) -> tuple[np.ndarray, list[float]]:
    x = np.asarray(x, dtype=np.float64)
    w = _normalized(np.asarray(weights, dtype=np.float64))
    n, m = x.shape
    local = np.empty((n, m))
    ratios = []
    for j in range(m):
        local[:, j], lam = ahp_local_priorities(x[:, j])
        ratios.append(consistency_ratio(lam, n))
    return local @ w, ratios


def _criteria_and_weights(
    trace: ScoreTrace, variant: Variant, criteria: str
) -> tuple[np.ndarray, np.ndarray]:
    if variant is Variant.ONLY_ACTION:
        x = np.asarray(trace.action_objective)
    elif criteria == "objective":
        x = np.asarray(trace.action_objective)
    else:
        x = np.asarray(trace.contextualized)
    if variant in (Variant.ONLY_ACTION, Variant.NO_PREFERENCE):
        w = np.ones(trace.m)
    else:
        w = np.asarray(trace.preferences)
    return x, w


def rank(
    scenario: AnnotatedScenario,
    profile: PreferenceProfile,
    config: ScoringConfig | None = None,
    backend: Backend | str = Backend.PROMETHEE,
    criteria: str = "contextualized",
) -> RankingResult:
    """Rank the actions of ``scenario`` for the person described by ``profile``.

    ``criteria`` selects the matrix the non-PROMETHEE backends rank on:
    the contextualized scores (default) or the raw action relevances.
    """
    config = config or ScoringConfig()
    backend = Backend.parse(backend)
    if criteria not in CRITERIA_CHOICES:
        raise ConfigurationError(f"unknown criteria {criteria!r}; expected one of {CRITERIA_CHOICES}")
    variant = config.variant
    trace = score_scenario(scenario, profile, config)

    if backend is Backend.PROMETHEE:
        tensor = pairwise_preferences(trace)
        agg = aggregate_preferences(tensor, trace.preferences, variant, action_relevance=trace.action_objective)
        flows = promethee_flows(agg)
        return RankingResult(
            order=order_by_score(flows.net),
            scores=flows.net,
            backend=backend,
            variant=variant,
            action_ids=scenario.action_ids,
            flows=flows,
            trace=trace,
        )

    x, w = _criteria_and_weights(trace, variant, criteria)
    warnings: list[str] = []
    details: dict[str, Any] = {"criteria": criteria}
    if backend is Backend.MAUT:
        scores = maut_scores(x, w)
    elif backend is Backend.TOPSIS:
        scores = topsis_scores(x, w)
    else:
        scores, ratios = ahp_scores(x, w)
        details["consistency_ratios"] = ratios
        bad = [j for j, cr in enumerate(ratios) if cr > AHP_CR_LIMIT]
        if bad:
            warnings.append(
                f"AHP consistency ratio above {AHP_CR_LIMIT} on dimensions {bad}"
            )
    scores_t = tuple(float(s) for s in scores)
    return RankingResult(
        order=order_by_score(scores_t),
        scores=scores_t,
        backend=backend,
        variant=variant,
        action_ids=scenario.action_ids,
        trace=trace,
        convention=CONVENTION_NOTES[backend],
        warnings=tuple(warnings),
        details=details,
    )
