"""Loop-literal reference ranking used to cross-check :func:`valuerank.ranking.rank`.

Nothing here calls into the vectorized scoring or ranking code; every
stage is re-derived from the raw scenario and preferences with scalar
``math`` arithmetic.  Only meant for small inputs in tests.
"""

from __future__ import annotations

import math

from .errors import ValidationError
from .ranking import Backend, RankingResult
from .values import AnnotatedScenario, PreferenceProfile, ScoringConfig

MAX_ACTIONS = 12


def _sig(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def brute_force_flows(
    scenario: AnnotatedScenario,
    profile: PreferenceProfile,
    config: ScoringConfig | None = None,
) -> list[float]:
    config = config or ScoringConfig()
    variant = config.variant.value
    n = len(scenario.actions)
    m = len(scenario.relevance)
    if n > MAX_ACTIONS:
        raise ValidationError(f"brute-force oracle accepts at most {MAX_ACTIONS} actions, got {n}")

    p = [1.0 / (1.0 + math.exp(-(profile.raw[j] - 0.5) * config.steepness)) for j in range(m)]
    w_s, w_a = config.w_s, config.w_a

    # Part 1: subjective bias and combined ratings
    r_s = [0.0] * m
    r_a = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            rho_s = scenario.relevance[j]
            rho_a = scenario.actions[i].relevance[j]
            d_s = 1 - abs(abs(rho_s) - p[j])
            d_a = 1 - abs(abs(rho_a) - p[j])
            if variant == "no_subjective":
                r_s[j] = rho_s
                r_a[i][j] = rho_a
            else:
                r_s[j] = d_s * w_s + rho_s * (1 - w_s)
                r_a[i][j] = d_a * w_a + rho_a * (1 - w_a)

    # Part 2: individual ratings
    r = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            if variant == "no_scenario":
                r[i][j] = r_a[i][j]
            else:
                r[i][j] = 1 / (1 + math.exp(-abs(r_s[j]))) * r_a[i][j]

    # Pairwise preferences and weighting
    agg = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for k in range(n):
            total = 0.0
            for j in range(m):
                if variant == "only_action":
                    rho_i = scenario.actions[i].relevance[j]
                    rho_k = scenario.actions[k].relevance[j]
                    total += _sig(rho_i - rho_k)
                elif variant == "no_preference":
                    total += _sig(r[i][j] - r[k][j])
                else:
                    total += p[j] * _sig(r[i][j] - r[k][j])
            agg[i][k] = total

    flows = []
    for i in range(n):
        plus = 0.0
        minus = 0.0
        for k in range(n):
            if k != i:
                plus += agg[i][k]
                minus += agg[k][i]
        flows.append(plus / n - minus / n)
    return flows


def brute_force_rank(
    scenario: AnnotatedScenario,
    profile: PreferenceProfile,
    config: ScoringConfig | None = None,
) -> RankingResult:
    """Action indices best-first, ties broken by ascending index."""
    config = config or ScoringConfig()
    flows = brute_force_flows(scenario, profile, config)
    indices = list(range(len(flows)))
    # Selection sort keeps this independent of the production sort key.
    order = []
    while indices:
        best = indices[0]
        for i in indices[1:]:
            if flows[i] > flows[best]:
                best = i
        order.append(best)
        indices.remove(best)
    return RankingResult(
        order=tuple(order),
        scores=tuple(flows),
        backend=Backend.PROMETHEE,
        variant=config.variant,
        action_ids=scenario.action_ids,
        details={"oracle": "brute_force"},
    )
