"""Compare engine rankings against reference (human) rankings from a study."""

from __future__ import annotations

import math
import statistics
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from .dataset import CorpusFile, StudyRecord
from .metrics import RankingPair, first_acc, mean_os_sim, os_sim, rank_correlations
from .ranking import Backend, rank
from .values import ScoringConfig, Variant

SPREAD_LABEL = "sample standard deviation"


@dataclass(frozen=True)
class QuestionResult:
    subject_id: str
    scenario_id: str
    predicted: tuple[str, ...]
    reference: tuple[str, ...]
    os_sim: float
    first_match: bool
    spearman: float | None
    kendall: float | None


def evaluate_study(
    corpus: CorpusFile,
    records: Iterable[StudyRecord],
    config: ScoringConfig | None = None,
    backend: Backend | str = Backend.PROMETHEE,
    criteria: str = "contextualized",
) -> list[QuestionResult]:
    """Rank every (subject, question) item; results ordered by subject then scenario id."""
    config = config or ScoringConfig()
    results = []
    for record in sorted(records, key=lambda r: r.subject_id):
        profile = config.profile(record.preferences)
        for scenario_id in sorted(record.rankings):
            scenario = corpus.scenario(scenario_id)
            ranked = rank(scenario, profile, config, backend, criteria=criteria).ranked_ids
            pair = RankingPair(ranked, record.rankings[scenario_id])
            corr = rank_correlations(pair)
            results.append(
                QuestionResult(
                    subject_id=record.subject_id,
                    scenario_id=scenario_id,
                    predicted=ranked,
                    reference=pair.reference,
                    os_sim=os_sim(pair),
                    first_match=pair.predicted[0] == pair.reference[0],
                    spearman=corr["spearman"],
                    kendall=corr["kendall"],
                )
            )
    return results


def _mean(values: Sequence[float]) -> float | None:
    return math.fsum(values) / len(values) if values else None


def _std(values: Sequence[float]) -> float | None:
    return statistics.stdev(values) if len(values) >= 2 else None


def _defined(values: Iterable[float | None]) -> list[float]:
    return [v for v in values if v is not None and not math.isnan(v)]


def summarize(results: Sequence[QuestionResult]) -> dict[str, Any]:
    """Headline metrics over items plus per-subject and per-question groupings.

    The headline averages over every (subject, question) item.  The
    ``by_subject`` block first averages within each subject, then across
    subjects.  Spreads are sample standard deviations.
    """
    pairs = [RankingPair(r.predicted, r.reference) for r in results]
    sims = [r.os_sim for r in results]
    hits = [1.0 if r.first_match else 0.0 for r in results]

    subjects: dict[str, list[QuestionResult]] = defaultdict(list)
    questions: dict[str, list[QuestionResult]] = defaultdict(list)
    for r in results:
        subjects[r.subject_id].append(r)
        questions[r.scenario_id].append(r)

    per_subject = []
    for sid in sorted(subjects):
        rs = subjects[sid]
        per_subject.append({
            "subject": sid,
            "items": len(rs),
            "os_sim": _mean([r.os_sim for r in rs]),
            "first_acc": _mean([1.0 if r.first_match else 0.0 for r in rs]),
        })
    per_question = []
    for qid in sorted(questions):
        rs = questions[qid]
        per_question.append({
            "scenario": qid,
            "subjects": len(rs),
            "os_sim": _mean([r.os_sim for r in rs]),
            "first_acc": _mean([1.0 if r.first_match else 0.0 for r in rs]),
        })
    subject_sims = [s["os_sim"] for s in per_subject]
    subject_hits = [s["first_acc"] for s in per_subject]

    return {
        "items": len(results),
        "spread": SPREAD_LABEL,
        "headline": {
            "grouping": "items (subject x question)",
            "mean_os_sim": mean_os_sim(pairs) if pairs else None,
            "os_sim_std": _std(sims),
            "first_acc": first_acc(pairs) if pairs else None,
            "first_acc_std": _std(hits),
        },
        "by_subject": {
            "grouping": "mean of per-subject means",
            "mean_os_sim": _mean(subject_sims),
            "os_sim_std": _std(subject_sims),
            "first_acc": _mean(subject_hits),
            "first_acc_std": _std(subject_hits),
        },
        "baselines": {
            "mean_spearman": _mean(_defined(r.spearman for r in results)),
            "mean_kendall": _mean(_defined(r.kendall for r in results)),
        },
        "per_subject": per_subject,
        "per_question": per_question,
        "details": [
            {
                "subject": r.subject_id,
                "scenario": r.scenario_id,
                "predicted": list(r.predicted),
                "reference": list(r.reference),
                "os_sim": r.os_sim,
                "first_match": r.first_match,
            }
            for r in results
        ],
    }


def evaluate_variants(
    corpus: CorpusFile,
    records: Sequence[StudyRecord],
    base: ScoringConfig,
    variants: Sequence[Variant] = tuple(Variant),
    backend: Backend | str = Backend.PROMETHEE,
) -> dict[str, dict[str, Any]]:
    out = {}
    for v in variants:
        cfg = ScoringConfig(base.w_s, base.w_a, base.steepness, v)
        out[v.value] = summarize(evaluate_study(corpus, records, cfg, backend))["headline"]
    return out


def compare_backends(
    corpus: CorpusFile,
    records: Sequence[StudyRecord],
    config: ScoringConfig | None = None,
    criteria: str = "contextualized",
) -> dict[str, dict[str, Any]]:
    out = {}
    for b in Backend:
        summary = summarize(evaluate_study(corpus, records, config, b, criteria))
        out[b.value] = summary["headline"]
    return out
