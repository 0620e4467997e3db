"""Corpus and study file formats, validation, statistics and splitting.

Both formats are JSON documents with a ``format`` header:

* ``valuepilot-corpus/1``: dimension names plus annotated scenarios.
* ``valuepilot-study/1``: subjects with raw preferences and reference
  action rankings keyed by scenario id.

Loading validates the whole document and reports every violation at once;
nothing is returned unless the file is clean.  See ``docs/formats.md``.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

from .errors import ParseError, ValidationError
from .values import AnnotatedAction, AnnotatedScenario, DimensionSet, ValueVector

CORPUS_FORMAT = "valuepilot-corpus/1"
STUDY_FORMAT = "valuepilot-study/1"
HISTOGRAM_BINS = 20


@dataclass(frozen=True)
class CorpusFile:
    dimension_set: DimensionSet
    scenarios: tuple[AnnotatedScenario, ...]
    version: str = CORPUS_FORMAT

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        problems = []
        seen: set[str] = set()
        for s in self.scenarios:
            if s.id in seen:
                problems.append(f"duplicate scenario id {s.id!r}")
            seen.add(s.id)
            if s.m != self.dimension_set.m:
                problems.append(
                    f"scenario {s.id!r} has {s.m} dimensions, corpus declares {self.dimension_set.m}"
                )
        if problems:
            raise ValidationError("; ".join(problems), problems)

    def scenario(self, scenario_id: str) -> AnnotatedScenario:
        for s in self.scenarios:
            if s.id == scenario_id:
                return s
        raise KeyError(scenario_id)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.scenarios)


@dataclass(frozen=True)
class StudyRecord:
    subject_id: str
    preferences: ValueVector
    rankings: dict[str, tuple[str, ...]]


@dataclass(frozen=True)
class CorpusStats:
    scenario_count: int
    action_count: int
    dimensions: tuple[str, ...]
    scenario_positive: tuple[int, ...]
    scenario_negative: tuple[int, ...]
    scenario_zero: tuple[int, ...]
    action_positive: tuple[int, ...]
    action_negative: tuple[int, ...]
    action_zero: tuple[int, ...]
    score_histogram: tuple[int, ...]
    agent_counts: dict[str, int]
    actions_per_scenario: dict[int, int]

    def as_dict(self) -> dict[str, Any]:
        return {
            "scenario_count": self.scenario_count,
            "action_count": self.action_count,
            "dimensions": list(self.dimensions),
            "scenario_positive": list(self.scenario_positive),
            "scenario_negative": list(self.scenario_negative),
            "scenario_zero": list(self.scenario_zero),
            "action_positive": list(self.action_positive),
            "action_negative": list(self.action_negative),
            "action_zero": list(self.action_zero),
            "score_histogram": {
                "bin_width": 0.1,
                "lower_edges": [round(-1.0 + 0.1 * k, 1) for k in range(HISTOGRAM_BINS)],
                "counts": list(self.score_histogram),
            },
            "agent_counts": dict(self.agent_counts),
            "actions_per_scenario": {str(k): v for k, v in self.actions_per_scenario.items()},
        }


@dataclass(frozen=True)
class SplitResult:
    train: CorpusFile
    test: CorpusFile
    warnings: tuple[str, ...] = ()

    def __iter__(self) -> Iterator[CorpusFile]:
        return iter((self.train, self.test))


def _read_json(path: str | Path) -> Any:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}", exc.lineno, exc.colno
        ) from None


def _is_number(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _check_scores(values: Any, where: str, dims: tuple[str, ...], low: float, high: float,
                  problems: list[str]) -> bool:
    if not isinstance(values, list):
        problems.append(f"{where}: scores must be a list")
        return False
    ok = True
    if len(values) != len(dims):
        problems.append(f"{where}: {len(values)} scores for {len(dims)} dimensions")
        ok = False
    for j, v in enumerate(values):
        name = dims[j] if j < len(dims) else f"#{j}"
        if not _is_number(v) or not math.isfinite(v):
            problems.append(f"{where}, dimension {name}: {v!r} is not a finite number")
            ok = False
        elif not low <= v <= high:
            problems.append(f"{where}, dimension {name}: {v!r} outside [{low}, {high}]")
            ok = False
    return ok


def _check_text(obj: dict, key: str, where: str, problems: list[str]) -> bool:
    v = obj.get(key)
    if not isinstance(v, str) or not v.strip():
        problems.append(f"{where}: {key!r} must be a non-empty string")
        return False
    return True


def parse_corpus(doc: Any) -> CorpusFile:
    """Validate a decoded corpus document, collecting every violation."""
    problems: list[str] = []
    if not isinstance(doc, dict):
        raise ValidationError("corpus document must be an object")
    if doc.get("format") != CORPUS_FORMAT:
        problems.append(f"format must be {CORPUS_FORMAT!r}, got {doc.get('format')!r}")
    raw_dims = doc.get("dimensions")
    dims: tuple[str, ...] = ()
    if isinstance(raw_dims, list):
        try:
            dims = DimensionSet(tuple(raw_dims)).names
        except ValidationError as exc:
            problems.extend(exc.violations)
    else:
        problems.append("'dimensions' must be a list of names")
    raw_scenarios = doc.get("scenarios")
    if not isinstance(raw_scenarios, list):
        problems.append("'scenarios' must be a list")
        raw_scenarios = []

    first_seen: dict[str, int] = {}
    scenarios = []
    for k, raw in enumerate(raw_scenarios):
        where = f"scenarios[{k}]"
        if not isinstance(raw, dict):
            problems.append(f"{where}: must be an object")
            continue
        sid = raw.get("id")
        if isinstance(sid, str) and sid:
            where = f"scenarios[{k}] (id {sid!r})"
            if sid in first_seen:
                problems.append(f"duplicate scenario id {sid!r} at scenarios[{first_seen[sid]}] and scenarios[{k}]")
            else:
                first_seen[sid] = k
        else:
            problems.append(f"{where}: 'id' must be a non-empty string")
        ok = _check_text(raw, "text", where, problems) and isinstance(sid, str) and bool(sid)
        ok &= _check_scores(raw.get("relevance"), f"{where} relevance", dims, -1.0, 1.0, problems)
        agents = raw.get("agent_count")
        if agents is not None and (not isinstance(agents, int) or isinstance(agents, bool) or agents < 1):
            problems.append(f"{where}: agent_count must be a positive integer, got {agents!r}")
            ok = False
        prov = raw.get("provenance")
        if prov is not None and not isinstance(prov, str):
            problems.append(f"{where}: provenance must be a string")
            ok = False
        raw_actions = raw.get("actions")
        if not isinstance(raw_actions, list) or not raw_actions:
            problems.append(f"{where}: 'actions' must be a non-empty list")
            raw_actions = []
            ok = False
        actions = []
        action_ids: dict[str, int] = {}
        for a_k, a in enumerate(raw_actions):
            a_where = f"{where} actions[{a_k}]"
            if not isinstance(a, dict):
                problems.append(f"{a_where}: must be an object")
                ok = False
                continue
            aid = a.get("id")
            if isinstance(aid, str) and aid:
                a_where = f"scenario {sid!r} action {aid!r}"
                if aid in action_ids:
                    problems.append(
                        f"scenario {sid!r}: duplicate action id {aid!r} at actions[{action_ids[aid]}] and actions[{a_k}]"
                    )
                    ok = False
                else:
                    action_ids[aid] = a_k
            else:
                problems.append(f"{a_where}: 'id' must be a non-empty string")
                ok = False
            ok &= _check_text(a, "text", a_where, problems)
            ok &= _check_scores(a.get("relevance"), f"{a_where} relevance", dims, -1.0, 1.0, problems)
            if ok:
                actions.append(AnnotatedAction(aid, a["text"], tuple(float(x) for x in a["relevance"])))
        if ok and not problems:
            scenarios.append(
                AnnotatedScenario(
                    id=sid,
                    text=raw["text"],
                    relevance=tuple(float(x) for x in raw["relevance"]),
                    actions=tuple(actions),
                    agent_count=agents,
                    provenance=prov,
                )
            )
    if problems:
        raise ValidationError(f"corpus has {len(problems)} violation(s): " + "; ".join(problems), problems)
    return CorpusFile(DimensionSet(dims), tuple(scenarios), version=doc["format"])


def load_corpus(path: str | Path) -> CorpusFile:
    return parse_corpus(_read_json(path))


def corpus_to_dict(corpus: CorpusFile) -> dict[str, Any]:
    scenarios = []
    for s in corpus.scenarios:
        obj: dict[str, Any] = {"id": s.id, "text": s.text, "relevance": list(s.relevance)}
        if s.agent_count is not None:
            obj["agent_count"] = s.agent_count
        if s.provenance is not None:
            obj["provenance"] = s.provenance
        obj["actions"] = [{"id": a.id, "text": a.text, "relevance": list(a.relevance)} for a in s.actions]
        scenarios.append(obj)
    return {"format": CORPUS_FORMAT, "dimensions": list(corpus.dimension_set.names), "scenarios": scenarios}


def dump_corpus(corpus: CorpusFile) -> str:
    return json.dumps(corpus_to_dict(corpus), indent=2, ensure_ascii=False) + "\n"


def write_corpus(corpus: CorpusFile, path: str | Path) -> None:
    Path(path).write_text(dump_corpus(corpus), encoding="utf-8")


def _bin_index(x: float) -> int:
    # Rounding before flooring keeps values such as -0.7 out of the bin below.
    k = math.floor(round((x + 1.0) * 10.0, 9))
    return min(max(k, 0), HISTOGRAM_BINS - 1)


def corpus_stats(corpus: CorpusFile) -> CorpusStats:
    """Per-dimension sign counts and a score histogram; zeros are counted apart from positives and negatives."""
    m = corpus.dimension_set.m
    s_pos, s_neg, s_zero = [0] * m, [0] * m, [0] * m
    a_pos, a_neg, a_zero = [0] * m, [0] * m, [0] * m
    hist = [0] * HISTOGRAM_BINS
    agents: Counter[str] = Counter()
    per_scenario: Counter[int] = Counter()

    def tally(vec, pos, neg, zero):
        for j, v in enumerate(vec):
            if v > 0:
                pos[j] += 1
            elif v < 0:
                neg[j] += 1
            else:
                zero[j] += 1
            hist[_bin_index(v)] += 1

    for s in corpus.scenarios:
        tally(s.relevance, s_pos, s_neg, s_zero)
        for a in s.actions:
            tally(a.relevance, a_pos, a_neg, a_zero)
        agents["unknown" if s.agent_count is None else str(s.agent_count)] += 1
        per_scenario[s.n] += 1

    return CorpusStats(
        scenario_count=len(corpus.scenarios),
        action_count=sum(s.n for s in corpus.scenarios),
        dimensions=corpus.dimension_set.names,
        scenario_positive=tuple(s_pos),
        scenario_negative=tuple(s_neg),
        scenario_zero=tuple(s_zero),
        action_positive=tuple(a_pos),
        action_negative=tuple(a_neg),
        action_zero=tuple(a_zero),
        score_histogram=tuple(hist),
        agent_counts=dict(sorted(agents.items(), key=lambda kv: (kv[0] == "unknown", len(kv[0]), kv[0]))),
        actions_per_scenario=dict(sorted(per_scenario.items())),
    )


def split_corpus(corpus: CorpusFile, ratio: float = 0.8, seed: int = 0) -> SplitResult:
    """Seeded shuffle of scenarios, then cut at ``floor(ratio * N)``."""
    if not 0.0 < ratio < 1.0:
        raise ValidationError(f"split ratio must be strictly between 0 and 1, got {ratio!r}")
    scenarios = list(corpus.scenarios)
    random.Random(seed).shuffle(scenarios)
    cut = math.floor(ratio * len(scenarios))
    warnings = []
    if cut == 0:
        warnings.append("train split is empty")
    if cut == len(scenarios):
        warnings.append("test split is empty")
    return SplitResult(
        CorpusFile(corpus.dimension_set, tuple(scenarios[:cut]), corpus.version),
        CorpusFile(corpus.dimension_set, tuple(scenarios[cut:]), corpus.version),
        tuple(warnings),
    )


def parse_study(doc: Any, corpus: CorpusFile) -> list[StudyRecord]:
    problems: list[str] = []
    if not isinstance(doc, dict):
        raise ValidationError("study document must be an object")
    if doc.get("format") != STUDY_FORMAT:
        problems.append(f"format must be {STUDY_FORMAT!r}, got {doc.get('format')!r}")
    dims = corpus.dimension_set.names
    if "dimensions" in doc and doc["dimensions"] != list(dims):
        problems.append(f"study dimensions {doc['dimensions']!r} do not match corpus dimensions {list(dims)!r}")
    subjects = doc.get("subjects")
    if not isinstance(subjects, list):
        problems.append("'subjects' must be a list")
        subjects = []
    by_id = {s.id: s for s in corpus.scenarios}
    seen: set[str] = set()
    records = []
    for k, raw in enumerate(subjects):
        where = f"subjects[{k}]"
        if not isinstance(raw, dict):
            problems.append(f"{where}: must be an object")
            continue
        sid = raw.get("id")
        if not isinstance(sid, str) or not sid:
            problems.append(f"{where}: 'id' must be a non-empty string")
            continue
        where = f"subject {sid!r}"
        if sid in seen:
            problems.append(f"duplicate subject id {sid!r}")
        seen.add(sid)
        ok = _check_scores(raw.get("preferences"), f"{where} preferences", dims, 0.0, 1.0, problems)
        rankings = raw.get("rankings")
        if not isinstance(rankings, dict):
            problems.append(f"{where}: 'rankings' must be an object keyed by scenario id")
            continue
        parsed: dict[str, tuple[str, ...]] = {}
        for scenario_id, order in rankings.items():
            if scenario_id not in by_id:
                problems.append(f"{where} references unknown scenario {scenario_id!r}")
                ok = False
                continue
            expected = by_id[scenario_id].action_ids
            if not isinstance(order, list) or not all(isinstance(x, str) for x in order):
                problems.append(f"{where}, scenario {scenario_id!r}: ranking must be a list of action ids")
                ok = False
                continue
            repeated = sorted({x for x in order if order.count(x) > 1})
            unknown = sorted(set(order) - set(expected))
            missing = sorted(set(expected) - set(order))
            if repeated or unknown or missing:
                problems.append(
                    f"{where}, scenario {scenario_id!r}: ranking is not a permutation of the scenario's actions "
                    f"(repeated {repeated}, unknown {unknown}, missing {missing})"
                )
                ok = False
                continue
            parsed[scenario_id] = tuple(order)
        if ok:
            records.append(StudyRecord(sid, tuple(float(x) for x in raw["preferences"]), parsed))
    if problems:
        raise ValidationError(f"study has {len(problems)} violation(s): " + "; ".join(problems), problems)
    return records


def load_study(path: str | Path, corpus: CorpusFile) -> list[StudyRecord]:
    return parse_study(_read_json(path), corpus)


def study_to_dict(records: list[StudyRecord], dimensions: DimensionSet) -> dict[str, Any]:
    return {
        "format": STUDY_FORMAT,
        "dimensions": list(dimensions.names),
        "subjects": [
            {"id": r.subject_id, "preferences": list(r.preferences),
             "rankings": {k: list(v) for k, v in r.rankings.items()}}
            for r in records
        ],
    }


def write_study(records: list[StudyRecord], dimensions: DimensionSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(study_to_dict(records, dimensions), indent=2) + "\n", encoding="utf-8")
