import json
import os
from pathlib import Path

import numpy as np
import pytest

from valuerank.cli import main
from valuerank.dataset import (
    CORPUS_FORMAT,
    CorpusFile,
    StudyRecord,
    corpus_stats,
    load_corpus,
    write_corpus,
    write_study,
)
from valuerank.oracle import brute_force_rank
from valuerank.values import DimensionSet, PreferenceProfile, ScoringConfig

from _factories import dominance_instance, make_scenario, random_corpus
from test_dataset import recount

ROOT = Path(__file__).resolve().parent.parent
CORPUS = str(ROOT / "fixtures" / "corpus.json")
STUDY = str(ROOT / "fixtures" / "study.json")
GOLDEN = Path(__file__).resolve().parent / "golden"
UNIFORM = "0.5,0.5,0.5,0.5,0.5,0.5"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def check_golden(name: str, text: str) -> None:
    path = GOLDEN / name
    if os.environ.get("VALUERANK_REGEN_GOLDEN"):
        path.write_text(text)
    assert text == path.read_text(), f"{name} differs from the committed golden report"


def write_corpus_of(tmp_path, scenarios, dims=None, name="c.json"):
    corpus = CorpusFile(dims or DimensionSet(), tuple(scenarios))
    path = tmp_path / name
    write_corpus(corpus, path)
    return corpus, str(path)


class TestRank:
    def test_golden_uniform(self, capsys):
        code, out, _ = run(capsys, "rank", CORPUS, "camping-trip", "--prefs", UNIFORM,
                           "--format", "structured", "--explain")
        assert code == 0
        check_golden("rank_camping-trip_uniform.json", out)

    def test_golden_agrees_with_oracle(self):
        report = json.loads((GOLDEN / "rank_camping-trip_uniform.json").read_text())
        scenario = load_corpus(CORPUS).scenario("camping-trip")
        oracle = brute_force_rank(scenario, PreferenceProfile((0.5,) * 6))
        assert [row["index"] for row in report["ranking"]] == list(oracle.order)
        np.testing.assert_allclose([report["flows"]["net"][i] for i in range(5)], oracle.scores, atol=1e-11)

    def test_every_fixture_scenario_and_variant_matches_oracle(self, capsys):
        corpus = load_corpus(CORPUS)
        prefs = (0.9, 0.1, 0.6, 0.3, 0.8, 0.45)
        for scenario in corpus.scenarios:
            for variant in ("full", "only_action", "no_preference", "no_subjective", "no_scenario"):
                code, out, _ = run(capsys, "rank", CORPUS, scenario.id, "--prefs", ",".join(map(str, prefs)),
                                   "--variant", variant, "--format", "structured")
                assert code == 0
                got = [row["index"] for row in json.loads(out)["ranking"]]
                expected = brute_force_rank(scenario, PreferenceProfile(prefs), ScoringConfig(variant=variant))
                assert got == list(expected.order), (scenario.id, variant)

    def test_text_output(self, capsys):
        code, out, _ = run(capsys, "rank", CORPUS, "late-deadline", "--prefs", UNIFORM, "--explain")
        assert code == 0
        assert out.splitlines()[0].startswith("scenario late-deadline:")
        assert "contextualized" in out

    def test_deterministic_bytes(self, capsys):
        args = ("rank", CORPUS, "new-hobby", "--prefs", UNIFORM, "--format", "structured", "--backend", "ahp")
        assert run(capsys, *args)[1] == run(capsys, *args)[1]

    def test_unknown_scenario(self, capsys):
        code, _, err = run(capsys, "rank", CORPUS, "no-such-scenario", "--prefs", UNIFORM)
        assert code == 1
        assert "no-such-scenario" in err

    def test_bad_preferences(self, capsys):
        assert run(capsys, "rank", CORPUS, "camping-trip", "--prefs", "0.5,0.5")[0] == 1
        assert run(capsys, "rank", CORPUS, "camping-trip", "--prefs", "1.5,0.5,0.5,0.5,0.5,0.5")[0] == 1

    def test_missing_corpus(self, capsys, tmp_path):
        assert run(capsys, "rank", str(tmp_path / "x.json"), "s", "--prefs", UNIFORM)[0] == 2

    def test_constant_source_ties(self, capsys):
        code, out, _ = run(capsys, "rank", CORPUS, "camping-trip", "--prefs", UNIFORM,
                           "--source", "constant", "--format", "structured")
        assert code == 0
        assert [row["index"] for row in json.loads(out)["ranking"]] == [0, 1, 2, 3, 4]

    def test_remote_failure_exit_code(self, capsys):
        code, _, err = run(capsys, "rank", CORPUS, "camping-trip", "--prefs", UNIFORM, "--source", "remote",
                           "--assessor-url", "http://127.0.0.1:9", "--timeout", "0.5", "--retries", "0")
        assert code == 3
        assert "unavailable" in err

    def test_timestamp_only_on_request(self, capsys):
        _, out, _ = run(capsys, "rank", CORPUS, "camping-trip", "--prefs", UNIFORM)
        assert not out.startswith("#")
        _, out, _ = run(capsys, "rank", CORPUS, "camping-trip", "--prefs", UNIFORM, "--timestamp")
        assert out.startswith("# ")


def forced_order_fixture(tmp_path):
    """Engine orders are forced by uniform relevance levels per action."""
    dims = DimensionSet(("x", "y"))
    levels_1 = {"5": 0.9, "3": 0.7, "1": 0.5, "4": 0.3, "2": 0.1}  # engine: 5 3 1 4 2
    levels_2 = {"1": 0.9, "2": 0.7, "3": 0.5, "4": 0.3, "5": 0.1}  # engine: 1 2 3 4 5
    s1 = make_scenario([0.5, 0.5], [[levels_1[k]] * 2 for k in "12345"], sid="ex1", ids=list("12345"))
    s2 = make_scenario([0.5, 0.5], [[levels_2[k]] * 2 for k in "12345"], sid="ex2", ids=list("12345"))
    corpus, cpath = write_corpus_of(tmp_path, [s1, s2], dims)
    records = [
        StudyRecord("u1", (0.5, 0.5), {"ex1": tuple("31542"), "ex2": tuple("12354")}),
        StudyRecord("u2", (0.5, 0.5), {"ex2": tuple("21345")}),
    ]
    spath = tmp_path / "study.json"
    write_study(records, dims, spath)
    return cpath, str(spath)


def preference_sensitive_fixture(tmp_path):
    """Each action speaks to one dimension; references follow the full engine."""
    dims = DimensionSet(("a", "b", "c"))
    scenarios = []
    for k in range(4):
        rel = [[0.9, -0.2, 0.0], [-0.2, 0.9, 0.0], [0.0, -0.2, 0.9], [0.3, 0.3, 0.3]]
        rel = [[min(1.0, v + 0.02 * k) for v in row] for row in rel]
        scenarios.append(make_scenario([0.4, 0.4, 0.4], rel, sid=f"q{k}", ids=["A", "B", "C", "D"]))
    corpus, cpath = write_corpus_of(tmp_path, scenarios, dims)
    from valuerank.ranking import rank

    records = []
    for sid, prefs in (("likes-a", (1.0, 0.0, 0.1)), ("likes-b", (0.0, 1.0, 0.1)), ("likes-c", (0.1, 0.0, 1.0))):
        profile = PreferenceProfile(prefs)
        records.append(StudyRecord(sid, prefs, {s.id: rank(s, profile).ranked_ids for s in corpus.scenarios}))
    spath = tmp_path / "study.json"
    write_study(records, dims, spath)
    return cpath, str(spath)


class TestEvaluate:
    def test_golden(self, capsys):
        code, out, _ = run(capsys, "evaluate", CORPUS, STUDY, "--ablations", "--format", "structured")
        assert code == 0
        check_golden("evaluate_fixture.json", out)

    def test_golden_agrees_with_oracle(self):
        report = json.loads((GOLDEN / "evaluate_fixture.json").read_text())
        corpus = load_corpus(CORPUS)
        study = json.loads(Path(STUDY).read_text())
        prefs = {s["id"]: tuple(s["preferences"]) for s in study["subjects"]}
        for row in report["summary"]["details"]:
            scenario = corpus.scenario(row["scenario"])
            order = brute_force_rank(scenario, PreferenceProfile(prefs[row["subject"]])).order
            assert row["predicted"] == [scenario.action_ids[i] for i in order]

    def test_self_consistency(self, capsys, tmp_path):
        corpus = load_corpus(CORPUS)
        from valuerank.ranking import rank

        prefs = (0.3, 0.7, 0.2, 0.9, 0.5, 0.6)
        profile = PreferenceProfile(prefs)
        rec = StudyRecord("me", prefs, {s.id: rank(s, profile).ranked_ids for s in corpus.scenarios})
        write_study([rec], corpus.dimension_set, tmp_path / "s.json")
        code, out, _ = run(capsys, "evaluate", CORPUS, str(tmp_path / "s.json"), "--format", "structured")
        assert code == 0
        headline = json.loads(out)["summary"]["headline"]
        assert headline["mean_os_sim"] == 1.0
        assert headline["first_acc"] == 1.0

    def test_worked_example_sequences(self, capsys, tmp_path):
        cpath, spath = forced_order_fixture(tmp_path)
        code, out, _ = run(capsys, "evaluate", cpath, spath, "--format", "structured")
        assert code == 0
        details = {(d["subject"], d["scenario"]): d for d in json.loads(out)["summary"]["details"]}
        assert details[("u1", "ex1")]["predicted"] == list("53142")
        assert details[("u1", "ex1")]["os_sim"] == 0.7
        assert details[("u1", "ex2")]["os_sim"] == 0.95
        assert details[("u2", "ex2")]["os_sim"] == 0.8
        code, text, _ = run(capsys, "evaluate", cpath, spath)
        assert "0.8167" in text  # mean of the three items

    def test_full_beats_only_action(self, capsys, tmp_path):
        cpath, spath = preference_sensitive_fixture(tmp_path)
        code, out, _ = run(capsys, "evaluate", cpath, spath, "--ablations", "--format", "structured")
        assert code == 0
        table = json.loads(out)["ablations"]
        assert table["full"]["mean_os_sim"] == 1.0
        assert table["full"]["mean_os_sim"] > table["only_action"]["mean_os_sim"]

    def test_reports_both_groupings_and_spread_label(self, capsys):
        _, out, _ = run(capsys, "evaluate", CORPUS, STUDY, "--format", "structured")
        summary = json.loads(out)["summary"]
        assert summary["spread"] == "sample standard deviation"
        assert {"headline", "by_subject", "per_subject", "per_question"} <= summary.keys()

    def test_bad_study(self, capsys, tmp_path):
        doc = json.loads(Path(STUDY).read_text())
        doc["subjects"][0]["rankings"]["camping-trip"][0] = "vote"
        (tmp_path / "s.json").write_text(json.dumps(doc))
        assert run(capsys, "evaluate", CORPUS, str(tmp_path / "s.json"))[0] == 1


class TestCompareMcda:
    def test_table(self, capsys):
        code, out, _ = run(capsys, "compare-mcda", CORPUS, STUDY, "--format", "structured")
        assert code == 0
        rows = json.loads(out)["backends"]
        assert list(rows) == ["ahp", "maut", "promethee", "topsis"]
        assert rows["promethee"]["convention"] is None
        assert all(rows[b]["convention"].startswith("convention") for b in ("ahp", "maut", "topsis"))

    def test_single_action_corpus_all_equal(self, capsys, tmp_path):
        scenario = make_scenario([0.2] * 6, [[0.4] * 6], sid="only")
        corpus, cpath = write_corpus_of(tmp_path, [scenario])
        write_study([StudyRecord("u", (0.5,) * 6, {"only": ("a0",)})], corpus.dimension_set, tmp_path / "s.json")
        _, out, _ = run(capsys, "compare-mcda", cpath, str(tmp_path / "s.json"), "--format", "structured")
        rows = json.loads(out)["backends"]
        assert {r["mean_os_sim"] for r in rows.values()} == {1.0}
        assert {r["first_acc"] for r in rows.values()} == {1.0}

    def test_random_study_valid_permutations(self, tmp_path):
        from valuerank.evaluation import evaluate_study
        from valuerank.ranking import Backend

        rng = np.random.default_rng(99)
        corpus = random_corpus(rng, scenarios=20, m=6)
        records = [
            StudyRecord(f"u{k}", tuple(rng.uniform(0, 1, 6)),
                        {s.id: tuple(rng.permutation(list(s.action_ids))) for s in corpus.scenarios})
            for k in range(5)
        ]
        for backend in Backend:
            for r in evaluate_study(corpus, records, backend=backend):
                assert sorted(r.predicted) == sorted(r.reference)

    def test_dominance_fixture(self, capsys, tmp_path):
        rng = np.random.default_rng(5)
        scenarios, rankings = [], {}
        for k in range(10):
            s, _, winner = dominance_instance(rng, 5, 6)
            s = make_scenario(s.relevance, [a.relevance for a in s.actions], sid=f"d{k}")
            scenarios.append(s)
            rest = [a for i, a in enumerate(s.action_ids) if i != winner]
            rankings[s.id] = (s.action_ids[winner], *rest)
        corpus, cpath = write_corpus_of(tmp_path, scenarios)
        write_study([StudyRecord("u", (0.7,) * 6, rankings)], corpus.dimension_set, tmp_path / "s.json")
        _, out, _ = run(capsys, "compare-mcda", cpath, str(tmp_path / "s.json"), "--format", "structured")
        for name, row in json.loads(out)["backends"].items():
            assert row["first_acc"] == 1.0, name


class TestValidate:
    def test_clean(self, capsys):
        code, out, _ = run(capsys, "validate", CORPUS, STUDY)
        assert code == 0
        assert out.strip() == "0 violations"

    def test_seeded_violations(self, capsys, tmp_path):
        doc = json.loads(Path(CORPUS).read_text())
        doc["scenarios"][0]["actions"][1]["relevance"][0] = 1.7
        doc["scenarios"][1]["id"] = doc["scenarios"][0]["id"]
        doc["scenarios"][2]["actions"][0]["text"] = ""
        (tmp_path / "c.json").write_text(json.dumps(doc))
        code, out, _ = run(capsys, "validate", str(tmp_path / "c.json"))
        assert code == 1
        lines = out.strip().splitlines()
        assert lines[-1] == "3 violations"
        assert any("1.7" in l for l in lines)
        assert any("duplicate scenario id" in l for l in lines)
        assert any("'text'" in l for l in lines)

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "validate", str(tmp_path / "missing.json"))[0] == 2

    def test_parse_error_is_violation(self, capsys, tmp_path):
        (tmp_path / "c.json").write_text("{")
        code, out, _ = run(capsys, "validate", str(tmp_path / "c.json"), "--format", "structured")
        assert code == 1
        assert json.loads(out)["violation_count"] == 1


class TestStats:
    def test_one_action(self, capsys, tmp_path):
        _, cpath = write_corpus_of(tmp_path, [make_scenario([0.0] * 6, [[0.5, -0.5, 0, 0, 0, 0]])])
        code, out, _ = run(capsys, "stats", cpath, "--format", "structured")
        assert code == 0
        stats = json.loads(out)["stats"]
        assert stats["action_positive"] == [1, 0, 0, 0, 0, 0]
        assert stats["action_negative"] == [0, 1, 0, 0, 0, 0]

    def test_empty(self, capsys, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({"format": CORPUS_FORMAT, "dimensions": ["x"], "scenarios": []}))
        code, out, _ = run(capsys, "stats", str(tmp_path / "c.json"), "--format", "structured")
        assert code == 0
        stats = json.loads(out)["stats"]
        assert stats["scenario_count"] == 0
        assert stats["score_histogram"]["counts"] == [0] * 20

    def test_hundred_scenarios_recount(self, capsys, tmp_path):
        corpus = random_corpus(np.random.default_rng(8), scenarios=100, m=6)
        write_corpus(corpus, tmp_path / "c.json")
        _, out, _ = run(capsys, "stats", str(tmp_path / "c.json"), "--format", "structured")
        stats = json.loads(out)["stats"]
        pos, neg, hist = recount(corpus)
        assert stats["action_positive"] == pos["action"]
        assert stats["scenario_negative"] == neg["scenario"]
        assert stats["score_histogram"]["counts"] == hist

    def test_text(self, capsys):
        code, out, _ = run(capsys, "stats", CORPUS)
        assert code == 0
        assert out.startswith("scenarios: 4\nactions: 18")
