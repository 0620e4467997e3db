"""Command-line entry point: ``valuerank <command> ...``.

Exit codes: 0 success, 1 validation/configuration failure, 2 I/O failure,
3 remote assessor failure.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .assessor import (
    DEFAULT_RETRIES,
    AnnotationAssessor,
    AssessorRequest,
    ConstantAssessor,
    RemoteAssessor,
)
from .dataset import CorpusFile, corpus_stats, load_corpus, load_study
from .errors import AssessorError, ConfigurationError, ValidationError
from .evaluation import SPREAD_LABEL, compare_backends, evaluate_study, evaluate_variants, summarize
from .ranking import CONVENTION_NOTES, CRITERIA_CHOICES, Backend, rank
from .values import AnnotatedAction, AnnotatedScenario, ScoringConfig, Variant

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_REMOTE = 0, 1, 2, 3
FLOAT_DIGITS = 12

log = logging.getLogger("valuerank")


class UsageError(ValidationError):
    pass


def _digest(path: str) -> dict[str, str]:
    data = Path(path).read_bytes()
    return {"name": Path(path).name, "sha256": hashlib.sha256(data).hexdigest()}


def _manifest(command: str, config: dict[str, Any], inputs: dict[str, str]) -> dict[str, Any]:
    return {
        "command": command,
        "config": config,
        "inputs": {k: _digest(v) for k, v in inputs.items()},
        "tool": {"name": "valuerank", "version": __version__},
    }


def _clean(obj: Any) -> Any:
    """Round floats so structured output is stable across libm differences."""
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return None
        return round(obj, FLOAT_DIGITS) + 0.0
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def render_structured(report: dict[str, Any]) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _fmt(x: float | None, digits: int = 4) -> str:
    return "n/a" if x is None else f"{x:.{digits}f}"


def _parse_prefs(text: str, m: int) -> tuple[float, ...]:
    try:
        values = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"--prefs must be comma-separated numbers, got {text!r}") from None
    if len(values) != m:
        raise UsageError(f"--prefs has {len(values)} values, corpus has {m} dimensions")
    return values


def _config(args: argparse.Namespace, variant: str | None = None) -> ScoringConfig:
    return ScoringConfig(
        w_s=args.w_s, w_a=args.w_a, steepness=args.steepness,
        variant=variant if variant is not None else getattr(args, "variant", "full"),
    )


def _config_dict(config: ScoringConfig, **extra: Any) -> dict[str, Any]:
    return config.as_dict() | extra


def _rescored(scenario: AnnotatedScenario, corpus: CorpusFile, args: argparse.Namespace) -> AnnotatedScenario:
    if args.source == "annotations":
        source = AnnotationAssessor(corpus)
    elif args.source == "constant":
        source = ConstantAssessor(args.fill)
    else:
        source = RemoteAssessor(
            args.assessor_url, timeout=args.timeout, max_retries=args.retries, strict=not args.lenient
        )
    request = AssessorRequest(
        scenario.text, tuple(a.text for a in scenario.actions), corpus.dimension_set,
        scenario_id=scenario.id, action_ids=scenario.action_ids,
    )
    try:
        response = source.assess(request)
    finally:
        if isinstance(source, RemoteAssessor):
            source.close()
    actions = tuple(
        AnnotatedAction(a.id, a.text, scores) for a, scores in zip(scenario.actions, response.action_scores)
    )
    return AnnotatedScenario(
        scenario.id, scenario.text, response.scenario_scores, actions, scenario.agent_count, scenario.provenance
    )


def cmd_rank(args: argparse.Namespace) -> tuple[dict[str, Any], str]:
    corpus = load_corpus(args.corpus)
    try:
        scenario = corpus.scenario(args.scenario_id)
    except KeyError:
        raise UsageError(f"unknown scenario id {args.scenario_id!r}") from None
    config = _config(args)
    prefs = _parse_prefs(args.prefs, corpus.dimension_set.m)
    if args.source != "annotations":
        scenario = _rescored(scenario, corpus, args)
    profile = config.profile(prefs)
    result = rank(scenario, profile, config, args.backend, criteria=args.criteria)

    texts = {a.id: a.text for a in scenario.actions}
    ranked = [
        {"rank": k + 1, "index": i, "id": scenario.action_ids[i], "score": result.scores[i],
         "text": texts[scenario.action_ids[i]]}
        for k, i in enumerate(result.order)
    ]
    report: dict[str, Any] = {
        "manifest": _manifest(
            "rank",
            _config_dict(config, backend=result.backend.value, criteria=args.criteria, source=args.source,
                         preferences=list(prefs)),
            {"corpus": args.corpus},
        ),
        "scenario": scenario.id,
        "backend": result.backend.value,
        "convention": result.convention,
        "score_kind": "net_flow" if result.backend is Backend.PROMETHEE else f"{result.backend.value}_score",
        "preferences_transformed": list(profile.transformed),
        "ranking": ranked,
        "warnings": list(result.warnings),
    }
    if result.flows is not None:
        report["flows"] = {
            "positive": list(result.flows.positive),
            "negative": list(result.flows.negative),
            "net": list(result.flows.net),
        }
    if args.explain and result.trace is not None:
        report["trace"] = result.trace.to_dict()

    lines = [f"scenario {scenario.id}: {scenario.text}",
             f"backend {result.backend.value}, variant {config.variant.value}"]
    if result.convention:
        lines.append(f"note: {result.convention}")
    lines.append(f"{'rank':>4}  {'action':<12} {report['score_kind']:>14}  text")
    for row in ranked:
        lines.append(f"{row['rank']:>4}  {row['id']:<12} {row['score']:>14.6f}  {row['text']}")
    for w in result.warnings:
        lines.append(f"warning: {w}")
    if args.explain and result.trace is not None:
        t = result.trace
        dims = corpus.dimension_set.names
        lines.append("")
        lines.append("trace (per dimension)")
        lines.append("  " + " ".join(f"{d[:10]:>10}" for d in dims) + "  stage")
        for name in ("preferences", "scenario_objective", "scenario_discrepancy", "scenario_blend", "scaling"):
            lines.append("  " + " ".join(f"{v:>10.4f}" for v in getattr(t, name)) + f"  {name}")
        for i, aid in enumerate(t.action_ids):
            for name in ("action_objective", "action_discrepancy", "action_blend", "contextualized"):
                lines.append("  " + " ".join(f"{v:>10.4f}" for v in getattr(t, name)[i]) + f"  {aid} {name}")
    return report, "\n".join(lines) + "\n"


def _summary_lines(title: str, summary: dict[str, Any]) -> list[str]:
    h, s = summary["headline"], summary["by_subject"]
    return [
        title,
        f"  items: {summary['items']}  (spread: {SPREAD_LABEL})",
        f"  Mean OS-Sim (items):    {_fmt(h['mean_os_sim'])} +/- {_fmt(h['os_sim_std'])}",
        f"  First-Acc (items):      {_fmt(h['first_acc'])} +/- {_fmt(h['first_acc_std'])}",
        f"  Mean OS-Sim (subjects): {_fmt(s['mean_os_sim'])} +/- {_fmt(s['os_sim_std'])}",
        f"  First-Acc (subjects):   {_fmt(s['first_acc'])} +/- {_fmt(s['first_acc_std'])}",
    ]


def cmd_evaluate(args: argparse.Namespace) -> tuple[dict[str, Any], str]:
    corpus = load_corpus(args.corpus)
    records = load_study(args.study, corpus)
    config = _config(args)
    results = evaluate_study(corpus, records, config, args.backend)
    summary = summarize(results)
    report: dict[str, Any] = {
        "manifest": _manifest(
            "evaluate", _config_dict(config, backend=Backend.parse(args.backend).value, ablations=args.ablations),
            {"corpus": args.corpus, "study": args.study},
        ),
        "summary": summary,
    }
    lines = _summary_lines(f"evaluation ({Backend.parse(args.backend).value}, variant {config.variant.value})", summary)
    width = max([len(r["subject"]) for r in summary["per_subject"]]
                + [len(r["scenario"]) for r in summary["per_question"]] + [12])
    lines.append("  per subject:")
    for row in summary["per_subject"]:
        lines.append(f"    {row['subject']:<{width}} OS-Sim {_fmt(row['os_sim'])}  First-Acc {_fmt(row['first_acc'])}")
    lines.append("  per question:")
    for row in summary["per_question"]:
        lines.append(f"    {row['scenario']:<{width}} OS-Sim {_fmt(row['os_sim'])}  First-Acc {_fmt(row['first_acc'])}")
    b = summary["baselines"]
    lines.append(f"  baselines: mean Spearman {_fmt(b['mean_spearman'])}, mean Kendall {_fmt(b['mean_kendall'])}")
    if args.ablations:
        table = evaluate_variants(corpus, records, config, backend=args.backend)
        report["ablations"] = table
        lines.append("  ablations:")
        for name, h in table.items():
            lines.append(f"    {name:<14} OS-Sim {_fmt(h['mean_os_sim'])}  First-Acc {_fmt(h['first_acc'])}")
    return report, "\n".join(lines) + "\n"


def cmd_compare_mcda(args: argparse.Namespace) -> tuple[dict[str, Any], str]:
    corpus = load_corpus(args.corpus)
    records = load_study(args.study, corpus)
    config = _config(args)
    table = compare_backends(corpus, records, config, criteria=args.criteria)
    rows = {
        name: h | {"convention": CONVENTION_NOTES[Backend(name)]} for name, h in table.items()
    }
    report = {
        "manifest": _manifest("compare-mcda", _config_dict(config, criteria=args.criteria),
                              {"corpus": args.corpus, "study": args.study}),
        "spread": SPREAD_LABEL,
        "backends": rows,
    }
    lines = [f"{'backend':<10} {'Mean OS-Sim':>12} {'std':>8} {'First-Acc':>10}  note"]
    for name, h in rows.items():
        lines.append(
            f"{name:<10} {_fmt(h['mean_os_sim']):>12} {_fmt(h['os_sim_std']):>8} "
            f"{_fmt(h['first_acc']):>10}  {h['convention'] or 'reference method'}"
        )
    return report, "\n".join(lines) + "\n"


def cmd_validate(args: argparse.Namespace) -> tuple[dict[str, Any], str, int]:
    violations: list[str] = []
    corpus = None
    try:
        corpus = load_corpus(args.corpus)
    except ValidationError as exc:
        violations.extend(f"corpus: {v}" for v in exc.violations)
    if args.study:
        if corpus is None:
            violations.append("study: not checked because the corpus is invalid")
        else:
            try:
                load_study(args.study, corpus)
            except ValidationError as exc:
                violations.extend(f"study: {v}" for v in exc.violations)
    inputs = {"corpus": args.corpus} | ({"study": args.study} if args.study else {})
    report = {
        "manifest": _manifest("validate", {}, inputs),
        "violation_count": len(violations),
        "violations": violations,
    }
    text = "\n".join([*violations, f"{len(violations)} violations"]) + "\n"
    return report, text, EXIT_OK if not violations else EXIT_VALIDATION


def cmd_stats(args: argparse.Namespace) -> tuple[dict[str, Any], str]:
    corpus = load_corpus(args.corpus)
    stats = corpus_stats(corpus)
    report = {"manifest": _manifest("stats", {}, {"corpus": args.corpus}), "stats": stats.as_dict()}
    lines = [f"scenarios: {stats.scenario_count}", f"actions: {stats.action_count}", ""]
    lines.append(f"{'dimension':<12} {'scn+':>6} {'scn-':>6} {'scn0':>6} {'act+':>6} {'act-':>6} {'act0':>6}")
    for j, d in enumerate(stats.dimensions):
        lines.append(
            f"{d:<12} {stats.scenario_positive[j]:>6} {stats.scenario_negative[j]:>6} {stats.scenario_zero[j]:>6} "
            f"{stats.action_positive[j]:>6} {stats.action_negative[j]:>6} {stats.action_zero[j]:>6}"
        )
    lines.append("")
    lines.append("score histogram (bin width 0.1)")
    for k, count in enumerate(stats.score_histogram):
        lo = -1.0 + 0.1 * k
        lines.append(f"  [{lo:+.1f}, {lo + 0.1:+.1f}{']' if k == 19 else ')'} {count}")
    lines.append("agents per scenario: " + ", ".join(f"{k}: {v}" for k, v in stats.agent_counts.items()))
    lines.append("actions per scenario: " + ", ".join(f"{k}: {v}" for k, v in stats.actions_per_scenario.items()))
    return report, "\n".join(lines) + "\n"


def _add_scoring(p: argparse.ArgumentParser, variant: bool = True) -> None:
    p.add_argument("--w-s", type=float, default=0.3, help="subjective weight for the scenario blend")
    p.add_argument("--w-a", type=float, default=0.3, help="subjective weight for the action blend")
    p.add_argument("--steepness", type=float, default=10.0, help="preference sigmoid steepness")
    if variant:
        p.add_argument("--variant", default="full", choices=[v.value for v in Variant])


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--timestamp", action="store_true", help="prefix text output with the current time")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="valuerank", description="Value-driven action ranking.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", help="rank the actions of one scenario")
    p.add_argument("corpus")
    p.add_argument("scenario_id")
    p.add_argument("--prefs", required=True, help="comma-separated raw preferences in [0, 1], corpus dimension order")
    p.add_argument("--backend", default="promethee", choices=[b.value for b in Backend])
    p.add_argument("--criteria", default="contextualized", choices=CRITERIA_CHOICES)
    p.add_argument("--explain", action="store_true", help="include the full score trace")
    p.add_argument("--source", default="annotations", choices=("annotations", "constant", "remote"))
    p.add_argument("--fill", type=float, default=0.0, help="score used by --source constant")
    p.add_argument("--assessor-url", default=None)
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--retries", type=int, default=DEFAULT_RETRIES)
    p.add_argument("--lenient", action="store_true", help="clamp out-of-range remote scores instead of failing")
    _add_scoring(p)
    _add_format(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("evaluate", help="compare engine rankings with a study's reference rankings")
    p.add_argument("corpus")
    p.add_argument("study")
    p.add_argument("--backend", default="promethee", choices=[b.value for b in Backend])
    p.add_argument("--ablations", action="store_true", help="add one column per ablation variant")
    _add_scoring(p)
    _add_format(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare-mcda", help="mean OS-Sim and First-Acc per ranking backend")
    p.add_argument("corpus")
    p.add_argument("study")
    p.add_argument("--criteria", default="contextualized", choices=CRITERIA_CHOICES)
    _add_scoring(p)
    _add_format(p)
    p.set_defaults(func=cmd_compare_mcda)

    p = sub.add_parser("validate", help="list every violation in a corpus (and study)")
    p.add_argument("corpus")
    p.add_argument("study", nargs="?")
    _add_format(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("corpus")
    _add_format(p)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        out = args.func(args)
    except AssessorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REMOTE
    except (ValidationError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        violations = getattr(exc, "violations", [])
        if len(violations) > 1:
            for v in violations:
                print(f"  - {v}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    report, text, *rest = out
    code = rest[0] if rest else EXIT_OK
    if args.format == "structured":
        sys.stdout.write(render_structured(report))
    else:
        if args.timestamp:
            sys.stdout.write(f"# {datetime.datetime.now().isoformat(timespec='seconds')}\n")
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
