"""Command-line entry point: ``qablueprint <subcommand> ...``.

Every subcommand streams JSONL in and JSONL out, keeps input order in the
output regardless of ``--workers``, and writes per-record failures to a
sidecar ``<output>.errors.jsonl``.  Exit status is 0 when every record was
processed, 2 when some records failed, and 1 on a fatal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from .annotate import align_to_sentences, annotate_example
from .clients import ClientError, build_clients, load_fixtures, map_ordered
from .config import ConfigError, RunConfig, load_config
from .control import apply_plan_edit, drop_unanswerable, truncate_q1
from .core import AnnotatedExample, Blueprint, Summary
from .formats import (
    FormatError,
    MissingMarkerError,
    Variant,
    assemble_iterative,
    parse_e2e,
    parse_iterative_step,
    parse_multitask,
    serialize_e2e,
    serialize_iterative,
    serialize_multitask,
)
from .metrics import EmptyCorpusError, aggregate_reports, dataset_stats, evaluate_example
from .records import CorpusRecord, RecordError, blueprint_from_json, dumps, pair_to_json, read_jsonl

logger = logging.getLogger("qablueprint")

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2
VARIANTS = ("e2e", "multitask", "iterative")
RECORD_ERRORS = (RecordError, ClientError, FormatError, ValueError, KeyError, TypeError)


class FatalError(Exception):
    pass


@dataclass
class Outcome:
    rows: list = field(default_factory=list)
    error: Optional[dict] = None


@dataclass
class Context:
    config: RunConfig
    fixtures: dict

    def clients(self):
        return build_clients(self.config.clients, self.fixtures)


# -- I/O helpers ------------------------------------------------------------


def load_rows(path) -> list[tuple[int, Any]]:
    try:
        return list(read_jsonl(path))
    except OSError as exc:
        raise FatalError(f"cannot read {path}: {exc}") from exc


def sidecar_path(output) -> Path:
    return Path(str(output) + ".errors.jsonl")


def write_outputs(output, outcomes: list[Outcome]) -> int:
    errors = [o.error for o in outcomes if o.error is not None]
    with open(output, "w", encoding="utf-8") as fh:
        for o in outcomes:
            for row in o.rows:
                fh.write(dumps(row) + "\n")
    side = sidecar_path(output)
    if errors:
        with open(side, "w", encoding="utf-8") as fh:
            for e in errors:
                fh.write(dumps(e) + "\n")
        logger.warning("%d record(s) failed; see %s", len(errors), side)
        return EXIT_PARTIAL
    if side.exists():
        side.unlink()
    return EXIT_OK


def run_records(ctx: Context, rows, fn: Callable[[Any], list]) -> list[Outcome]:
    """Apply ``fn`` to each parsed row concurrently, catching per-record errors."""

    def one(item) -> Outcome:
        lineno, data = item
        example_id = data.get("example_id") if isinstance(data, dict) else None
        if isinstance(data, Exception):
            return Outcome(error={"line": lineno, "example_id": None, "error": f"invalid JSON: {data}"})
        try:
            return Outcome(rows=fn(data))
        except RECORD_ERRORS as exc:
            logger.debug("line %d failed", lineno, exc_info=True)
            return Outcome(error={
                "line": lineno, "example_id": example_id,
                "error": f"{type(exc).__name__}: {exc}",
            })

    return map_ordered(one, rows, ctx.config.workers)


def parsed_to_json(example_id: str, parsed, extra_flags=()) -> dict:
    return {
        "example_id": example_id,
        "blueprint": [pair_to_json(p) for p in parsed.blueprint],
        "summary": parsed.summary,
        "flags": list(extra_flags) + list(parsed.flags),
    }


# -- annotate ---------------------------------------------------------------


def cmd_annotate(args, ctx: Context) -> int:
    clients = ctx.clients()
    cfg = ctx.config

    def work(data) -> list:
        record = CorpusRecord.from_json(data)
        example = annotate_example(
            record.document(), record.summary_obj(), clients,
            cfg.split, cfg.annotate, record.override_propositions(),
        )
        record.blueprint = list(example.blueprint)
        out = record.to_json()
        out["sentence_plans"] = [
            [i for i, p in enumerate(example.blueprint) if p in sb.pairs]
            for sb in example.sentence_blueprints
        ]
        return [out]

    return write_outputs(args.output, run_records(ctx, load_rows(args.input), work))


# -- serialize --------------------------------------------------------------


def cmd_serialize(args, ctx: Context) -> int:
    fmt = ctx.config.format

    def work(data) -> list:
        record = CorpusRecord.from_json(data)
        summary = record.summary_obj()
        blueprint = record.blueprint_obj()
        example = AnnotatedExample(
            record.document(), summary, blueprint,
            tuple(align_to_sentences(blueprint, summary)), (),
        )
        if args.variant == "e2e":
            instances = [serialize_e2e(example, fmt)]
        elif args.variant == "multitask":
            instances = list(serialize_multitask(example, fmt))
        else:
            instances = serialize_iterative(example, fmt)
        return [inst.to_json(record.example_id) for inst in instances]

    return write_outputs(args.output, run_records(ctx, load_rows(args.input), work))


# -- parse ------------------------------------------------------------------


def _decode_text(data: dict) -> str:
    text = data.get("text", data.get("target"))
    if not isinstance(text, str):
        raise RecordError("decode needs a string 'text' (or 'target') field")
    return text


def _group_decodes(rows) -> tuple[list, list[Outcome]]:
    """Group decodes by example id in order of first appearance."""
    groups: dict[str, list] = {}
    bad: list[Outcome] = []
    for lineno, data in rows:
        if not isinstance(data, dict) or "example_id" not in data:
            bad.append(Outcome(error={"line": lineno, "example_id": None, "error": "not a decode record"}))
            continue
        groups.setdefault(str(data["example_id"]), []).append((lineno, data))
    return list(groups.items()), bad


def cmd_parse(args, ctx: Context) -> int:
    fmt = ctx.config.format
    strict = args.strict
    rows = load_rows(args.input)

    if args.variant == "e2e":
        groups, bad = [], []
        for lineno, data in rows:
            if isinstance(data, dict) and "example_id" in data:
                groups.append((str(data["example_id"]), [(lineno, data)]))
            else:
                bad.append(Outcome(error={"line": lineno, "example_id": None, "error": "not a decode record"}))
    else:
        groups, bad = _group_decodes(rows)

    def work_group(item) -> Outcome:
        example_id, members = item
        lineno = members[0][0]
        try:
            if args.variant == "e2e":
                parsed = parse_e2e(_decode_text(members[0][1]), fmt, strict)
            elif args.variant == "multitask":
                summary_text, questions_text = _split_multitask(members, fmt)
                parsed = parse_multitask(summary_text, questions_text, fmt)
            else:
                ordered = sorted(
                    enumerate(members),
                    key=lambda im: (im[1][1].get("step_index") is None, im[1][1].get("step_index") or 0, im[0]),
                )
                steps = [parse_iterative_step(_decode_text(d), fmt, strict) for _, (_, d) in ordered]
                parsed = assemble_iterative(steps)
            return Outcome(rows=[parsed_to_json(example_id, parsed)])
        except MissingMarkerError as exc:
            # keep a placeholder so the output stays aligned with the input
            flagged = {"example_id": example_id, "blueprint": [], "summary": "",
                       "flags": [f"missing_marker:{exc.marker}"]}
            return Outcome(rows=[flagged], error={
                "line": lineno, "example_id": example_id, "error": str(exc), "marker": exc.marker,
            })
        except RECORD_ERRORS as exc:
            return Outcome(error={
                "line": lineno, "example_id": example_id, "error": f"{type(exc).__name__}: {exc}",
            })

    outcomes = map_ordered(work_group, groups, ctx.config.workers)
    return write_outputs(args.output, bad + outcomes)


def _split_multitask(members, fmt) -> tuple[str, str]:
    summary_text = questions_text = None
    for _, data in members:
        text = _decode_text(data)
        variant = data.get("variant")
        if variant is None:
            variant = "multitask_questions" if fmt.questions_marker in text else "multitask_summary"
        if variant == Variant.MULTITASK_SUMMARY.value:
            summary_text = text
        elif variant == Variant.MULTITASK_QUESTIONS.value:
            questions_text = text
        else:
            raise RecordError(f"unexpected variant {variant!r} in a multitask decode")
    if summary_text is None:
        raise RecordError("no summary-task decode for this example")
    return summary_text, questions_text or ""


# -- control ----------------------------------------------------------------


def _load_corpus(path) -> dict[str, CorpusRecord]:
    corpus = {}
    for lineno, data in load_rows(path):
        try:
            record = CorpusRecord.from_json(data)
        except RecordError as exc:
            raise FatalError(f"{path}:{lineno}: {exc}") from exc
        corpus[record.example_id] = record
    return corpus


def _load_edits(path) -> dict[str, list]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FatalError(f"cannot read plan edits {path}: {exc}") from exc
    if isinstance(data, list):
        data = {item["example_id"]: item["blueprint"] for item in data}
    if not isinstance(data, dict):
        raise FatalError("plan edits must be a list or an object keyed by example id")
    return {str(k): v for k, v in data.items()}


def cmd_control(args, ctx: Context) -> int:
    corpus = _load_corpus(args.corpus)
    edits = _load_edits(args.edit) if args.edit else None
    clients = ctx.clients() if args.drop else None
    fmt, ctl = ctx.config.format, ctx.config.control
    prompts: list[list[dict]] = []

    def work(data) -> list:
        example_id = str(data["example_id"])
        if example_id not in corpus:
            raise RecordError(f"no corpus record for {example_id!r}")
        document = corpus[example_id].document()
        blueprint = blueprint_from_json(data.get("blueprint") or [])
        summary_text = data.get("summary", "")
        flags = list(data.get("flags", []))
        out = {"example_id": example_id}
        if args.drop:
            unasked = sum(1 for p in blueprint if not p.question.strip())
            if unasked:
                # no question to ask; these were judged by answer containment
                flags.append(f"answer_only:{unasked}")
            kept = drop_unanswerable(blueprint, document, clients.qa, ctl)
            flags.append(f"dropped:{len(blueprint) - len(kept)}")
            blueprint = kept
        if edits is not None:
            if example_id not in edits:
                raise RecordError(f"no plan edit for {example_id!r}")
            blueprint = blueprint_from_json(edits[example_id])
        sentence_plans = None
        if args.q1:
            if not summary_text.strip():
                raise RecordError("Q1 truncation needs a non-empty summary")
            sbs = truncate_q1(align_to_sentences(blueprint, Summary.from_text(summary_text)), ctl)
            sentence_plans = [list(sb.pairs) for sb in sbs]
            blueprint = Blueprint(tuple(p for plan in sentence_plans for p in plan))
        out["blueprint"] = [pair_to_json(p) for p in blueprint]
        out["summary"] = summary_text
        out["flags"] = flags
        rows = [out]
        if args.variant == "iterative" and sentence_plans is not None:
            sentences = Summary.from_text(summary_text).sentence_texts()
            for i, plan in enumerate(sentence_plans):
                p = apply_plan_edit(document, plan, args.variant, fmt, sentences[:i])
                rows.append(_prompt_row(example_id, args.variant, i, p))
        else:
            p = apply_plan_edit(document, blueprint, args.variant, fmt)
            rows.append(_prompt_row(example_id, args.variant, None, p))
        return rows

    outcomes = run_records(ctx, load_rows(args.input), work)
    for o in outcomes:
        prompts.append(o.rows[1:])
        o.rows = o.rows[:1]
    prompts_path = args.prompts or Path(args.output).with_name(Path(args.output).stem + ".prompts.jsonl")
    with open(prompts_path, "w", encoding="utf-8") as fh:
        for group in prompts:
            for row in group:
                fh.write(dumps(row) + "\n")
    return write_outputs(args.output, outcomes)


def _prompt_row(example_id, variant, step, prompt) -> dict:
    return {
        "example_id": example_id,
        "variant": variant,
        "step_index": step,
        "input": prompt.input_text,
        "prefix": prompt.prefix,
    }


# -- evaluate ---------------------------------------------------------------


def _prediction_fields(data: dict) -> tuple[str, Optional[Blueprint]]:
    summary = data.get("predicted_summary", data.get("summary", ""))
    if not isinstance(summary, str):
        raise RecordError("prediction summary must be a string")
    raw = data.get("predicted_blueprint", data.get("blueprint"))
    return summary, (blueprint_from_json(raw) if raw is not None else None)


def _inline_reference(data: dict) -> CorpusRecord:
    """Reference fields carried on the prediction record itself."""
    return CorpusRecord.from_json({
        "example_id": data.get("example_id"),
        "query": data.get("query"),
        "sources": data.get("sources"),
        "summary": data.get("reference_summary"),
        "blueprint": data.get("reference_blueprint"),
    })


def cmd_evaluate(args, ctx: Context) -> int:
    predictions = load_rows(args.predictions)
    references = _load_corpus(args.references) if args.references else None
    if references is not None:
        pred_ids = [str(d.get("example_id")) for _, d in predictions if isinstance(d, dict)]
        missing = sorted(set(references) - set(pred_ids))
        extra = sorted(set(pred_ids) - set(references))
        duplicates = len(pred_ids) - len(set(pred_ids))
        if missing or extra or duplicates:
            raise FatalError(
                f"prediction/reference ids differ (missing {missing[:5]}, "
                f"unexpected {extra[:5]}, {duplicates} duplicate)"
            )
    clients = ctx.clients()

    def work(data) -> list:
        if references is None:
            ref = _inline_reference(data)
        else:
            ref = references[str(data["example_id"])]
        summary, predicted_bp = _prediction_fields(data)
        return [evaluate_example(
            ref.example_id, ref.document(), summary, ref.summary,
            ref.blueprint_obj() if ref.blueprint is not None else Blueprint(()),
            predicted_bp, clients.qa, clients.nli, ctx.config.faithfulness,
        )]

    outcomes = run_records(ctx, predictions, work)
    reports = [r for o in outcomes for r in o.rows]
    for o in outcomes:
        o.rows = [r.to_json() for r in o.rows]
    status = write_outputs(args.output, outcomes)
    aggregate_path = args.aggregate or Path(args.output).with_name("aggregate.json")
    with open(aggregate_path, "w", encoding="utf-8") as fh:
        json.dump(aggregate_reports(reports), fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    return status


# -- stats ------------------------------------------------------------------


def cmd_stats(args, ctx: Context) -> int:
    records = []
    for lineno, data in load_rows(args.input):
        try:
            records.append(CorpusRecord.from_json(data))
        except RecordError as exc:
            raise FatalError(f"{args.input}:{lineno}: {exc}") from exc
    try:
        stats = dataset_stats(records)
    except EmptyCorpusError as exc:
        raise FatalError(f"empty_corpus: {exc}") from exc
    text = json.dumps(stats.to_json(), ensure_ascii=False, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="JSON or YAML run configuration")
    parser.add_argument("--workers", type=int, default=default, help="records processed concurrently")
    parser.add_argument("--seed", type=int, default=default, help="seed for random plan order")
    parser.add_argument("--mock-fixtures", default=default, help="JSON fixtures for the mock clients")
    parser.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS if suppress else 0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qablueprint", description="Question-answer blueprint pipeline.")
    _common(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _common(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("annotate", parents=[common], help="derive blueprints for a corpus")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("serialize", parents=[common], help="write training instances")
    p.add_argument("input")
    p.add_argument("--variant", choices=VARIANTS, required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_serialize)

    p = sub.add_parser("parse", parents=[common], help="recover blueprint and summary from decodes")
    p.add_argument("input")
    p.add_argument("--variant", choices=VARIANTS, required=True)
    p.add_argument("--strict", action="store_true", help="fail on malformed plans instead of flagging")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("control", parents=[common], help="edit plans and build regeneration prompts")
    p.add_argument("input", help="parsed outputs (example_id, blueprint, summary)")
    p.add_argument("--corpus", required=True, help="corpus JSONL with the source documents")
    p.add_argument("--drop", action="store_true", help="drop pairs the input cannot answer")
    p.add_argument("--q1", action="store_true", help="keep one pair per summary sentence")
    p.add_argument("--edit", help="JSON file with replacement plans")
    p.add_argument("--variant", choices=VARIANTS + ("multitask_summary", "multitask_questions"), default="e2e")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--prompts", help="where to write prompts (default <output stem>.prompts.jsonl)")
    p.set_defaults(func=cmd_control)

    p = sub.add_parser("evaluate", parents=[common], help="score predictions against references")
    p.add_argument("predictions")
    p.add_argument("references", nargs="?",
                   help="corpus JSONL; omit when predictions carry sources and reference fields")
    p.add_argument("-o", "--output", required=True, help="per-example reports (JSONL)")
    p.add_argument("--aggregate", help="corpus-level scores (default aggregate.json next to the reports)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", parents=[common], help="corpus statistics")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "control" and not (args.drop or args.q1 or args.edit):
            raise FatalError("control needs at least one of --drop, --q1, --edit")
        config = load_config(args.config) if args.config else RunConfig()
        config = config.with_overrides(workers=args.workers, seed=args.seed)
        fixtures = load_fixtures(args.mock_fixtures) if args.mock_fixtures else {}
        return args.func(args, Context(config, fixtures))
    except (FatalError, ConfigError, OSError, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
