"""Command-line driver: ingest | mine | build | merge | eval | paths | serve.

Exit codes: 0 success, 2 usage error, 3 assignment/selector conflict,
1 anything else. Diagnostics go to stderr as one JSON object per failure.
The PERSITE_CONFIG environment variable supplies a default normalization
config path.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .compose import (
    CompositionError,
    evaluate_composite,
    load_composite,
    save_composite,
)
from .evaluate import (
    Assignment,
    EvalOptions,
    EvaluationError,
    RuleSet,
    Truth,
    close_assignment,
    parse_assignment_pairs,
    partially_evaluate,
    residual_paths_oracle,
)
from .graph import IngestError, ingest_crawl, load_graph, read_crawl_file, save_graph, validate
from .labels import NormalizationConfig, normalize_label, tokenize_query
from .mining import MiningError, MergeError, mine
from .program import (
    ProgramFormatError,
    build_program,
    load_program,
    render_pseudo,
    save_program,
)
from .render import render_report, render_tree

CONFIG_ENV_VAR = "PERSITE_CONFIG"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CONFLICT = 3


def _load_config(path: str | None) -> NormalizationConfig:
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if path:
        return NormalizationConfig.load(path)
    return NormalizationConfig()


def _fail(kind: str, exc: Exception) -> None:
    payload = {"error": kind, "message": str(exc)}
    variable = getattr(exc, "variable", "")
    stage = getattr(exc, "stage", None)
    if variable:
        payload["variable"] = variable
    if stage:
        payload["stage"] = stage
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


class UsageError(Exception):
    pass


def _normalized_assignment(args, config: NormalizationConfig) -> Assignment:
    pairs = []
    for pair in args.set or []:
        var, sep, raw = pair.partition("=")
        if sep:
            normalized = normalize_label(var, config)
            pairs.append(f"{normalized or var.strip()}={raw}")
        else:
            pairs.append(pair)
    try:
        assignment = parse_assignment_pairs(pairs)
    except EvaluationError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if getattr(args, "query", None):
        tokens = tokenize_query(args.query, config)
        assignment = assignment.merged(
            Assignment({token: Truth.TRUE for token in tokens})
        )
    return assignment


def _cmd_ingest(args) -> int:
    config = _load_config(args.config)
    graph = ingest_crawl(read_crawl_file(args.records), config)
    report = validate(graph)
    save_graph(graph, args.out)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    for line in report.errors:
        print(f"error: {line}", file=sys.stderr)
    for line in report.warnings:
        print(f"warning: {line}", file=sys.stderr)
    print(f"ingested {len(graph.nodes)} nodes, {len(graph.edges)} edges -> {args.out}")
    return EXIT_ERROR if report.errors else EXIT_OK


def _cmd_mine(args) -> int:
    graph = load_graph(args.graph)
    mined, report = mine(graph, max_cover=args.max_cover, lossy_report=args.lossy)
    save_graph(mined, args.out)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(
        f"mined {report.nodes_raw} -> {report.nodes_after_dedup} -> "
        f"{report.nodes_after_typing} -> {report.nodes_after_subsumption} nodes "
        f"({report.compression_percent} compression)"
    )
    return EXIT_OK


def _cmd_build(args) -> int:
    graph = load_graph(args.graph)
    program, cross_refs = build_program(graph)
    save_program(program, args.out)
    if args.cross_refs:
        with open(args.cross_refs, "w", encoding="utf-8") as fh:
            json.dump(
                [
                    {"source": c.source, "target": c.target, "label": c.label}
                    for c in cross_refs
                ],
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
    if args.pseudo:
        with open(args.pseudo, "w", encoding="utf-8") as fh:
            fh.write(render_pseudo(program))
    print(f"built program -> {args.out} ({len(cross_refs)} cross-references)")
    return EXIT_OK


def _cmd_merge(args) -> int:
    composite = load_composite(args.manifest)
    save_composite(composite, args.out)
    print(f"merged {len(composite.stages)} stage(s) -> {args.out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    config = _load_config(args.config)
    assignment = _normalized_assignment(args, config)

    if args.composite:
        composite = load_composite(args.composite)
        result = evaluate_composite(
            composite,
            assignment,
            EvalOptions(exclusive_implication=not args.no_implication),
        )
        if args.report:
            sys.stdout.write(render_report(result))
        else:
            trees = {
                name: render_tree(residual)
                for name, residual in zip(result.stage_names, result.per_stage)
            }
            payload = {
                "trees": trees,
                "inferred": result.assignment.defined(),
                "complete": result.complete,
                "report_fields": dict(result.report_fields),
            }
            print(json.dumps(payload, indent=2, sort_keys=True))
        return EXIT_OK

    program = load_program(args.program)
    if args.rules:
        assignment = close_assignment(assignment, RuleSet.load(args.rules))
    residual = partially_evaluate(
        program,
        assignment,
        EvalOptions(exclusive_implication=not args.no_implication),
    )
    payload = {
        "tree": render_tree(residual),
        "inferred": residual.inferred.defined(),
        "bindings": dict(residual.bindings),
        "complete": residual.complete,
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_paths(args) -> int:
    config = _load_config(args.config)
    assignment = _normalized_assignment(args, config)
    program = load_program(args.program)
    if args.rules:
        assignment = close_assignment(assignment, RuleSet.load(args.rules))
    paths = residual_paths_oracle(program, assignment)
    payload = [
        {"guards": list(guards), "url": url, "bindings": dict(bindings)}
        for guards, url, bindings in sorted(paths)
    ]
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .service import ServiceHandle, ServiceState, serve_forever

    config = _load_config(args.config)
    state = ServiceState.load(
        args.composite, config=config, mining_report_path=args.mining_report
    )
    serve_forever(ServiceHandle(state), args.host, args.port)
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="persite",
        description="site-schema mining and preference-driven specialization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="crawl dump (JSON lines) -> site graph")
    p.add_argument("--records", required=True, help="crawl dump path")
    p.add_argument("--config", help="normalization config JSON")
    p.add_argument("--out", required=True, help="output graph JSON")
    p.add_argument("--report", help="write the validation report here")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("mine", help="compress a site graph through all stages")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="write the mining report here")
    p.add_argument("--max-cover", type=int, default=2)
    p.add_argument(
        "--lossy",
        action="store_true",
        help="also report near-merges (never applied)",
    )
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("build", help="site graph -> branching program")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cross-refs", help="write omitted cycle edges here")
    p.add_argument("--pseudo", help="write the if/else-if debug listing here")
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("merge", help="composite manifest -> bundled composite")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_merge)

    p = sub.add_parser("eval", help="partially evaluate a program or composite")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--program")
    group.add_argument("--composite")
    p.add_argument("--set", action="append", metavar="VAR=BOOL")
    p.add_argument("--query", help="free text; each token becomes VAR=true")
    p.add_argument("--rules", help="synonymy rules JSON (single-program mode)")
    p.add_argument("--config", help="normalization config JSON")
    p.add_argument("--report", action="store_true", help="print the report text")
    p.add_argument(
        "--no-implication",
        action="store_true",
        help="do not falsify exclusive siblings of a true guard",
    )
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("paths", help="dump the brute-force path enumeration")
    p.add_argument("--program", required=True)
    p.add_argument("--set", action="append", metavar="VAR=BOOL")
    p.add_argument("--query")
    p.add_argument("--rules")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_paths)

    p = sub.add_parser("serve", help="run the HTTP evaluation service")
    p.add_argument("--composite", required=True)
    p.add_argument("--config")
    p.add_argument("--mining-report", help="mining report JSON to expose on /program/meta")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    # deep sites recurse; the default limit is too small for real crawls
    sys.setrecursionlimit(20000)
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        _fail("usage", exc)
        return EXIT_USAGE
    except EvaluationError as exc:
        _fail(type(exc).__name__, exc)
        return EXIT_CONFLICT
    except (
        IngestError,
        MergeError,
        MiningError,
        CompositionError,
        ProgramFormatError,
        ValueError,
    ) as exc:
        _fail(type(exc).__name__, exc)
        return EXIT_ERROR
    except OSError as exc:
        _fail("OSError", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
