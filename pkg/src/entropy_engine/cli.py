"""Command-line front end: run verification pipelines, validate instance files."""

import argparse
import json
import os
import sys

from .constants import graph_from_json
from .errors import EngineError, InputFormatError
from .pipeline import load_pipeline_spec, run_pipeline
from .relation import relation_from_json
from .simple import model_from_spec

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_INPUT = 2


def _detect_kind(doc):
    if "stages" in doc or "schema" in doc:
        return "pipeline"
    if "type" in doc:
        return "model"
    if "spaces" in doc and doc.get("spaces") and "entropy" in doc["spaces"][0]:
        return "graph"
    if "spaces" in doc:
        return "relation"
    raise InputFormatError("cannot tell what kind of instance this file is")


def cmd_validate(args):
    try:
        with open(args.file) as fh:
            doc = json.load(fh)
    except OSError as exc:
        print("cannot read %s: %s" % (args.file, exc), file=sys.stderr)
        return EXIT_INPUT
    except json.JSONDecodeError as exc:
        print(
            "%s: parse error at line %d column %d: %s"
            % (args.file, exc.lineno, exc.colno, exc.msg),
            file=sys.stderr,
        )
        return EXIT_INPUT
    try:
        kind = _detect_kind(doc)
        if kind == "pipeline":
            load_pipeline_spec(args.file)
        elif kind == "model":
            model_from_spec(doc)
        elif kind == "graph":
            graph_from_json(doc)
        else:
            relation_from_json(doc)
    except EngineError as exc:
        print("%s: invalid %s: %s" % (args.file, kind, exc), file=sys.stderr)
        return EXIT_INPUT
    print("%s: valid %s instance" % (args.file, kind))
    return EXIT_OK


def cmd_run(args):
    try:
        spec = load_pipeline_spec(args.spec)
    except OSError as exc:
        print("cannot read %s: %s" % (args.spec, exc), file=sys.stderr)
        return EXIT_INPUT
    except json.JSONDecodeError as exc:
        print(
            "%s: parse error at line %d column %d: %s"
            % (args.spec, exc.lineno, exc.colno, exc.msg),
            file=sys.stderr,
        )
        return EXIT_INPUT
    except EngineError as exc:
        print("%s: %s" % (args.spec, exc), file=sys.stderr)
        return EXIT_INPUT
    out_dir = args.out or os.environ.get("ENTROPY_ENGINE_OUT") or "out"
    only = set(args.stage) if args.stage else None
    try:
        result = run_pipeline(spec, out_dir, seed=args.seed, only_stages=only)
    except (EngineError, OSError) as exc:
        print("pipeline failed: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    for path in result.files:
        print("wrote %s" % path)
    for violation in result.report["violations"]:
        print("violation: %s" % violation)
    return EXIT_VIOLATIONS if result.exit_code else EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="entropy-engine",
        description="Verify accessibility relations, build entropy tables, "
                    "and calibrate entropy constants from instance files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a pipeline spec")
    run_p.add_argument("spec", help="pipeline spec JSON file")
    run_p.add_argument("--out", help="output directory (default: ./out)")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the spec's random seed")
    run_p.add_argument("--stage", action="append",
                       help="run only the named stage (repeatable)")
    run_p.set_defaults(func=cmd_run)

    val_p = sub.add_parser("validate", help="parse and lint an instance file")
    val_p.add_argument("file")
    val_p.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    return args.func(args)


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
