"""Command-line entry point: ``hopi <command> [flags] file...``.

Exit codes: 0 success or equivalent-to-depth, 1 parse or validation error,
2 type error or mismatched environments, 3 distinguished (bisim) or
undefined (merge), 4 equivalent but truncated.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .grammar import Document, ParseError, parse_document, show, show_document, show_type
from .syntax import ValidationError, validate_config

EXIT_OK, EXIT_PARSE, EXIT_TYPE, EXIT_NEGATIVE, EXIT_TRUNCATED = 0, 1, 2, 3, 4


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load(path: str) -> Document:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _Fail(EXIT_PARSE, f"{path}: {exc.strerror}") from None
    try:
        doc = parse_document(text)
        validate_config(doc.term)
    except ParseError as exc:
        raise _Fail(EXIT_PARSE, f"{path}: {exc}") from None
    except ValidationError as exc:
        raise _Fail(EXIT_PARSE, f"{path}: {exc}") from None
    return doc


def _typed(path: str) -> Document:
    from .typecheck import Env, TypeCheckError, check_config

    doc = _load(path)
    try:
        check_config(Env.of(doc.delta, doc.theta), doc.term)
    except (TypeCheckError, ValueError) as exc:
        raise _Fail(EXIT_TYPE, f"{path}: type error {exc}") from None
    return doc


def _env_lines(doc: Document) -> List[str]:
    lines = [f"chan {a} : {show_type(t)}" for a, t in sorted(doc.delta.items())]
    lines += [f"trigger {k} : {show_type(t)}" for k, t in sorted(doc.theta.items())]
    return lines


def cmd_check(args) -> int:
    doc = _typed(args.file)
    for line in _env_lines(doc):
        print(line)
    print(f"ok: {show(doc.term)}")
    return EXIT_OK


def cmd_reduce(args) -> int:
    from .reduction import format_trace, reduce_multi

    doc = _typed(args.file)
    reach = reduce_multi(doc.term, args.max_steps, args.max_states)
    if args.trace:
        steps = [reach.parent[s] for s in reach.states if reach.parent[s] is not None]
        if args.json:
            print(format_trace(steps, as_json=True))
        else:
            out = format_trace(steps)
            if out:
                print(out)
            print(f"frontier: {str(reach.frontier).lower()}")
    elif args.json:
        print(json.dumps({"states": [show(s) for s in reach.states], "frontier": reach.frontier}, indent=2))
    else:
        for s in reach.states:
            print(show(s))
        print(f"frontier: {str(reach.frontier).lower()}")
    return EXIT_OK


def cmd_lts(args) -> int:
    from .lts import TypedNode, build_lts

    doc = _typed(args.file)
    graph = build_lts(TypedNode.make(doc.delta, doc.theta, doc.term), args.depth, args.max_nodes)
    if args.json:
        print(graph.dumps())
        return EXIT_OK
    ids = {n: i for i, n in enumerate(graph.nodes)}
    for n in graph.nodes:
        print(f"[{ids[n]}] {show(n.config)}")
    for s, lab, d in graph.edges:
        print(f"[{ids[s]}] --{lab}--> [{ids[d]}]")
    print(f"truncated: {str(graph.truncated).lower()}")
    return EXIT_OK


def cmd_bisim(args) -> int:
    from .bisim import Distinguished, MismatchedEnvironments, bisim_check, explain_witness
    from .lts import TypedNode

    p, q = _typed(args.left), _typed(args.right)
    try:
        verdict = bisim_check(
            TypedNode.make(p.delta, p.theta, p.term),
            TypedNode.make(q.delta, q.theta, q.term),
            args.depth,
            args.tau_budget,
        )
    except MismatchedEnvironments:
        raise _Fail(EXIT_TYPE, "the two files declare different environments") from None
    if args.json:
        print(json.dumps(verdict.to_json(), indent=2))
    elif isinstance(verdict, Distinguished):
        print(f"distinguished after {verdict.depth} round(s)")
        print(explain_witness(verdict.witness))
    else:
        qual = " (truncated)" if verdict.truncated else ""
        print(f"equivalent to depth {verdict.depth}{qual}")
    if isinstance(verdict, Distinguished):
        return EXIT_NEGATIVE
    return EXIT_TRUNCATED if verdict.truncated else EXIT_OK


def cmd_merge(args) -> int:
    from .merge import Undefined, merge

    doc = _load(args.file)
    result = merge(doc.term)
    if isinstance(result, Undefined):
        print(str(result))
        return EXIT_NEGATIVE
    print(show(result))
    return EXIT_OK


def cmd_translate(args) -> int:
    from .translation import translate_config, translate_env

    doc = _typed(args.file)
    out = translate_config(doc.theta, doc.term)
    print(show_document({**doc.delta, **translate_env(doc.theta)}, {}, out))
    return EXIT_OK


def _label(doc: Document, text: str):
    from .lts import parse_label
    from .translation import canonical_label

    try:
        lab = parse_label(text)
    except ValueError as exc:
        raise _Fail(EXIT_PARSE, str(exc)) from None
    if not lab.visible:
        raise _Fail(EXIT_PARSE, "label must be visible")
    if lab.subject not in doc.delta and lab.subject not in doc.theta:
        raise _Fail(EXIT_TYPE, f"label subject {lab.subject} is not declared")
    return canonical_label(doc.delta, doc.theta, lab)


def cmd_testctx(args) -> int:
    from .translation import context_names, testing_context

    doc = _typed(args.file)
    lab = _label(doc, args.label)
    succ, dead = context_names(doc.delta, doc.theta, [lab.fresh] if lab.fresh else [])
    print(show(testing_context(doc.delta, doc.theta, lab, succ, dead)))
    return EXIT_OK


def cmd_probe(args) -> int:
    from .translation import probe_label

    doc = _typed(args.file)
    lab = _label(doc, args.label)
    result = probe_label(doc.delta, doc.theta, doc.term, lab, args.max_steps, args.max_states, args.tau_budget)
    print(result.dumps())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hopi", description="Higher-order pi-calculus workbench")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse, validate and type-check")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reduce", help="explore reductions")
    p.add_argument("file")
    p.add_argument("--max-steps", type=int, default=10)
    p.add_argument("--max-states", type=int, default=10_000)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("lts", help="build the labelled transition system")
    p.add_argument("file")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--max-nodes", type=int, default=10_000)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_lts)

    p = sub.add_parser("bisim", help="bounded weak bisimulation check")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--tau-budget", type=int, default=200)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bisim)

    p = sub.add_parser("merge", help="merge resources into trigger calls")
    p.add_argument("file")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("translate", help="translate triggers into plain HOpi")
    p.add_argument("file")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("testctx", help="print the testing context for a label")
    p.add_argument("file")
    p.add_argument("--label", required=True)
    p.set_defaults(func=cmd_testctx)

    p = sub.add_parser("probe", help="run a testing context against the translation")
    p.add_argument("file")
    p.add_argument("--label", required=True)
    p.add_argument("--max-steps", type=int, default=8)
    p.add_argument("--max-states", type=int, default=5000)
    p.add_argument("--tau-budget", type=int, default=200)
    p.set_defaults(func=cmd_probe)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
