"""Command-line surface: eval, encode, compare, roundtrip, graph-dot.

Exit codes: 0 success (budget exhaustion is still 0, recorded in the
report), 1 parse error, 2 validation error, 3 failed theorem check in
compare or roundtrip mode.
"""

from __future__ import annotations

import argparse
import random
import sys
import time
from pathlib import Path

from . import crs, encode, graphs, lam, scott, workbench

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_VALIDATION = 2
EXIT_CHECK_FAILED = 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_input(path_str: str):
    """Returns ("lam", term) or ("trs", CrsFile) based on the extension."""
    path = Path(path_str)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read {path}: {exc}")
    if path.suffix == ".lam":
        try:
            return "lam", workbench.load_lambda_file(path)
        except lam.LamParseError as exc:
            raise CliError(EXIT_PARSE, f"{path}: {exc}")
    if path.suffix == ".trs":
        try:
            return "trs", crs.parse_system(text)
        except crs.CrsParseError as exc:
            raise CliError(EXIT_PARSE, f"{path}: {exc}")
        except crs.CrsError as exc:
            raise CliError(EXIT_VALIDATION, f"{path}: {exc}")
    raise CliError(EXIT_PARSE, f"{path}: unknown input extension (want .lam or .trs)")


def _input_stanza(path_str: str) -> dict:
    data = Path(path_str).read_bytes()
    return {"path": path_str, "sha256": workbench.digest(data)}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_report(report: dict, out: str | None) -> None:
    _emit(workbench.render_report(report), out)


def _maybe_dot(graph, dest: str | None) -> None:
    if dest and graph is not None:
        Path(dest).write_text(graphs.to_dot(graph))


def _rng(args):
    if args.policy == "random":
        return random.Random(args.seed)
    return None


def cmd_eval(args) -> int:
    kind, loaded = _load_input(args.input)
    start = time.perf_counter()
    final_graph = None
    if args.engine in ("lambda-cbv", "lambda-cbn"):
        if kind != "lam":
            raise CliError(EXIT_VALIDATION, "lambda engines need a .lam input")
        strategy = "cbv" if args.engine == "lambda-cbv" else "cbn"
        rng = _rng(args) if strategy == "cbv" else None
        out = lam.reduce(loaded, strategy, args.budget, rng=rng)
        run = workbench.lam_run_dict(args.engine, out)
    elif args.engine == "crs":
        if kind == "lam":
            image = encode.encode_cbv(loaded)
            system, term = image.system, image.term
        else:
            if loaded.term is None:
                raise CliError(EXIT_VALIDATION, "no term declaration in input")
            system, term = loaded.system, loaded.term
        out = crs.reduce(system, term, args.budget, rng=_rng(args))
        run = workbench.crs_run_dict(args.engine, out)
    elif args.engine == "graph":
        if kind == "lam":
            image = encode.encode_cbv(loaded)
            system, term = image.system, image.term
        else:
            if loaded.term is None:
                raise CliError(EXIT_VALIDATION, "no term declaration in input")
            system, term = loaded.system, loaded.term
        g = graphs.term_to_graph(term)
        grules = graphs.system_to_graph_rules(system)
        out = graphs.graph_reduce(g, grules, system.signature, args.budget,
                                  rng=_rng(args))
        run = workbench.graph_run_dict(args.engine, out)
        final_graph = out.graph
    else:
        raise CliError(EXIT_VALIDATION, f"unknown engine {args.engine!r}")
    report = {"schema": workbench.SCHEMA, "command": "eval",
              "input": _input_stanza(args.input), "budget": args.budget,
              "policy": args.policy,
              "runs": [run],
              "timing": {"total": time.perf_counter() - start}}
    _emit_report(report, args.out)
    _maybe_dot(final_graph, args.emit_dot)
    return EXIT_OK


def cmd_encode(args) -> int:
    kind, loaded = _load_input(args.input)
    if args.to in ("crs", "crs-cbn"):
        if kind != "lam":
            raise CliError(EXIT_VALIDATION, "encoding to crs needs a .lam input")
        try:
            image = (encode.encode_cbv(loaded) if args.to == "crs"
                     else encode.encode_cbn(loaded))
        except encode.OpenTermError as exc:
            raise CliError(EXIT_VALIDATION, str(exc))
        _emit(encode.system_with_table(image), args.out)
        return EXIT_OK
    if args.to == "lambda":
        if kind != "trs":
            raise CliError(EXIT_VALIDATION, "encoding to lambda needs a .trs input")
        if loaded.term is None:
            raise CliError(EXIT_VALIDATION, "no term declaration in input")
        ctx = scott.ScottContext(loaded.system)
        _emit(lam.to_str(scott.term_to_lambda(ctx, loaded.term)) + "\n", args.out)
        return EXIT_OK
    raise CliError(EXIT_VALIDATION, f"unknown encoding target {args.to!r}")


def cmd_compare(args) -> int:
    kind, loaded = _load_input(args.input)
    if kind != "lam":
        raise CliError(EXIT_VALIDATION, "compare needs a .lam input")
    try:
        report = workbench.compare_engines(loaded, args.budget)
    except encode.OpenTermError as exc:
        raise CliError(EXIT_VALIDATION, str(exc))
    report["input"] = _input_stanza(args.input)
    _emit_report(report, args.out)
    _maybe_dot(report.get("_final_graph"), args.emit_dot)
    return EXIT_OK if workbench.report_ok(report) else EXIT_CHECK_FAILED


def cmd_roundtrip(args) -> int:
    kind, loaded = _load_input(args.input)
    if kind != "trs":
        raise CliError(EXIT_VALIDATION, "roundtrip needs a .trs input")
    if loaded.term is None:
        raise CliError(EXIT_VALIDATION, "no term declaration in input")
    report = workbench.roundtrip_check(loaded.system, loaded.term, args.budget)
    report["input"] = _input_stanza(args.input)
    _emit_report(report, args.out)
    _maybe_dot(report.get("_final_graph"), args.emit_dot)
    return EXIT_OK if workbench.report_ok(report) else EXIT_CHECK_FAILED


def cmd_graph_dot(args) -> int:
    kind, loaded = _load_input(args.input)
    if kind == "lam":
        image = encode.encode_cbv(loaded)
        term = image.term
    else:
        if loaded.term is None:
            raise CliError(EXIT_VALIDATION, "no term declaration in input")
        term = loaded.term
    g = graphs.term_to_graph(term)
    _emit(graphs.to_dot(g), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="normbench",
        description="normalization workbench: lambda-calculus, constructor "
                    "rewriting and term-graph engines with exact step counts")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, engines=False):
        p.add_argument("input", help="input file (.lam or .trs)")
        p.add_argument("--budget", type=int, default=workbench.DEFAULT_BUDGET)
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--emit-dot", dest="emit_dot",
                       help="write the final graph in DOT format")
        if engines:
            p.add_argument("--engine",
                           choices=["lambda-cbv", "lambda-cbn", "crs", "graph"],
                           default="lambda-cbv")
            p.add_argument("--policy", choices=["leftmost", "random"],
                           default="leftmost", help="redex-choice policy")
            p.add_argument("--seed", type=int, default=0)

    p_eval = sub.add_parser("eval", help="run one engine")
    common(p_eval, engines=True)
    p_eval.set_defaults(func=cmd_eval)

    p_enc = sub.add_parser("encode", help="translate between the formalisms")
    p_enc.add_argument("input")
    p_enc.add_argument("--to", choices=["crs", "crs-cbn", "lambda"], required=True)
    p_enc.add_argument("--out")
    p_enc.set_defaults(func=cmd_encode)

    p_cmp = sub.add_parser("compare", help="all engines plus the theorem checks")
    common(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_rt = sub.add_parser("roundtrip", help="rewrite system through the "
                                            "lambda and graph engines")
    common(p_rt)
    p_rt.set_defaults(func=cmd_roundtrip)

    p_dot = sub.add_parser("graph-dot", help="DOT export of the input's graph")
    p_dot.add_argument("input")
    p_dot.add_argument("--out")
    p_dot.set_defaults(func=cmd_graph_dot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"normbench: {exc}", file=sys.stderr)
        return exc.code
    except (lam.LamParseError, crs.CrsParseError) as exc:
        print(f"normbench: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (crs.CrsError, encode.EncodeError, scott.ScottError,
            graphs.GraphError) as exc:
        print(f"normbench: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
