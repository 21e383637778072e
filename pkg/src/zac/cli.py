"""``zac`` command line.

Exit codes: 0 success, 1 internal fault, 2 unreadable/invalid input,
3 bad measurement plan, 4 reports from different plans, 5 unknown
visualisation mode.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .gqm import PlanError, default_plan, load_plan
from .lexer import LexError, SourceText, dump_tokens, tokenize
from .metrics import (
    MetricsError, compare, correlate, render_comparison, render_report, run_plan,
)
from .model import PARSED_KINDS, ScanError
from .parser import dump_events, parse
from .pipeline import analyze_tree
from .store import (
    REPORT_TABLE, StoreError, dumps_canonical, export_csv, load_model, load_report,
    record_run, save_model, save_report, list_runs,
)
from .viz import MODES, VizError, extension, render

log = logging.getLogger("zac")

EXIT_OK, EXIT_FAULT, EXIT_INPUT, EXIT_PLAN, EXIT_MISMATCH, EXIT_MODE = 0, 1, 2, 3, 4, 5
REFERENCE_R = 0.93


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def parse_canvas(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"canvas must look like WIDTHxHEIGHT, got {text!r}")
    if w <= 0 or h <= 0:
        raise argparse.ArgumentTypeError("canvas dimensions must be positive")
    return w, h


def parse_ext_map(specs: list[str]) -> dict[str, tuple[str, ...]] | None:
    """``source=.c,.cpp,header=.h`` -> {"source": (".c", ".cpp"), "header": (".h",)}."""
    if not specs:
        return None
    from .model import DEFAULT_EXTENSION_MAP
    mapping = {k: list(v) for k, v in DEFAULT_EXTENSION_MAP.items()}
    for spec in specs:
        kind = None
        for item in filter(None, (s.strip() for s in spec.split(","))):
            if "=" in item:
                kind, item = item.split("=", 1)
                mapping[kind] = []
            if kind is None:
                raise CliError(f"--ext-map entry {item!r} has no KIND=", EXIT_INPUT)
            if item:
                ext = item if item.startswith(".") else "." + item
                for other in mapping.values():
                    if ext in other:
                        other.remove(ext)
                mapping[kind].append(ext)
    return {k: tuple(v) for k, v in mapping.items()}


def _write_text(text: str, out):
    if str(out) == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc.strerror}", EXIT_INPUT)


def _load_model(path):
    try:
        return load_model(path)
    except StoreError as exc:
        raise CliError(str(exc), EXIT_INPUT)


def _load_report(path):
    try:
        return load_report(path)
    except StoreError as exc:
        raise CliError(str(exc), EXIT_INPUT)


def cmd_analyze(args) -> int:
    root = Path(args.root)
    if not root.is_dir():
        raise CliError(f"cannot read source root {root}", EXIT_INPUT)
    try:
        model = analyze_tree(root, args.exclude, parse_ext_map(args.ext_map))
    except ScanError as exc:
        raise CliError(str(exc), EXIT_INPUT)
    if args.dump_tokens or args.dump_events:
        known = {m.name for m in model.macro_defs}
        for a in model.artifacts:
            if a.kind not in PARSED_KINDS:
                continue
            try:
                stream = tokenize(SourceText.from_path(root / a.path, a.path))
            except LexError as exc:
                log.warning("%s", exc)
                continue
            print(f"== {a.path}")
            if args.dump_tokens:
                for line in dump_tokens(stream):
                    print(line)
            if args.dump_events:
                for line in dump_events(parse(stream, known)):
                    print(line)
    out = args.out or f"{root.resolve().name or 'root'}.model.json"
    try:
        save_model(model, out)
    except StoreError as exc:
        raise CliError(str(exc), EXIT_INPUT)
    for d in model.diagnostics:
        log.info("%s", d)
    print(f"analyzed {len(model.artifacts)} artifacts, {len(model.diagnostics)} diagnostics"
          + ("" if out == "-" else f" -> {out}"), file=sys.stderr)
    return EXIT_OK


def cmd_measure(args) -> int:
    model = _load_model(args.model)
    try:
        plan = load_plan(args.plan) if args.plan else default_plan()
        report = run_plan(model, plan, model_path=str(args.model))
    except (PlanError, MetricsError) as exc:
        raise CliError(str(exc), EXIT_PLAN)
    out = args.out or f"{Path(args.model).name.split('.')[0]}.report.json"
    try:
        save_report(report, out)
        if args.record:
            run_id = record_run(args.record, report)
            print(f"recorded run {run_id} in {args.record}", file=sys.stderr)
    except StoreError as exc:
        raise CliError(str(exc), EXIT_INPUT)
    if out != "-":
        sys.stdout.write(render_report(report))
    return EXIT_OK


def cmd_compare(args) -> int:
    old, new = _load_report(args.old), _load_report(args.new)
    try:
        rows = compare(old, new)
    except MetricsError as exc:
        raise CliError(str(exc), EXIT_MISMATCH)
    _write_text(render_comparison(rows, args.old_label, args.new_label), args.out or "-")
    return EXIT_OK


def cmd_correlate(args) -> int:
    old, new = _load_report(args.old), _load_report(args.new)
    if set(old.metric_names()) != set(new.metric_names()):
        diff = sorted(set(old.metric_names()) ^ set(new.metric_names()))
        raise CliError(f"reports were computed with different plans: {', '.join(diff)}",
                       EXIT_MISMATCH)
    try:
        result = correlate(old, new)
    except (MetricsError, ValueError) as exc:
        raise CliError(str(exc), EXIT_INPUT)
    lines = ["Pair                Traditional  Product line"]
    lines += [f"{lbl:<18}  {t:>11}  {p:>12}" for lbl, t, p in result.pairs]
    lines.append("")
    lines.append(f"r = {result.r:+.4f}  (Pearson, {len(result.pairs)} pairs)")
    lines.append(f"* reference value for the two-version comparison: {REFERENCE_R:+.2f}")
    _write_text("\n".join(lines) + "\n", args.out or "-")
    return EXIT_OK


def cmd_viz(args) -> int:
    if args.mode not in MODES:
        raise CliError(f"unknown mode {args.mode!r}; expected one of {', '.join(MODES)}",
                       EXIT_MODE)
    model = _load_model(args.model)
    try:
        text = render(model, args.mode, args.canvas)
    except VizError as exc:
        raise CliError(str(exc), EXIT_MODE)
    out = args.out or f"{Path(args.model).name.split('.')[0]}.{args.mode}.{extension(args.mode)}"
    _write_text(text, out)
    return EXIT_OK


def cmd_export(args) -> int:
    if args.table == REPORT_TABLE:
        obj = _load_report(args.source)
    else:
        obj = _load_model(args.source)
    try:
        export_csv(obj, args.table, args.out)
    except StoreError as exc:
        raise CliError(str(exc), EXIT_INPUT)
    return EXIT_OK


def cmd_runs(args) -> int:
    try:
        runs = list_runs(args.store)
    except StoreError as exc:
        raise CliError(str(exc), EXIT_INPUT)
    for r in runs:
        print(f"{r.run_id}\t{r.timestamp}\t{r.plan_name}\t{r.model_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zac", description=(
        "Analyse C++ source trees, compute product-line metrics and render visualisations."))
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="scan, lex and parse a source tree into a model")
    a.add_argument("root")
    a.add_argument("--out", help="model file (default: <root>.model.json; '-' for stdout)")
    a.add_argument("--exclude", action="append", default=[], metavar="GLOB")
    a.add_argument("--ext-map", action="append", default=[], metavar="KIND=EXT,...")
    a.add_argument("--dump-tokens", action="store_true")
    a.add_argument("--dump-events", action="store_true")
    a.set_defaults(func=cmd_analyze)

    m = sub.add_parser("measure", help="run a measurement plan over a model")
    m.add_argument("model")
    m.add_argument("--plan", help="GQM plan file (default: bundled default-plan)")
    m.add_argument("--out", help="report file (default: <model>.report.json)")
    m.add_argument("--record", metavar="STORE", help="append the run to a JSON-lines log")
    m.set_defaults(func=cmd_measure)

    for name, func, helptext in (("compare", cmd_compare, "absolute/relative improvement table"),
                                 ("correlate", cmd_correlate, "traditional vs product-line r")):
        c = sub.add_parser(name, help=helptext)
        c.add_argument("old")
        c.add_argument("new")
        c.add_argument("--out", default="-")
        if name == "compare":
            c.add_argument("--old-label", default="Old")
            c.add_argument("--new-label", default="New")
        c.set_defaults(func=func)

    v = sub.add_parser("viz", help="render a visualisation")
    v.add_argument("model")
    v.add_argument("mode", help=" | ".join(MODES))
    v.add_argument("--out")
    v.add_argument("--canvas", type=parse_canvas, metavar="WxH")
    v.set_defaults(func=cmd_viz)

    e = sub.add_parser("export", help="export a model or report table as CSV")
    e.add_argument("source", help="model or report JSON")
    e.add_argument("--table", required=True)
    e.add_argument("--out", default="-")
    e.set_defaults(func=cmd_export)

    r = sub.add_parser("runs", help="list runs recorded in a store")
    r.add_argument("store")
    r.set_defaults(func=cmd_runs)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except CliError as exc:
        print(f"zac: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:  # noqa: BLE001 - surface as an internal fault
        log.debug("internal fault", exc_info=True)
        print(f"zac: internal error: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
