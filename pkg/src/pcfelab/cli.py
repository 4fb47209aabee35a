"""Command-line front end.

Exit codes: 0 when no check is Violated, 2 when at least one is, 1 on any
usage, config or execution error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

from . import __version__, checks
from .config import build_candidate, build_measure, build_spec, load_config
from .errors import PcfeError
from .report import VIOLATED, plain, table_to_csv, write_atomic

EXIT_OK, EXIT_ERROR, EXIT_VIOLATED = 0, 1, 2
OUTPUT_ENV = "PCFELAB_OUTPUT_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as "Violated"
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def exit_code(verdicts, errors: int = 0) -> int:
    if errors:
        return EXIT_ERROR
    return EXIT_VIOLATED if any(v == VIOLATED for v in verdicts) else EXIT_OK


def _context(measure, candidate, numerics, base_dir=None) -> checks.Context:
    return checks.Context(
        measure=None if measure is None else build_measure(measure, base_dir),
        candidate=None if candidate is None else build_candidate(candidate, base_dir),
        spec=build_spec(numerics),
        resolved=plain({"measure": measure, "candidate": candidate, "numerics": numerics or {}}),
        base_dir=base_dir,
    )


def _write_tables(outdir: str, stem: str, tables: dict) -> list:
    written = []
    for name, cols in tables.items():
        fname = f"{stem}-{name}.csv"
        write_atomic(os.path.join(outdir, fname), table_to_csv(cols))
        written.append(fname)
    return written


def cmd_run(args) -> int:
    cfg = load_config(args.config, checks.known_names())
    outdir = os.environ.get(OUTPUT_ENV) or (
        cfg.output_dir if os.path.isabs(cfg.output_dir) else os.path.join(cfg.base_dir, cfg.output_dir))
    ctx = _context(cfg.measure, cfg.candidate, cfg.numerics, cfg.base_dir)

    def one(i_entry):
        i, entry = i_entry
        stem = f"{i + 1:02d}-{entry.name}"
        try:
            out = checks.run_check(entry.name, ctx, entry.params)
        except (PcfeError, ValueError, ArithmeticError) as e:
            return stem, entry, None, f"{type(e).__name__}: {e}"
        return stem, entry, out, None

    jobs = list(enumerate(cfg.checks))
    if args.workers > 1:
        with ThreadPoolExecutor(args.workers) as ex:
            results = list(ex.map(one, jobs))
    else:
        results = [one(j) for j in jobs]

    index = {"schema_version": cfg.schema_version, "config": cfg.raw, "reports": []}
    errors = 0
    verdicts = []
    for stem, entry, out, err in results:
        item = {"check": entry.name, "line": entry.line}
        if err is not None:
            errors += 1
            item.update(error=err)
            print(f"{entry.name}: ERROR {err}", file=sys.stderr)
        else:
            fname = f"{stem}.json"
            write_atomic(os.path.join(outdir, fname), out.report.to_json())
            item.update(report=fname, verdict=out.report.verdict)
            if cfg.emit_csv and out.tables:
                item["csv"] = _write_tables(outdir, stem, out.tables)
            verdicts.append(out.report.verdict)
            print(f"{entry.name}: {out.report.verdict}  {out.summary}")
        index["reports"].append(item)
    code = exit_code(verdicts, errors)
    index["exit_code"] = code
    write_atomic(os.path.join(outdir, "index.json"), json.dumps(plain(index), sort_keys=True, indent=2) + "\n")
    return code


def cmd_check(args) -> int:
    d = checks.get(args.command)
    params = {p.name: getattr(args, "p_" + p.name) for p in d.params}
    ctx = _context(args.measure, args.f, {k: v for k, v in (("abs_tol", args.quad_abs_tol),
                                                             ("rel_tol", args.quad_rel_tol)) if v is not None})
    out = checks.run_check(args.command, ctx, {k: v for k, v in params.items() if v is not None})
    rep = out.report
    if args.json:
        sys.stdout.write(rep.to_json())
    else:
        line = f"{args.command}: {rep.verdict}"
        if rep.classification:
            line += f" [{rep.classification}]"
        print(f"{line}  {out.summary}")
    if args.out:
        write_atomic(os.path.join(args.out, f"{args.command}.json"), rep.to_json())
    if args.emit_csv:
        tables = out.tables
        if len(tables) == 1:
            write_atomic(args.emit_csv, table_to_csv(next(iter(tables.values()))))
        else:
            base, ext = os.path.splitext(args.emit_csv)
            for name, cols in tables.items():
                write_atomic(f"{base}-{name}{ext or '.csv'}", table_to_csv(cols))
    return exit_code([rep.verdict])


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pcfelab", description="Numerical checks for probabilistic Cauchy functional equations.")
    ap.add_argument("--version", action="version", version=f"pcfelab {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    r = sub.add_parser("run", help="run every check listed in a YAML config")
    r.add_argument("config")
    r.add_argument("--workers", type=int, default=1, help="checks run concurrently (results unchanged)")
    r.set_defaults(func=cmd_run)

    names = sorted(checks.REGISTRY) + sorted(checks.ALIASES)
    for name in names:
        d = checks.get(name)
        s = sub.add_parser(name, help=d.help)
        if "measure" in d.needs or name == "eliminate-second-moment":
            s.add_argument("--measure", required="measure" in d.needs,
                           help="e.g. exponential:1, gaussian:1,1, grid:file.csv:NonNegativeHalfLine")
        else:
            s.set_defaults(measure=None)
        if "candidate" in d.needs:
            s.add_argument("--f", required=True, help="e.g. linear:2, power:3, lemma_piecewise:1,1,1,1,2")
        else:
            s.set_defaults(f=None)
        for p in d.params:
            s.add_argument(p.flag, dest="p_" + p.name, required=p.default is checks.REQUIRED,
                           help=p.help or None)
        s.add_argument("--quad-abs-tol", type=float, help="quadrature absolute tolerance")
        s.add_argument("--quad-rel-tol", type=float, help="quadrature relative tolerance")
        s.add_argument("--json", action="store_true", help="print the JSON report")
        s.add_argument("--out", help="directory for the JSON report")
        s.add_argument("--emit-csv", metavar="PATH", help="write grid/profile tables as CSV")
        s.set_defaults(func=cmd_check)
    return ap


def main(argv: Optional[list] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (PcfeError, ValueError, ArithmeticError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
