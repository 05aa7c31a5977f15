"""Command-line interface.

Exit codes: 0 success, 1 bad input (syntax, schema or semantic errors),
2 inconsistent state or model not in the language, 3 step cap reached.
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib.resources import files
from pathlib import Path

from .graph import GraphError
from .modelio import (
    DSLSyntaxError,
    emit_trace,
    load_grammar,
    load_model,
    serialize_model,
    serialize_rule,
)
from .shortcut import STRATEGIES, derive_repair_catalog, strategy_name
from .sync import InconsistentState, StepCapExceeded, Synchronizer
from .tgg import NotInLanguage, SemanticError, is_member, membership_by_translation

PATH_VAR = "TGGSYNC_PATH"

EXIT_OK, EXIT_INPUT, EXIT_INCONSISTENT, EXIT_CAP = 0, 1, 2, 3


def search_path():
    dirs = [Path(p) for p in os.environ.get(PATH_VAR, "").split(os.pathsep) if p]
    return dirs + [Path(str(files("tggsync") / "data"))]


def resolve(name, suffix=""):
    """A file path as given, or looked up on the search path."""
    p = Path(name)
    if p.exists():
        return p
    for d in search_path():
        for cand in (d / name, d / f"{name}{suffix}"):
            if cand.exists():
                return cand
    raise FileNotFoundError(f"{name} not found (searched {', '.join(str(d) for d in search_path())})")


def _strategies(s):
    return STRATEGIES if s == "both" else (strategy_name(s),)


def _write(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_derive(args):
    tgg = load_grammar(resolve(args.grammar, ".tgg"))
    catalog = derive_repair_catalog(tgg, _strategies(args.strategy))
    parts = []
    for r in tgg.rules:
        parts.append(serialize_rule(tgg.source_rule(r), "source"))
        parts.append(serialize_rule(tgg.forward(r), "forward"))
        parts.append(serialize_rule(tgg.backward(r), "backward"))
        parts.append(serialize_rule(tgg.consistency(r), "consistency"))
    for e in catalog.entries:
        parts.append(serialize_rule(e.shortcut, "shortcut"))
        parts.append(serialize_rule(e.source_rule, "shortcut-source"))
        parts.append(serialize_rule(e.repair, "repair"))
    _write("\n".join(parts), args.out)
    print(f"# {len(tgg.rules)} rules, {len(catalog)} short-cut/repair rules", file=sys.stderr)
    for e in catalog.entries:
        print(f"# {e.repair.name} ({'/'.join(e.strategies)})", file=sys.stderr)
    return EXIT_OK


def cmd_translate(args):
    tgg = load_grammar(resolve(args.grammar, ".tgg"))
    model = load_model(resolve(args.model, ".trim"), tgg.type_graph)
    sync = Synchronizer.translate(tgg, model.source, seed=args.seed)
    if args.trace:
        Path(args.trace).write_text(emit_trace(sync.translation_trace), encoding="utf-8")
    _write(serialize_model(sync.result()), args.out)
    return EXIT_OK


def cmd_sync(args):
    tgg = load_grammar(resolve(args.grammar, ".tgg"))
    model = load_model(resolve(args.model, ".trim"), tgg.type_graph)
    script = resolve(args.edit, ".edit").read_text(encoding="utf-8")
    catalog = derive_repair_catalog(tgg, _strategies(args.strategy))
    sync = Synchronizer.from_triple(tgg, model, catalog, seed=args.seed)
    sync.edit(script)
    trace = None
    try:
        trace = sync.synchronize(args.mode, args.step_cap)
    finally:
        t = trace
        if t is None:
            t = getattr(sys.exc_info()[1], "trace", None)
        if args.trace and t is not None:
            Path(args.trace).write_text(emit_trace(t), encoding="utf-8")
    _write(serialize_model(sync.result()), args.out)
    tot = trace.totals()
    print(
        f"# {tot['steps']} steps ({tot['translateSteps']} translate, {tot['repairSteps']} repair, "
        f"{tot['revokeSteps']} revoke), recreated {tot['createdElements']}, deleted {tot['deletedElements']}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_bench(args):
    from .bench import SCENARIOS, run_matrix

    modes = ("legacy", "repair") if args.mode == "both" else (args.mode,)
    report = run_matrix(tuple(args.n), tuple(args.scenarios or SCENARIOS), modes, args.repeats, args.seed)
    _write(report.table(times=not args.no_times), args.out)
    if args.trace:
        d = Path(args.trace)
        d.mkdir(parents=True, exist_ok=True)
        for r in report.rows:
            name = f"{r.scenario}-n{r.model.split('=')[1]}-{r.mode}.trace"
            (d / name).write_text(emit_trace(r.trace), encoding="utf-8")
    return EXIT_OK


def cmd_check(args):
    tgg = load_grammar(resolve(args.grammar, ".tgg"))
    model = load_model(resolve(args.model, ".trim"), tgg.type_graph)
    if len(model.corr) or len(model.target):
        ok = is_member(tgg, model)
    else:
        try:
            membership_by_translation(tgg, model.source)
            ok = True
        except NotInLanguage:
            ok = False
    print("member" if ok else "not a member")
    return EXIT_OK if ok else EXIT_INCONSISTENT


def build_parser():
    ap = argparse.ArgumentParser(prog="tggsync", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        p.add_argument("--grammar", required=True, help=f"grammar file or name on ${PATH_VAR}")
        if model:
            p.add_argument("--model", required=True)
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--seed", type=int, default=None, help="choose among matches pseudo-randomly")

    p = sub.add_parser("derive", help="dump operational, short-cut and repair rules")
    common(p, model=False)
    p.add_argument("--strategy", choices=["min", "max", "both"], default="both")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("translate", help="batch forward translation of a model's source graph")
    common(p)
    p.add_argument("--trace")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("sync", help="apply an edit script and synchronize")
    common(p)
    p.add_argument("--edit", required=True)
    p.add_argument("--mode", choices=["repair", "legacy", "strict"], default="repair")
    p.add_argument("--strategy", choices=["min", "max", "both"], default="both")
    p.add_argument("--trace")
    p.add_argument("--step-cap", type=int, default=None)
    p.set_defaults(func=cmd_sync)

    p = sub.add_parser("bench", help="run the scenario matrix")
    p.add_argument("--n", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--scenarios", nargs="+", choices=["scen1", "scen2", "scen3", "scen4"])
    p.add_argument("--mode", choices=["repair", "legacy", "both"], default="both")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-times", action="store_true", help="omit wall times (reproducible output)")
    p.add_argument("--trace", help="directory for per-row traces")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("check", help="decide membership in the grammar's language")
    common(p)
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DSLSyntaxError, SemanticError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StepCapExceeded as exc:
        print(f"step cap reached: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (InconsistentState, NotInLanguage) as exc:
        print(f"inconsistent: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except GraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
