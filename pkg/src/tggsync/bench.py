"""Synthetic models, evaluation scenarios and refactoring runs."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache
from importlib.resources import files

from .graph import Graph
from .modelio import EditOp, parse_grammar
from .shortcut import derive_repair_catalog
from .sync import Synchronizer

SCENARIOS = ("scen1", "scen2", "scen3", "scen4")
REFACTORINGS = ("move-field", "push-up-field", "extract-class")
FANOUT = 5


@lru_cache(maxsize=None)
def bundled(name):
    """A bundled grammar (``docgen`` or ``eval``) with its repair catalog."""
    text = (files("tggsync") / "data" / f"{name}.tgg").read_text(encoding="utf-8")
    tgg = parse_grammar(text)
    return tgg, derive_repair_catalog(tgg)


# --------------------------------------------------------------------------
# synthetic models


def gen_synthetic(n, flavor="docgen", members=1):
    """Package tree of depth ``n``: inner packages hold five sub-packages,
    leaf packages hold five classes.

    The ``eval`` flavor adds a model root and gives each class ``members``
    methods (each with one parameter) and ``members`` fields."""
    if not isinstance(n, int) or n < 1:
        raise ValueError("n must be a positive integer")
    g = Graph()
    g.add_node("p", "Package", {"name": "p"})
    if flavor == "eval":
        g.add_node("model", "Model", {"name": "model"})
        g.add_edge("e.p", "packages", "model", "p")
    elif flavor != "docgen":
        raise ValueError(f"unknown flavor {flavor!r}")
    level = ["p"]
    for _ in range(n - 1):
        nxt = []
        for parent in level:
            for i in range(1, FANOUT + 1):
                child = f"{parent}.{i}"
                g.add_node(child, "Package", {"name": child})
                g.add_edge(f"e.{child}", "subpackages", parent, child)
                nxt.append(child)
        level = nxt
    for pkg in level:
        for i in range(1, FANOUT + 1):
            c = f"{pkg}.c{i}"
            g.add_node(c, "Class", {"name": c})
            g.add_edge(f"e.{c}", "classes", pkg, c)
            if flavor == "eval":
                for k in range(1, members + 1):
                    m, a, f = f"{c}.m{k}", f"{c}.m{k}.a", f"{c}.f{k}"
                    g.add_node(m, "MethodDecl", {"name": m})
                    g.add_edge(f"e.{m}", "methods", c, m)
                    g.add_node(a, "Parameter", {"name": a})
                    g.add_edge(f"e.{a}", "params", m, a)
                    g.add_node(f, "FieldDecl", {"name": f})
                    g.add_edge(f"e.{f}", "fields", c, f)
    return g


def leaf_packages(g):
    return [n for n in g.nodes if g.nodes[n].type == "Package" and not any(
        g.edges[e].type == "subpackages" for e in g.out_edges(n))]


def _classes_of(g, pkg):
    return sorted(g.edges[e].trg for e in g.out_edges(pkg) if g.edges[e].type == "classes")


def subtree(g, root):
    """Source elements reachable from ``root`` (including the connecting
    edges below it)."""
    out, todo = {root}, [root]
    while todo:
        for e in g.out_edges(todo.pop()):
            out.add(e)
            t = g.edges[e].trg
            if t not in out:
                out.add(t)
                todo.append(t)
    return out


# --------------------------------------------------------------------------
# scenarios


@dataclass
class ScenarioSpec:
    name: str
    n: int
    mode: str = "repair"

    @property
    def flavor(self):
        return "eval" if self.name == "scen4" else "docgen"

    @property
    def grammar(self):
        return self.flavor


def scenario_edit(name, source):
    """Edit operations of a scenario and the root of the moved subtree."""
    leaves = leaf_packages(source)
    last = leaves[-1]
    others = [p for p in leaves if p != last]
    if name == "scen1":
        return [
            EditOp("add-node", "nroot", "Package", attrs={"name": "nroot"}),
            EditOp("add-edge", "e.nroot", "subpackages", "nroot", "p"),
        ], "p"
    if name == "scen2":
        if not others:
            # a single package: relocate it below a fresh parent
            return [
                EditOp("add-node", "npkg", "Package", attrs={"name": "npkg"}),
                EditOp("add-edge", f"e2.{last}", "subpackages", "npkg", last),
            ], last
        return [
            EditOp("delete-edge", f"e.{last}"),
            EditOp("add-edge", f"e2.{last}", "subpackages", others[0], last),
        ], last
    if name == "scen3":
        c = _classes_of(source, last)[0]
        ops = []
        target = others[0] if others else "npkg"
        if not others:
            ops += [
                EditOp("add-node", "npkg", "Package", attrs={"name": "npkg"}),
                EditOp("add-edge", "e.npkg", "subpackages", last, "npkg"),
            ]
        ops += [EditOp("delete-edge", f"e.{c}"), EditOp("add-edge", f"e2.{c}", "classes", target, c)]
        return ops, c
    if name == "scen4":
        c1, c2 = _classes_of(source, last)[:2]
        m = f"{c1}.m1"
        return [EditOp("delete-edge", f"e.{m}"), EditOp("add-edge", f"e2.{m}", "methods", c2, m)], m
    raise ValueError(f"unknown scenario {name!r}")


@dataclass
class BenchRow:
    model: str
    scenario: str
    mode: str
    wall_time_ms: float
    created_elements: int
    footprint: int
    totals: dict = field(default_factory=dict)
    trace: object = None

    def as_tuple(self):
        return (self.model, self.scenario, self.mode, self.created_elements, self.footprint)


def footprint(sync: Synchronizer, elems):
    """Correspondence and target elements created for the source elements
    ``elems`` by the current applications."""
    return sum(len(r.created) for r in sync.store.records.values() if r.marked & elems)


def prepare(spec: ScenarioSpec, seed=None):
    tgg, catalog = bundled(spec.grammar)
    source = gen_synthetic(spec.n, spec.flavor)
    sync = Synchronizer.translate(tgg, source, catalog, seed=seed)
    ops, moved = scenario_edit(spec.name, source)
    return sync, ops, subtree(source, moved)


def run_scenario(spec: ScenarioSpec, repeats=1, seed=None) -> BenchRow:
    """Translate, edit and synchronize; the time covers synchronization only
    (best of ``repeats`` runs on fresh copies)."""
    best = None
    for _ in range(max(1, repeats)):
        sync, ops, moved = prepare(spec, seed)
        fp = footprint(sync, moved)
        sync.edit(ops)
        t0 = time.perf_counter()
        trace = sync.synchronize(spec.mode)
        elapsed = (time.perf_counter() - t0) * 1000
        if best is None or elapsed < best[0]:
            best = (elapsed, trace, fp, sync)
    elapsed, trace, fp, sync = best
    return BenchRow(
        f"synthetic n={spec.n}", spec.name, spec.mode, elapsed, trace.created_elements, fp, trace.totals(), trace
    )


def translation_counts(n, flavor="docgen"):
    """Size of a batch translation under three counting conventions."""
    tgg, catalog = bundled(flavor)
    sync = Synchronizer.translate(tgg, gen_synthetic(n, flavor), catalog)
    h = sync.host
    nodes = len(h.corr.nodes) + len(h.target.nodes)
    elements = nodes + len(h.corr.edges) + len(h.target.edges)
    return {"nodes": nodes, "elements": elements, "with_links": elements + len(h.sigma) + len(h.tau)}


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)

    def get(self, scenario, n, mode):
        for r in self.rows:
            if r.scenario == scenario and r.model == f"synthetic n={n}" and r.mode == mode:
                return r
        raise KeyError((scenario, n, mode))

    def deltas(self):
        """createdElements saved by repair compared to legacy, per row pair."""
        out = {}
        for r in self.rows:
            if r.mode != "repair":
                continue
            try:
                legacy = self.get(r.scenario, int(r.model.split("=")[1]), "legacy")
            except KeyError:
                continue
            out[(r.model, r.scenario)] = legacy.created_elements - r.created_elements
        return out

    def table(self, times=True):
        head = ["model", "scenario", "mode", "created", "footprint", "steps"] + (["ms"] if times else [])
        lines = ["\t".join(head)]
        for r in self.rows:
            cells = [r.model, r.scenario, r.mode, str(r.created_elements), str(r.footprint), str(r.totals["steps"])]
            if times:
                cells.append(f"{r.wall_time_ms:.2f}")
            lines.append("\t".join(cells))
        return "\n".join(lines) + "\n"


def run_matrix(ns=(1, 2, 3), scenarios=SCENARIOS, modes=("legacy", "repair"), repeats=1, seed=None):
    report = BenchReport()
    for n in ns:
        for scen in scenarios:
            for mode in modes:
                report.rows.append(run_scenario(ScenarioSpec(scen, n, mode), repeats, seed))
    return report


# --------------------------------------------------------------------------
# refactorings


def _code_model(classes, extends=()):
    """``classes`` maps class name -> list of field names."""
    g = Graph()
    g.add_node("model", "Model", {"name": "model"})
    g.add_node("p", "Package", {"name": "p"})
    g.add_edge("e.p", "packages", "model", "p")
    for c, fields in classes.items():
        g.add_node(c, "Class", {"name": c})
        g.add_edge(f"e.{c}", "classes", "p", c)
        for f in fields:
            fid = f"{c}.{f}"
            g.add_node(fid, "FieldDecl", {"name": f})
            g.add_edge(f"e.{fid}", "fields", c, fid)
    for sub, sup in extends:
        g.add_edge(f"x.{sub}", "extends", sub, sup)
    return g


def refactoring_fixture(rid, k=1):
    """Source model and edit operations of a refactoring.

    For push-up-field, ``k`` is the number of subclasses whose copy of the
    field is deleted rather than moved."""
    if rid == "move-field":
        g = _code_model({"A": ["x"], "B": []})
        ops = [EditOp("delete-edge", "e.A.x"), EditOp("add-edge", "e2.A.x", "fields", "B", "A.x")]
        return g, ops
    if rid == "push-up-field":
        subs = [f"S{i}" for i in range(1, k + 2)]
        g = _code_model({"Super": [], **{s: ["x"] for s in subs}}, [(s, "Super") for s in subs])
        first = subs[0]
        ops = [
            EditOp("delete-edge", f"e.{first}.x"),
            EditOp("add-edge", f"e2.{first}.x", "fields", "Super", f"{first}.x"),
        ]
        for s in subs[1:]:
            ops.append(EditOp("delete-node", f"{s}.x", cascade=True))
        return g, ops
    if rid == "extract-class":
        g = _code_model({"A": ["x", "y", "z"]})
        ops = [
            EditOp("add-node", "B", "Class", attrs={"name": "B"}),
            EditOp("add-edge", "e.B", "classes", "p", "B"),
        ]
        for f in ("x", "y"):
            ops += [EditOp("delete-edge", f"e.A.{f}"), EditOp("add-edge", f"e2.A.{f}", "fields", "B", f"A.{f}")]
        return g, ops
    raise ValueError(f"unknown refactoring {rid!r}")


def run_refactoring(rid, k=1, mode="repair"):
    """Run a refactoring on the evaluation grammar and summarize the trace."""
    tgg, catalog = bundled("eval")
    source, ops = refactoring_fixture(rid, k)
    sync = Synchronizer.translate(tgg, source, catalog)
    sync.edit(ops)
    trace = sync.synchronize(mode)
    return {
        "id": rid,
        "translate": trace.count("translate"),
        "repair": trace.count("repair"),
        "revoke": trace.count("revoke"),
        "rules": [s.rule for s in trace.steps],
        "created": trace.created_elements,
        "marking": sync.marking_check(),
        "trace": trace,
        "sync": sync,
    }
