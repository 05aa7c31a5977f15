"""Text formats: grammars (.tgg), triple models (.trim), edit scripts (.edit)
and synchronization traces (.trace).

Grammar and model files are line oriented.  Components are introduced by
``source``, ``corr`` and ``target`` lines; element lines look like::

    p : Package name="core"              # node with attributes
    e1 : rootP -subpackages-> subP       # edge
    c1 : P2F rootP <-> rootF             # correspondence node, '?' = undefined

Inside rules, a leading ``++`` marks created and ``--`` deleted elements.
See docs in README.md for the full grammar.
"""

from __future__ import annotations

import json
import shlex
from dataclasses import dataclass, field

from .graph import (
    COMPONENTS,
    CORR,
    SOURCE,
    TARGET,
    GraphError,
    PartialTripleGraph,
    TripleGraph,
    TripleTypeGraph,
    TypeGraph,
    restrict_after_edit,
    validate,
)
from .rewriting import NAC, Rule, restrict
from .tgg import TGG, SemanticError

__all__ = [
    "DSLSyntaxError",
    "SchemaError",
    "UnknownId",
    "DanglingWithoutCascade",
    "parse_grammar",
    "load_grammar",
    "serialize_grammar",
    "parse_rule_text",
    "serialize_rule",
    "parse_model",
    "load_model",
    "serialize_model",
    "parse_edit_script",
    "serialize_edit_script",
    "apply_edit_script",
    "EditOp",
    "emit_trace",
]


class DSLSyntaxError(ValueError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line else msg)


class SchemaError(GraphError):
    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class UnknownId(GraphError):
    pass


class DanglingWithoutCascade(GraphError):
    pass


def _lines(text):
    for no, raw in enumerate(text.splitlines(), 1):
        try:
            toks = shlex.split(raw, comments=True, posix=True)
        except ValueError as exc:
            raise DSLSyntaxError(str(exc), no) from None
        if toks:
            yield no, toks


def _attrs(tokens, no):
    out = {}
    for t in tokens:
        if "=" not in t:
            raise DSLSyntaxError(f"expected key=value, got {t!r}", no)
        k, v = t.split("=", 1)
        out[k] = v
    return out


@dataclass
class _Elem:
    comp: str
    kind: str  # node | edge | corr
    id: str
    type: str
    mark: str = ""  # '', '++', '--'
    src: str | None = None
    trg: str | None = None
    attrs: dict = field(default_factory=dict)
    line: int = 0


def _parse_element(comp, toks, no, allow_marks):
    mark = ""
    if toks[0] in ("++", "--"):
        if not allow_marks:
            raise DSLSyntaxError(f"marker {toks[0]} not allowed here", no)
        mark, toks = toks[0], toks[1:]
    if len(toks) < 3 or toks[1] != ":":
        raise DSLSyntaxError("expected 'id : ...'", no)
    id, rest = toks[0], toks[2:]
    if comp == CORR:
        if len(rest) != 4 or rest[2] != "<->":
            raise DSLSyntaxError("expected 'id : Type src <-> trg'", no)
        src = None if rest[1] == "?" else rest[1]
        trg = None if rest[3] == "?" else rest[3]
        return _Elem(comp, "corr", id, rest[0], mark, src, trg, {}, no)
    if len(rest) >= 3 and rest[1].startswith("-") and rest[1].endswith("->"):
        if len(rest) != 3:
            raise DSLSyntaxError("edges take no attributes", no)
        etype = rest[1][1:-2]
        if not etype:
            raise DSLSyntaxError("edge without type", no)
        return _Elem(comp, "edge", id, etype, mark, rest[0], rest[2], {}, no)
    return _Elem(comp, "node", id, rest[0], mark, None, None, _attrs(rest[1:], no), no)


def _build(elems, cls=TripleGraph, include=None):
    g = cls()
    chosen = [e for e in elems if include is None or include(e)]
    for e in chosen:
        if e.kind in ("node", "corr"):
            try:
                g.add_node(e.comp, e.id, e.type, e.attrs)
            except GraphError as exc:
                raise DSLSyntaxError(str(exc), e.line) from None
    for e in chosen:
        if e.kind == "edge":
            try:
                g.add_edge(e.comp, e.id, e.type, e.src, e.trg)
            except GraphError as exc:
                raise DSLSyntaxError(f"{exc}", e.line) from None
    for e in chosen:
        if e.kind == "corr":
            if e.src is not None:
                if g.source.element(e.src) is None:
                    if cls is TripleGraph:
                        raise DSLSyntaxError(f"unknown source element {e.src}", e.line)
                    continue
                g.set_sigma(e.id, e.src)
            if e.trg is not None:
                if g.target.element(e.trg) is None:
                    if cls is TripleGraph:
                        raise DSLSyntaxError(f"unknown target element {e.trg}", e.line)
                    continue
                g.set_tau(e.id, e.trg)
    return g


# --------------------------------------------------------------------------
# rules


class _RuleDraft:
    def __init__(self, name, line):
        self.name = name
        self.line = line
        self.elems = []
        self.nacs = []  # (name, [elements])
        self.eqs = []


def _finish_rule(d: _RuleDraft, allow_general):
    if not allow_general:
        for e in d.elems:
            if e.mark == "--":
                raise SemanticError(f"line {e.line}: rule {d.name} deletes {e.id}; TGG rules must be monotonic")
        if d.nacs:
            raise SemanticError(f"line {d.line}: rule {d.name} has NACs; TGG rules must be plain")
    partial = any(e.kind == "corr" and (e.src is None or e.trg is None) for e in d.elems)
    cls = PartialTripleGraph if partial else TripleGraph
    lhs = _build(d.elems, cls, lambda e: e.mark != "++")
    rhs = _build(d.elems, cls, lambda e: e.mark != "--")
    nacs = []
    for name, extra in d.nacs:
        ng = _build(d.elems + extra, PartialTripleGraph if partial else TripleGraph, lambda e: e.mark != "++")
        nacs.append(NAC(ng, name))
    eqs = []
    ids = lhs.ids() | rhs.ids()
    for (a, aa, b, ba), no in d.eqs:
        if a not in ids or b not in ids:
            raise SemanticError(f"line {no}: attribute constraint refers to an unknown element")
        eqs.append((a, aa, b, ba))
    try:
        return Rule(d.name, lhs, rhs, nacs, eqs)
    except GraphError as exc:
        raise SemanticError(f"line {d.line}: {exc}") from None


def _parse_eq(toks, no):
    # eq a.attr = b.attr
    if len(toks) != 4 or toks[2] != "=" or "." not in toks[1] or "." not in toks[3]:
        raise DSLSyntaxError("expected 'eq a.attr = b.attr'", no)
    a, aa = toks[1].split(".", 1)
    b, ba = toks[3].split(".", 1)
    return (a, aa, b, ba)


def _parse_rule_block(lines, i, allow_general):
    no, toks = lines[i]
    if len(toks) != 2:
        raise DSLSyntaxError("expected 'rule NAME'", no)
    d = _RuleDraft(toks[1], no)
    comp = None
    nac = None
    i += 1
    while i < len(lines):
        no, toks = lines[i]
        head = toks[0]
        if head == "end":
            if nac is not None:
                d.nacs.append(nac)
                nac, comp = None, None
                i += 1
                continue
            return _finish_rule(d, allow_general), i + 1
        if head in COMPONENTS and len(toks) == 1:
            comp = head
        elif head == "nac":
            if nac is not None:
                raise DSLSyntaxError("nested nac block", no)
            nac = (toks[1] if len(toks) > 1 else f"nac{len(d.nacs) + 1}", [])
            comp = None
        elif head == "eq":
            d.eqs.append((_parse_eq(toks, no), no))
        else:
            if comp is None:
                raise DSLSyntaxError("element outside a source/corr/target section", no)
            el = _parse_element(comp, toks, no, allow_marks=nac is None)
            (nac[1] if nac is not None else d.elems).append(el)
        i += 1
    raise DSLSyntaxError(f"rule {d.name} is missing 'end'", d.line)


def parse_rule_text(text, allow_general=True):
    """Parse one or more ``rule`` blocks (e.g. a derived-rule dump)."""
    lines = list(_lines(text))
    rules, i = [], 0
    while i < len(lines):
        no, toks = lines[i]
        if toks[0] == "rule":
            r, i = _parse_rule_block(lines, i, allow_general)
            rules.append(r)
        elif toks[0] == "kind":
            i += 1
        else:
            raise DSLSyntaxError(f"unexpected {toks[0]!r}", no)
    return rules


def _fmt_attrs(attrs):
    return "".join(f" {k}={shlex.quote(v) if v else chr(34) * 2}" for k, v in sorted(attrs.items()))


def _element_lines(g, comp, mark_of=lambda x: "", only=None):
    graph = g.component(comp)
    out = []
    for n in sorted(graph.nodes.values(), key=lambda n: n.id):
        if only is not None and n.id not in only:
            continue
        m = mark_of(n.id)
        pre = f"{m} " if m else ""
        if comp == CORR:
            s = g.sigma.get(n.id, "?")
            t = g.tau.get(n.id, "?")
            out.append(f"{pre}{n.id} : {n.type} {s} <-> {t}")
        else:
            out.append(f"{pre}{n.id} : {n.type}{_fmt_attrs(n.attrs)}")
    for e in sorted(graph.edges.values(), key=lambda e: e.id):
        if only is not None and e.id not in only:
            continue
        m = mark_of(e.id)
        pre = f"{m} " if m else ""
        out.append(f"{pre}{e.id} : {e.src} -{e.type}-> {e.trg}")
    return out


def serialize_rule(rule: Rule, kind=None) -> str:
    from .graph import glue_along

    union = glue_along(rule.lhs, rule.rhs, restrict(rule.rhs, rule.kernel_ids))
    # correspondence links that only the LHS leaves undefined
    for cx in list(union.sigma):
        if cx in rule.lhs.corr.ids() and cx not in rule.lhs.sigma:
            union.unset_sigma(cx)

    def mark(x):
        return "++" if x in rule.created else "--" if x in rule.deleted else ""

    out = [f"rule {rule.name}"]
    if kind:
        out.insert(0, f"kind {kind}")
    for comp in COMPONENTS:
        lines = _element_lines(union, comp, mark)
        if lines:
            out.append(f"  {comp}")
            out += [f"    {ln}" for ln in lines]
    for nac in rule.nacs:
        out.append(f"  nac {nac.name}")
        extra = nac.graph.ids() - rule.lhs.ids()
        for comp in COMPONENTS:
            lines = _element_lines(nac.graph, comp, only=extra)
            if lines:
                out.append(f"    {comp}")
                out += [f"      {ln}" for ln in lines]
        out.append("  end")
    for a, aa, b, ba in rule.attr_eqs:
        out.append(f"  eq {a}.{aa} = {b}.{ba}")
    out.append("end")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# grammars


def _parse_types(lines, i):
    tg = TripleTypeGraph()
    i += 1
    while i < len(lines):
        no, toks = lines[i]
        if toks[0] == "end":
            problems = tg.diagnostics()
            if problems:
                raise SemanticError([f"line {no}: {p}" for p in problems])
            return tg, i + 1
        comp = toks[0]
        if comp in (SOURCE, TARGET) and len(toks) >= 3 and toks[1] == "node":
            tg.component(comp).add_node_type(toks[2], toks[3:])
        elif comp in (SOURCE, TARGET) and len(toks) == 6 and toks[1] == "edge" and toks[4] == "->":
            tg.component(comp).add_edge_type(toks[2], toks[3], toks[5])
        elif comp == CORR and len(toks) == 5 and toks[3] == "<->":
            tg.add_corr_type(toks[1], toks[2], toks[4])
        else:
            raise DSLSyntaxError("bad type declaration", no)
        i += 1
    raise DSLSyntaxError("types block is missing 'end'")


def _parse_model_sections(lines, i, stop="end"):
    elems = []
    comp = None
    while i < len(lines):
        no, toks = lines[i]
        if stop is not None and toks[0] == stop and len(toks) == 1:
            return elems, i + 1
        if toks[0] in COMPONENTS and len(toks) == 1:
            comp = toks[0]
        elif toks[0] == "model" and len(toks) == 2 and not elems and comp is None:
            pass
        else:
            if comp is None:
                raise DSLSyntaxError("element outside a source/corr/target section", no)
            elems.append(_parse_element(comp, toks, no, allow_marks=False))
        i += 1
    if stop is not None:
        raise DSLSyntaxError(f"missing '{stop}'")
    return elems, i


def _parse_pairs(lines, i):
    pairs = []
    while i < len(lines):
        no, toks = lines[i]
        if toks[0] == "end":
            return pairs, i + 1
        if len(toks) != 3 or toks[1] != "=":
            raise DSLSyntaxError("expected 'a = b'", no)
        pairs.append((toks[0], toks[2]))
        i += 1
    raise DSLSyntaxError("block is missing 'end'")


def parse_grammar(text, check=True) -> TGG:
    """Parse a grammar; raises DSLSyntaxError or SemanticError."""
    from .shortcut import build_concurrent_rule, strategy_name

    lines = list(_lines(text))
    name, tg, rules, start, shortcuts, derived = "tgg", None, [], None, [], []
    errors = []
    i = 0
    while i < len(lines):
        no, toks = lines[i]
        head = toks[0]
        if head == "grammar" and len(toks) == 2:
            name = toks[1]
            i += 1
        elif head == "types":
            tg, i = _parse_types(lines, i)
        elif head == "rule":
            try:
                r, i = _parse_rule_block(lines, i, allow_general=False)
                rules.append(r)
            except SemanticError as exc:
                errors += exc.messages
                while i < len(lines) and lines[i][1][0] != "end":
                    i += 1
                i += 1
        elif head == "start":
            elems, i = _parse_model_sections(lines, i + 1)
            start = _build(elems)
        elif head == "concurrent":
            # concurrent NAME = R1 ; R2   followed by 'a = b' lines and end
            if len(toks) != 6 or toks[2] != "=" or toks[4] != ";":
                raise DSLSyntaxError("expected 'concurrent NAME = R1 ; R2'", no)
            pairs, i = _parse_pairs(lines, i + 1)
            try:
                r1, r2 = _find(rules + derived, toks[3], no), _find(rules + derived, toks[5], no)
                derived.append(build_concurrent_rule(r1, r2, {b: a for b, a in pairs}, toks[1]))
            except GraphError as exc:
                raise SemanticError(f"line {no}: {exc}") from None
        elif head == "shortcut":
            # shortcut NAME : R1 -> R2 strategy   |   block with explicit pairs
            if len(toks) == 6 and toks[2] == ":" and toks[4] == "->":
                pairs, i = _parse_pairs(lines, i + 1)
                shortcuts.append({"name": toks[1], "replaced": toks[3], "replacing": toks[5], "pairs": pairs})
            elif len(toks) == 7 and toks[2] == ":" and toks[4] == "->":
                try:
                    strat = strategy_name(toks[6])
                except ValueError as exc:
                    raise DSLSyntaxError(str(exc), no) from None
                shortcuts.append(
                    {"name": toks[1], "replaced": toks[3], "replacing": toks[5], "strategy": strat, "pairs": None}
                )
                i += 1
            else:
                raise DSLSyntaxError("expected 'shortcut NAME : R1 -> R2 [strategy]'", no)
        else:
            raise DSLSyntaxError(f"unexpected {head!r}", no)
    if tg is None:
        raise SemanticError("grammar has no types block")
    for r in rules + derived:
        for g in (r.lhs, r.rhs):
            for d in validate(tg, g):
                errors.append(f"{r.name}: {d}")
    if start is not None:
        errors += [f"start: {d}" for d in validate(tg, start)]
    known = {r.name for r in rules + derived}
    for s in shortcuts:
        for k in ("replaced", "replacing"):
            if s[k] not in known:
                errors.append(f"shortcut {s['name']} refers to unknown rule {s[k]}")
    tgg = TGG(tg, rules, start, name, shortcuts, check=False)
    tgg.derived_rules = derived
    if check:
        errors += tgg.diagnostics()
    if errors:
        raise SemanticError(errors)
    return tgg


def _find(rules, name, no):
    for r in rules:
        if r.name == name:
            return r
    raise SemanticError(f"line {no}: unknown rule {name}")


def load_grammar(path) -> TGG:
    with open(path, encoding="utf-8") as fh:
        return parse_grammar(fh.read())


def _type_lines(tg: TripleTypeGraph):
    out = ["types"]
    for comp in (SOURCE, TARGET):
        t = tg.component(comp)
        for n in sorted(t.node_types):
            attrs = " ".join(sorted(t.attrs.get(n, ())))
            out.append(f"  {comp} node {n}" + (f" {attrs}" if attrs else ""))
        for e, (s, d) in sorted(t.edge_types.items()):
            out.append(f"  {comp} edge {e} {s} -> {d}")
    for c in sorted(tg.corr.node_types):
        out.append(f"  corr {c} {tg.sigma[c]} <-> {tg.tau[c]}")
    out.append("end")
    return out


def serialize_grammar(tgg: TGG) -> str:
    out = [f"grammar {tgg.name}", ""] + _type_lines(tgg.type_graph) + [""]
    for r in tgg.rules:
        out.append(serialize_rule(r))
    if len(tgg.start):
        out.append("start")
        out += ["  " + ln for ln in serialize_model(tgg.start).splitlines()]
        out.append("end")
    for d in getattr(tgg, "derived_rules", []):
        r1, r2, dep = d.meta["concurrent"]
        out.append(f"concurrent {d.name} = {r1} ; {r2}")
        out += [f"  {b} = {a}" for b, a in dep]
        out.append("end")
    for s in tgg.shortcuts:
        if s.get("pairs") is None:
            out.append(f"shortcut {s['name']} : {s['replaced']} -> {s['replacing']} {s['strategy']}")
        else:
            out.append(f"shortcut {s['name']} : {s['replaced']} -> {s['replacing']}")
            out += [f"  {a} = {b}" for a, b in s["pairs"]]
            out.append("end")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# models


def parse_model(text, type_graph=None) -> TripleGraph:
    """Parse a .trim model; the result is partial iff some correspondence
    link is undefined.  With a type graph, schema violations raise."""
    lines = list(_lines(text))
    elems, _ = _parse_model_sections(lines, 0, stop=None)
    partial = any(e.kind == "corr" and (e.src is None or e.trg is None) for e in elems)
    g = _build(elems, PartialTripleGraph if partial else TripleGraph)
    if type_graph is not None:
        problems = validate(type_graph, g)
        if problems:
            raise SchemaError(problems)
    return g


def load_model(path, type_graph=None) -> TripleGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read(), type_graph)


def serialize_model(g: TripleGraph) -> str:
    out = []
    for comp in COMPONENTS:
        out.append(comp)
        out += ["  " + ln for ln in _element_lines(g, comp)]
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# edit scripts


@dataclass
class EditOp:
    kind: str  # add-node | add-edge | delete-node | delete-edge | set-attr
    id: str
    type: str | None = None
    src: str | None = None
    trg: str | None = None
    attrs: dict = field(default_factory=dict)
    cascade: bool = False

    def line(self):
        if self.kind == "add-node":
            return f"add-node {self.id} : {self.type}{_fmt_attrs(self.attrs)}"
        if self.kind == "add-edge":
            return f"add-edge {self.id} : {self.src} -{self.type}-> {self.trg}"
        if self.kind == "delete-node":
            return f"delete-node {self.id}" + (" cascade" if self.cascade else "")
        if self.kind == "set-attr":
            return f"set-attr {self.id}{_fmt_attrs(self.attrs)}"
        return f"{self.kind} {self.id}"


def parse_edit_script(text):
    ops = []
    for no, toks in _lines(text):
        kind = toks[0]
        if kind in ("add-node", "add-edge"):
            el = _parse_element(SOURCE, toks[1:], no, allow_marks=False)
            if (el.kind == "edge") != (kind == "add-edge"):
                raise DSLSyntaxError(f"{kind} does not match element syntax", no)
            ops.append(EditOp(kind, el.id, el.type, el.src, el.trg, el.attrs))
        elif kind == "delete-edge" and len(toks) == 2:
            ops.append(EditOp(kind, toks[1]))
        elif kind == "delete-node" and len(toks) in (2, 3):
            if len(toks) == 3 and toks[2] != "cascade":
                raise DSLSyntaxError("expected 'delete-node ID [cascade]'", no)
            ops.append(EditOp(kind, toks[1], cascade=len(toks) == 3))
        elif kind == "set-attr" and len(toks) >= 3:
            ops.append(EditOp(kind, toks[1], attrs=_attrs(toks[2:], no)))
        else:
            raise DSLSyntaxError(f"bad edit operation {' '.join(toks)!r}", no)
    return ops


def serialize_edit_script(ops) -> str:
    return "".join(op.line() + "\n" for op in ops)


def apply_edit_ops(source, ops):
    """Apply primitive operations in order to a source graph (in place).

    Returns the set of touched element ids."""
    touched = set()
    for op in ops:
        if op.kind == "add-node":
            source.add_node(op.id, op.type, op.attrs)
        elif op.kind == "add-edge":
            if op.src not in source.nodes or op.trg not in source.nodes:
                raise UnknownId(f"edge {op.id} refers to a missing node")
            source.add_edge(op.id, op.type, op.src, op.trg)
        elif op.kind == "delete-edge":
            if op.id not in source.edges:
                raise UnknownId(op.id)
            e = source.edges[op.id]
            touched |= {e.src, e.trg}
            source.remove_edge(op.id)
        elif op.kind == "delete-node":
            if op.id not in source.nodes:
                raise UnknownId(op.id)
            inc = source.incident(op.id)
            if inc and not op.cascade:
                raise DanglingWithoutCascade(f"{op.id} still has edges {sorted(inc)}")
            for e in sorted(inc):
                ed = source.edges[e]
                touched |= {ed.src, ed.trg, e}
                source.remove_edge(e)
            source.remove_node(op.id)
        elif op.kind == "set-attr":
            if op.id not in source.nodes:
                raise UnknownId(op.id)
            source.nodes[op.id].attrs.update(op.attrs)
        touched.add(op.id)
        if op.src:
            touched |= {op.src, op.trg}
    return touched


def apply_edit_script(model: TripleGraph, script) -> PartialTripleGraph:
    """Apply an edit script to the source part of a copy of ``model``."""
    ops = parse_edit_script(script) if isinstance(script, str) else list(script)
    edited = model.source.copy()
    apply_edit_ops(edited, ops)
    return restrict_after_edit(model, edited)


# --------------------------------------------------------------------------
# traces


def emit_trace(trace) -> str:
    """Machine-readable JSON record of a synchronization run."""
    data = trace.to_dict() if hasattr(trace, "to_dict") else dict(trace)
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
