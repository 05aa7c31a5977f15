"""Triple graph grammars and their operationalization.

Forward rules keep the source part of the original rule as context and record
which source elements an application marks as translated (``marking``) and
which it requires to be translated already (``required``).  Marking itself is
kept outside the graph, see :class:`MarkingState`.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .graph import (
    COMPONENTS,
    CORR,
    SOURCE,
    TARGET,
    GraphError,
    TripleGraph,
    iter_injective_morphisms,
)
from .rewriting import NAC, Match, Rule, apply, is_applicable, restrict, shift_nac, undo

OTHER = {SOURCE: TARGET, TARGET: SOURCE}


class SemanticError(GraphError):
    def __init__(self, messages):
        self.messages = list(messages) if not isinstance(messages, str) else [messages]
        super().__init__("; ".join(self.messages))


class NotInLanguage(GraphError):
    pass


def base_name(name):
    return name[: -len("-Rule")] if name.endswith("-Rule") else name


class OperationalRule(Rule):
    """A rule derived from a TGG rule, remembering its origin.

    ``marking`` and ``required`` are rule element ids in the translated
    domain (source for forward rules, target for backward rules)."""

    def __init__(self, name, lhs, rhs, nacs=(), attr_eqs=(), meta=None, base=None, domain=SOURCE,
                 marking=(), required=()):
        super().__init__(name, lhs, rhs, nacs, attr_eqs, meta)
        self.base = base
        self.domain = domain
        self.marking = frozenset(marking)
        self.required = frozenset(required)


class ForwardRule(OperationalRule):
    pass


class SourceRule(OperationalRule):
    pass


class ConsistencyPattern(OperationalRule):
    """Effect-free rule ``R -> R`` with the filter NACs of both directions."""


class TGG:
    def __init__(self, type_graph, rules, start=None, name="tgg", shortcuts=(), check=True):
        self.type_graph = type_graph
        self.rules = list(rules)
        self.start = start if start is not None else TripleGraph()
        self.name = name
        # declared short-cuts, consumed by the shortcut module
        self.shortcuts = list(shortcuts)
        self._cache = {}
        if check:
            problems = self.diagnostics()
            if problems:
                raise SemanticError(problems)

    def diagnostics(self):
        out = []
        names = [r.name for r in self.rules]
        for n in sorted({n for n in names if names.count(n) > 1}):
            out.append(f"duplicate rule name {n}")
        for r in self.rules:
            if not r.is_monotonic():
                out.append(f"{r.name} deletes elements; TGG rules must be monotonic")
            if r.nacs:
                out.append(f"{r.name} has NACs; TGG rules must be plain")
            if r.is_monotonic() and not (r.created & r.rhs.source.ids()):
                out.append(f"{r.name} has an empty source marking; its forward rule cannot mark anything")
        return out

    def rule(self, name) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def _cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def forward(self, r) -> ForwardRule:
        r = self.rule(r) if isinstance(r, str) else r
        return self._cached(("fwd", r.name), lambda: derive_forward_rule(r, self))

    def backward(self, r) -> ForwardRule:
        r = self.rule(r) if isinstance(r, str) else r
        return self._cached(("bwd", r.name), lambda: derive_backward_rule(r, self))

    def source_rule(self, r) -> SourceRule:
        r = self.rule(r) if isinstance(r, str) else r
        return self._cached(("src", r.name), lambda: derive_source_rule(r))

    def consistency(self, r) -> ConsistencyPattern:
        r = self.rule(r) if isinstance(r, str) else r
        return self._cached(("cons", r.name), lambda: derive_consistency_pattern(r, self))

    def forward_rules(self):
        return [self.forward(r) for r in self.rules]

    def consistency_patterns(self):
        return [self.consistency(r) for r in self.rules]


# --------------------------------------------------------------------------
# derivations


def _part(g: TripleGraph, comps):
    keep = set()
    for c in comps:
        keep |= g.component(c).ids()
    return restrict(g, keep)


def derive_source_rule(r: Rule) -> SourceRule:
    lhs, rhs = _part(r.lhs, [SOURCE]), _part(r.rhs, [SOURCE])
    eqs = [eq for eq in r.attr_eqs if eq[0] in rhs.ids() and eq[2] in rhs.ids()]
    return SourceRule(
        base_name(r.name) + "-Source-Rule",
        lhs,
        rhs,
        attr_eqs=eqs,
        base=r,
        domain=SOURCE,
        marking=r.created & r.rhs.source.ids(),
        required=r.lhs.source.ids(),
    )


def _operational_lhs(r: Rule, domain):
    """(R_D <- L_C -> L_other): the domain part becomes pure context."""
    keep = r.rhs.component(domain).ids() | r.lhs.corr.ids() | r.lhs.component(OTHER[domain]).ids()
    return restrict(r.rhs, keep)


def derive_forward_rule(r: Rule, tgg: TGG | None = None, domain=SOURCE, with_nacs=True) -> ForwardRule:
    lhs = _operational_lhs(r, domain)
    tag = "FWD" if domain == SOURCE else "BWD"
    fr = ForwardRule(
        f"{base_name(r.name)}-{tag}-Rule",
        lhs,
        r.rhs.copy(),
        (),
        _directed_eqs(r, domain),
        base=r,
        domain=domain,
        marking=r.created & r.rhs.component(domain).ids(),
        required=r.lhs.component(domain).ids(),
    )
    if with_nacs and tgg is not None:
        fr.nacs = derive_filter_nacs(tgg, fr, domain)
    return fr


def derive_backward_rule(r: Rule, tgg: TGG | None = None) -> ForwardRule:
    return derive_forward_rule(r, tgg, domain=TARGET)


def _directed_eqs(r, domain):
    """Orient attribute equalities so values flow out of ``domain``."""
    out = []
    dom = r.rhs.component(domain).ids()
    for a, aa, b, ba in r.attr_eqs:
        if a in dom or b not in dom:
            out.append((a, aa, b, ba))
        else:
            out.append((b, ba, a, aa))
    return out


def derive_consistency_pattern(r: Rule, tgg: TGG) -> ConsistencyPattern:
    nacs = []
    for fr in (tgg.forward(r), tgg.backward(r)):
        for nac in fr.nacs:
            for shifted in shift_nac(nac, fr.lhs, r.rhs):
                tag = "fwd" if fr.domain == SOURCE else "bwd"
                nacs.append(NAC(shifted.graph, f"{tag}:{shifted.name}"))
    return ConsistencyPattern(
        f"{base_name(r.name)}-Consistency-Pattern",
        r.rhs.copy(),
        r.rhs.copy(),
        nacs,
        r.attr_eqs,
        base=r,
        domain=SOURCE,
        marking=r.created & r.rhs.source.ids(),
        required=r.lhs.source.ids(),
    )


# --------------------------------------------------------------------------
# filter NACs


def _created_nodes(r, domain):
    g = r.rhs.component(domain)
    return [n for n in sorted(g.nodes) if n in r.created]


def _attaches_to_context(tgg, domain, etype, outgoing):
    """Some rule creates an ``etype`` edge whose end on the given side is a
    context node, so such an edge may be added to an existing node later."""
    for r in tgg.rules:
        g = r.rhs.component(domain)
        for e in g.edges.values():
            if e.type == etype and e.id in r.created:
                end = e.src if outgoing else e.trg
                if end not in r.created:
                    return True
    return False


def derive_filter_nacs(tgg: TGG, op: OperationalRule, domain=None):
    """The simple dead-end analysis for filter NACs.

    For every node of type T that the base rule creates without any adjacent
    edge: whenever another rule creates a T node together with an adjacent
    edge of type e, and no rule attaches e-edges at that end to an already
    existing node, forbid such an edge at the node.
    """
    domain = domain or op.domain
    r = op.base
    g = r.rhs.component(domain)
    nacs = []
    seen = set()
    for v in _created_nodes(r, domain):
        if g.incident(v):
            continue
        vtype = g.nodes[v].type
        for other in tgg.rules:
            if other is r:
                continue
            og = other.rhs.component(domain)
            for w in _created_nodes(other, domain):
                if og.nodes[w].type != vtype:
                    continue
                for eid in sorted(og.incident(w)):
                    e = og.edges[eid]
                    if eid not in other.created:
                        continue
                    outgoing = e.src == w
                    key = (v, e.type, outgoing)
                    if key in seen or _attaches_to_context(tgg, domain, e.type, outgoing):
                        continue
                    seen.add(key)
                    far = e.trg if outgoing else e.src
                    far_type = og.nodes[far].type
                    ng = op.lhs.copy()
                    x, xe = _nac_name(ng, "x"), None
                    ng.add_node(domain, x, far_type)
                    xe = _nac_name(ng, "x_" + e.type)
                    if outgoing:
                        ng.add_edge(domain, xe, e.type, v, x)
                    else:
                        ng.add_edge(domain, xe, e.type, x, v)
                    direction = "outgoing" if outgoing else "incoming"
                    nacs.append(NAC(ng, f"no-{direction}-{e.type}-at-{v}"))
    return nacs


def _nac_name(g, base):
    name, i = base, 1
    while name in g:
        i += 1
        name = f"{base}{i}"
    return name


# --------------------------------------------------------------------------
# marking


@dataclass
class MarkingState:
    translated: set = field(default_factory=set)
    owner: dict = field(default_factory=dict)  # source element -> record id

    def mark(self, ids, owner):
        for x in ids:
            if x in self.translated:
                raise GraphError(f"{x} is already marked by {self.owner[x]}")
        for x in ids:
            self.translated.add(x)
            self.owner[x] = owner

    def unmark(self, ids):
        for x in ids:
            self.translated.discard(x)
            self.owner.pop(x, None)


def marking_of(step):
    """(marked, required) host ids of a forward application or record."""
    if hasattr(step, "marked") and hasattr(step, "required"):
        return set(step.marked), set(step.required)
    if isinstance(step, tuple):
        return set(step[0]), set(step[1])
    rule, cm = step.rule, step.comatch
    return {cm[x] for x in rule.marking}, {cm[x] for x in rule.required}


def check_marking_sequence(seq, source_graph):
    """Creation-preserving + context-preserving (= consistent) and entire."""
    marked = set()
    creation_ok = context_ok = True
    for step in seq:
        m, req = marking_of(step)
        if m & marked:
            creation_ok = False
        if not req <= marked:
            context_ok = False
        marked |= m
    universe = source_graph.ids() if hasattr(source_graph, "ids") else set(source_graph)
    entire = universe <= marked and marked <= universe
    return {
        "consistent": creation_ok and context_ok,
        "entire": entire,
        "creation_preserving": creation_ok,
        "context_preserving": context_ok,
    }


# --------------------------------------------------------------------------
# membership


def _available(rules, host, marked, universe, check_nacs):
    for fr in rules:
        for m in iter_injective_morphisms(fr.lhs, host):
            marks = {m[x] for x in fr.marking}
            if marks & marked or not marks <= universe:
                continue
            if not {m[x] for x in fr.required} <= marked:
                continue
            match = Match(fr, m, host)
            if check_nacs and not is_applicable(fr, match, host)[0]:
                continue
            yield match


def membership_by_translation(tgg: TGG, source, use_filter_nacs=True, return_sequence=False):
    """Search for a consistently and entirely marking forward sequence.

    Chronological backtracking over all available forward matches with a memo
    of failed states.  Returns the translated triple graph (and optionally the
    application sequence) or raises :class:`NotInLanguage`.
    """
    host = TripleGraph(source=source.copy())
    rules = tgg.forward_rules()
    universe = source.ids()
    start_marked = set()
    if len(tgg.start):
        # start graph: its source part must be present by id; the rest is copied
        st = tgg.start
        for c in (CORR, TARGET):
            for n in st.component(c).nodes.values():
                host.add_node(c, n.id, n.type, n.attrs)
            for e in st.component(c).edges.values():
                host.add_edge(c, e.id, e.type, e.src, e.trg)
        for cx, x in st.sigma.items():
            host.set_sigma(cx, x)
        for cx, x in st.tau.items():
            host.set_tau(cx, x)
        start_marked = st.source.ids() & universe
    failed = set()
    seq = []
    marked = set(start_marked)

    def state():
        return frozenset(
            (a.rule.name, tuple(sorted((k, v) for k, v in a.match.mapping.items() if k in a.rule.lhs.source.ids())))
            for a in seq
        )

    def search():
        if marked == universe:
            return True
        key = state()
        if key in failed:
            return False
        cands = sorted(
            _available(rules, host, marked, universe, use_filter_nacs),
            key=lambda mt: (mt.rule.name, sorted(mt.mapping.items())),
        )
        for mt in cands:
            app = apply(mt.rule, mt, host, check_nacs=use_filter_nacs)
            marks, _ = marking_of(app)
            seq.append(app)
            marked.update(marks)
            if search():
                return True
            marked.difference_update(marks)
            seq.pop()
            undo(app, host)
        failed.add(key)
        return False

    if not search():
        raise NotInLanguage("no consistently and entirely marking forward sequence")
    return (host, list(seq)) if return_sequence else host


def is_member(tgg: TGG, triple: TripleGraph, return_records=False):
    """Decide whether ``triple`` is generated by the grammar.

    Looks for a covering of all elements by occurrences of rule right-hand
    sides where each occurrence's created part is fresh and its context part
    was covered earlier.  This is the triple-level analogue of the marking
    search and needs no rewriting.
    """
    if not triple.is_total():
        return (False, []) if return_records else False
    universe = triple.ids()
    start_ids = set()
    if len(tgg.start):
        m = next(iter_injective_morphisms(tgg.start, triple), None)
        if m is None:
            return (False, []) if return_records else False
        start_ids = set(m.values())
    covered = set(start_ids)
    records = []
    failed = set()

    # the triple does not change during the search, so every right-hand
    # side occurrence is enumerated once up front
    occurrences = []
    for r in tgg.rules:
        for m in iter_injective_morphisms(r.rhs, triple):
            created = frozenset(m[x] for x in r.created)
            context = frozenset(m[x] for x in r.lhs.ids())
            occurrences.append((r.name, tuple(sorted(m.items())), r, m, created, context))
    occurrences.sort(key=lambda o: (o[0], o[1]))

    creators = defaultdict(list)
    for o in occurrences:
        for x in o[4]:
            creators[x].append(o[4])

    def options():
        return [o[:5] for o in occurrences if o[5] <= covered and not o[4] & covered]

    def dead_end():
        # some uncovered element can no longer be created by any occurrence
        return any(
            not any(not (c & covered) for c in creators.get(x, ()))
            for x in universe - covered
        )

    def search():
        if covered == universe:
            return True
        key = frozenset(covered)
        if key in failed or dead_end():
            return False
        for name, _, r, m, created in options():
            covered.update(created)
            records.append((r, m))
            if search():
                return True
            records.pop()
            covered.difference_update(created)
        failed.add(key)
        return False

    ok = search()
    return (ok, list(records)) if return_records else ok


# --------------------------------------------------------------------------
# language sampling (oracle)


def generate_language_sample(tgg: TGG, max_elements, measure=None, rules=None):
    """Breadth-first enumeration of derivable graphs, deduplicated up to
    isomorphism.  ``measure`` maps a graph to its size (default: number of
    elements); ``rules`` overrides the rule set (e.g. source rules)."""
    from .iso import canonical_key, isomorphic

    sized = measure is None
    measure = measure or len
    rules = rules if rules is not None else tgg.rules
    start = tgg.start.copy()
    if rules and all(isinstance(r, SourceRule) for r in rules):
        start = TripleGraph(source=tgg.start.source.copy())
    if measure(start) > max_elements:
        return []
    found = {canonical_key(start): [start]}
    frontier = [start]
    counter = 0
    while frontier:
        nxt = []
        for g in frontier:
            for r in rules:
                if sized and measure(g) + len(r.created) > max_elements:
                    continue
                for m in iter_injective_morphisms(r.lhs, g):
                    h = g.copy()
                    counter += 1
                    apply(r, Match(r, m, h), h, ids={x: f"g{counter}_{x}" for x in r.created})
                    if measure(h) > max_elements:
                        continue
                    key = canonical_key(h)
                    bucket = found.setdefault(key, [])
                    if any(isomorphic(h, o) for o in bucket):
                        continue
                    bucket.append(h)
                    nxt.append(h)
        frontier = nxt
    return [g for bucket in found.values() for g in bucket]
