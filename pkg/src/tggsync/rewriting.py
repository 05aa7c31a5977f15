"""Double-pushout rules over triple graphs, NACs, inversion and NAC shifting.

Rules are spans ``L <- K -> R`` given by id inclusion: ``K`` is exactly the
set of elements that ``L`` and ``R`` share by id.  NAC graphs contain ``L``
by id as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import (
    COMPONENTS,
    CORR,
    SOURCE,
    TARGET,
    GraphError,
    PartialTripleGraph,
    TripleGraph,
    as_triple,
    has_injective_morphism,
    iter_injective_morphisms,
)


class NotApplicable(GraphError):
    pass


class HasNACs(GraphError):
    pass


class InvalidRule(GraphError):
    pass


class NAC:
    def __init__(self, graph: TripleGraph, name="nac"):
        self.graph = graph
        self.name = name

    def extra_ids(self, lhs):
        return self.graph.ids() - lhs.ids()

    def __repr__(self):
        return f"NAC({self.name}, {len(self.graph)} elements)"


class Rule:
    """A rule ``L <- K -> R`` with NACs and attribute-equality constraints.

    ``attr_eqs`` holds tuples ``(a, attr_a, b, attr_b)``: after an
    application the value of ``b.attr_b`` is copied from ``a.attr_a``.
    """

    def __init__(self, name, lhs, rhs, nacs=(), attr_eqs=(), meta=None):
        self.name = name
        self.lhs = as_triple(lhs)
        self.rhs = as_triple(rhs)
        self.nacs = list(nacs)
        self.attr_eqs = list(attr_eqs)
        self.meta = dict(meta or {})
        self._check()

    def _check(self):
        for x in self.kernel_ids:
            a, b = self.lhs.element(x), self.rhs.element(x)
            if self.lhs.component_of(x) != self.rhs.component_of(x) or a.type != b.type:
                raise InvalidRule(f"{self.name}: preserved element {x} changes kind or type")
            if hasattr(a, "src") != hasattr(b, "src"):
                raise InvalidRule(f"{self.name}: preserved element {x} changes kind")
            if hasattr(a, "src") and (a.src, a.trg) != (b.src, b.trg):
                raise InvalidRule(f"{self.name}: preserved edge {x} changes endpoints")
        for nac in self.nacs:
            lhs_ids = self.lhs.ids()
            if not lhs_ids <= nac.graph.ids():
                raise InvalidRule(f"{self.name}: NAC {nac.name} does not contain the LHS")

    @property
    def kernel_ids(self):
        return self.lhs.ids() & self.rhs.ids()

    @property
    def deleted(self):
        return self.lhs.ids() - self.rhs.ids()

    @property
    def created(self):
        return self.rhs.ids() - self.lhs.ids()

    def is_monotonic(self):
        return not self.deleted

    def kernel(self):
        keep = self.kernel_ids
        return restrict(self.rhs, keep)

    def created_in(self, comp):
        return self.created & self.rhs.component(comp).ids()

    def deleted_in(self, comp):
        return self.deleted & self.lhs.component(comp).ids()

    def copy(self, name=None, nacs=None):
        return Rule(
            name or self.name,
            self.lhs.copy(),
            self.rhs.copy(),
            self.nacs if nacs is None else nacs,
            self.attr_eqs,
            self.meta,
        )

    def __repr__(self):
        return f"Rule({self.name}, -{len(self.deleted)} +{len(self.created)}, {len(self.nacs)} NACs)"


def restrict(g: TripleGraph, keep) -> TripleGraph:
    """Subgraph of ``g`` induced by the element ids ``keep`` (edges need their
    endpoints; sigma/tau are restricted accordingly)."""
    keep = set(keep)
    cls = type(g)
    out = cls()
    for c in COMPONENTS:
        comp = g.component(c)
        for n in comp.nodes.values():
            if n.id in keep:
                out.add_node(c, n.id, n.type, n.attrs)
        for e in comp.edges.values():
            if e.id in keep:
                out.add_edge(c, e.id, e.type, e.src, e.trg)
    for c, s in g.sigma.items():
        if c in keep and s in keep:
            out.set_sigma(c, s)
    for c, t in g.tau.items():
        if c in keep and t in keep:
            out.set_tau(c, t)
    return out


@dataclass
class Match:
    rule: Rule
    mapping: dict
    host: object = None

    def __getitem__(self, x):
        return self.mapping[x]

    def image(self, ids=None):
        if ids is None:
            return set(self.mapping.values())
        return {self.mapping[x] for x in ids if x in self.mapping}

    def key(self):
        return (self.rule.name, tuple(sorted(self.mapping.items())))


@dataclass
class Application:
    match: Match
    comatch: dict
    deleted: set
    created: set
    host: object = None
    implicit: set = field(default_factory=set)
    # removed elements: (component, element, sigma, tau, incoming links)
    _removed: list = field(default_factory=list, repr=False)

    @property
    def rule(self):
        return self.match.rule


def find_matches(rule: Rule, host, fixed=None, check_nacs=True, implicit_delete=False):
    """All matches of ``rule`` at which it is applicable, in deterministic order."""
    keys = sorted(rule.lhs.ids())
    out = []
    for m in iter_injective_morphisms(rule.lhs, host, fixed):
        match = Match(rule, m, host)
        ok, _ = is_applicable(rule, match, host, check_nacs=check_nacs, implicit_delete=implicit_delete)
        if ok:
            out.append(match)
    out.sort(key=lambda mt: [mt.mapping[k] for k in keys])
    return out


def _source_only(rule):
    for g in (rule.lhs, rule.rhs):
        if len(g.corr) or len(g.target):
            return False
    return True


def dangling(rule: Rule, match: Match, host) -> set:
    """Host elements outside the match that would dangle after deletion."""
    host = as_triple(host)
    doomed = {match.mapping[x] for x in rule.deleted}
    bad = set()
    for c in COMPONENTS:
        g = host.component(c)
        for x in doomed:
            if x in g.nodes:
                bad |= {e for e in g.incident(x) if e not in doomed}
    if not _source_only(rule):
        for x in doomed:
            for c in host.sigma_preimage(x) | host.tau_preimage(x):
                if c not in doomed:
                    bad.add(c)
    return bad


def violated_nacs(rule: Rule, match: Match, host) -> list:
    return [nac for nac in rule.nacs if has_injective_morphism(nac.graph, host, match.mapping)]


def is_applicable(rule: Rule, match: Match, host=None, check_nacs=True, implicit_delete=False):
    """Return ``(ok, reason)``; reason is '' when applicable."""
    host = as_triple(host if host is not None else match.host)
    values = list(match.mapping.values())
    if len(set(values)) != len(values):
        return False, "match is not injective"
    bad = dangling(rule, match, host)
    if bad:
        if not implicit_delete or any(host.component_of(b) == CORR and b not in host.corr.edges for b in bad):
            return False, f"dangling: {', '.join(sorted(bad))}"
    if check_nacs:
        for nac in violated_nacs(rule, match, host):
            return False, f"NAC {nac.name} violated"
    return True, ""


def apply(rule: Rule, match: Match, host=None, implicit_delete=False, ids=None, check_nacs=True):
    """Apply ``rule`` in place at ``match``.

    ``ids`` optionally fixes host ids for created elements (rule id -> host
    id); otherwise fresh ids come from the host's counter, prefixed by the rule
    name.
    """
    host = as_triple(host if host is not None else match.host)
    ok, why = is_applicable(rule, match, host, check_nacs=check_nacs, implicit_delete=implicit_delete)
    if not ok:
        raise NotApplicable(f"{rule.name}: {why}")
    m = match.mapping
    doomed = {m[x] for x in rule.deleted}
    implicit = dangling(rule, match, host) if implicit_delete else set()
    app = Application(match, {}, doomed | implicit, set(), host, implicit)
    order = sorted(x for x in doomed | implicit if host.element(x) is not None and hasattr(host.element(x), "src"))
    order += sorted(x for x in doomed | implicit if x not in set(order))
    for x in order:
        comp = host.component_of(x)
        el = host.element(x)
        links = (sorted(host.sigma_preimage(x)), sorted(host.tau_preimage(x)))
        app._removed.append((comp, _clone(el), host.sigma.get(x), host.tau.get(x), links))
        host.remove(x)
    comatch = {x: m[x] for x in rule.kernel_ids}
    ids = ids or {}
    for c in COMPONENTS:
        g = rule.rhs.component(c)
        for n in sorted(g.nodes):
            if n in comatch:
                continue
            new = ids.get(n) or host.fresh_id(rule.name)
            host.add_node(c, new, g.nodes[n].type, g.nodes[n].attrs)
            comatch[n] = new
    for c in COMPONENTS:
        g = rule.rhs.component(c)
        for e in sorted(g.edges):
            if e in comatch:
                continue
            ed = g.edges[e]
            new = ids.get(e) or host.fresh_id(rule.name)
            host.add_edge(c, new, ed.type, comatch[ed.src], comatch[ed.trg])
            comatch[e] = new
    for name in ("sigma", "tau"):
        rmap = getattr(rule.rhs, name)
        hmap = getattr(host, name)
        setter = host.set_sigma if name == "sigma" else host.set_tau
        for cx, x in rmap.items():
            hc, hx = comatch[cx], comatch[x]
            if hmap.get(hc) != hx:
                setter(hc, hx)
    app.comatch = comatch
    app.created = set(comatch.values()) - {m[x] for x in rule.kernel_ids}
    propagate_attributes(rule, comatch, host, only=app.created)
    return app


def propagate_attributes(rule, comatch, host, only=None):
    """Copy attribute values along the rule's equality constraints.

    Returns the list of (host node, attribute) pairs that changed."""
    changed = []
    for a, aa, b, ba in rule.attr_eqs:
        if a not in comatch or b not in comatch:
            continue
        ha, hb = comatch[a], comatch[b]
        if only is not None and hb not in only:
            continue
        na, nb = host.element(ha), host.element(hb)
        if na is None or nb is None or aa not in na.attrs:
            continue
        if nb.attrs.get(ba) != na.attrs[aa]:
            nb.attrs[ba] = na.attrs[aa]
            changed.append((hb, ba))
    return changed


def _clone(el):
    if hasattr(el, "src"):
        return type(el)(el.id, el.type, el.src, el.trg)
    return type(el)(el.id, el.type, dict(el.attrs))


def undo(app: Application, host=None):
    """Revert an application in place (created elements removed, deleted
    elements restored with their correspondence links)."""
    host = as_triple(host if host is not None else app.host)
    created = sorted(app.created, key=lambda x: (not hasattr(host.element(x), "src"), x))
    for x in created:
        host.remove(x)
    for comp, el, s, t, links in reversed(app._removed):
        if hasattr(el, "src"):
            host.add_edge(comp, el.id, el.type, el.src, el.trg)
        else:
            host.add_node(comp, el.id, el.type, el.attrs)
    for comp, el, s, t, (spre, tpre) in app._removed:
        if s is not None:
            host.set_sigma(el.id, s)
        if t is not None:
            host.set_tau(el.id, t)
        for c in spre:
            if c in host.corr:
                host.set_sigma(c, el.id)
        for c in tpre:
            if c in host.corr:
                host.set_tau(c, el.id)


def invert(rule: Rule) -> Rule:
    if rule.nacs:
        raise HasNACs(f"{rule.name} has NACs")
    name = rule.name[:-3] if rule.name.endswith("^-1") else rule.name + "^-1"
    eqs = rule.attr_eqs
    return Rule(name, rule.rhs.copy(), rule.lhs.copy(), (), eqs, rule.meta)


# --------------------------------------------------------------------------
# shifting NACs along inclusions


def shift_nac(nac: NAC, lhs: TripleGraph, target: TripleGraph, inclusion=None):
    """Shift ``nac`` (over ``lhs``) along an injective map ``lhs -> target``.

    Enumerates all jointly surjective overlaps of the NAC graph and ``target``
    over ``lhs`` that stay injective on the NAC graph.  A match ``m'`` of
    ``target`` satisfies every returned NAC iff ``m' o inclusion`` satisfies
    ``nac``.
    """
    inc = dict(inclusion) if inclusion is not None else {x: x for x in lhs.ids()}
    N = nac.graph
    extra_nodes = sorted((c, n) for c in COMPONENTS for n in N.component(c).nodes if n not in inc)
    extra_edges = sorted((c, e) for c in COMPONENTS for e in N.component(c).edges if e not in inc)
    taken = set(inc.values())
    results = []
    seen = set()

    def node_options(c, n, glue):
        yield None
        pn = N.component(c).nodes[n]
        for t in sorted(target.component(c).nodes.values(), key=lambda t: t.id):
            if t.id in taken or t.id in glue.values() or t.type != pn.type:
                continue
            if any(t.attrs.get(a) != v for a, v in pn.attrs.items()):
                continue
            yield t.id

    def edge_options(c, e, glue):
        yield None
        pe = N.component(c).edges[e]
        s = glue.get(pe.src, inc.get(pe.src))
        t = glue.get(pe.trg, inc.get(pe.trg))
        if s is None or t is None:
            return
        for te in sorted(target.component(c).edges.values(), key=lambda x: x.id):
            if te.id in taken or te.id in glue.values() or te.type != pe.type:
                continue
            if te.src == s and te.trg == t:
                yield te.id

    def rec_nodes(i, glue):
        if i == len(extra_nodes):
            yield from rec_edges(0, glue)
            return
        c, n = extra_nodes[i]
        for opt in node_options(c, n, glue):
            if opt is not None:
                glue[n] = opt
            yield from rec_nodes(i + 1, glue)
            glue.pop(n, None)

    def rec_edges(i, glue):
        if i == len(extra_edges):
            yield dict(glue)
            return
        c, e = extra_edges[i]
        for opt in edge_options(c, e, glue):
            if opt is not None:
                glue[e] = opt
            yield from rec_edges(i + 1, glue)
            glue.pop(e, None)

    for glue in rec_nodes(0, {}):
        built = _build_shifted(N, inc, glue, target)
        if built is None:
            continue
        graph, sig = built
        if sig in seen:
            continue
        seen.add(sig)
        results.append(graph)
    out = []
    for i, g in enumerate(results):
        name = nac.name if len(results) == 1 else f"{nac.name}.{i + 1}"
        out.append(NAC(g, name))
    return out


def _build_shifted(N, inc, glue, target):
    """Glue ``N`` onto ``target``; returns (graph, signature) or None if the
    correspondence maps become inconsistent."""
    phi = dict(inc)
    phi.update(glue)
    g = target.copy()
    if not isinstance(g, PartialTripleGraph) and not target.is_total():
        g = PartialTripleGraph(g.source, g.corr, g.target, g.sigma, g.tau)
    for c in COMPONENTS:
        comp = N.component(c)
        for n in sorted(comp.nodes):
            if n in phi:
                continue
            new = n if n not in g else _fresh_name(g, n)
            g.add_node(c, new, comp.nodes[n].type, comp.nodes[n].attrs)
            phi[n] = new
    for c in COMPONENTS:
        comp = N.component(c)
        for e in sorted(comp.edges):
            if e in phi:
                continue
            ed = comp.edges[e]
            new = e if e not in g else _fresh_name(g, e)
            g.add_edge(c, new, ed.type, phi[ed.src], phi[ed.trg])
            phi[e] = new
    for name in ("sigma", "tau"):
        nmap, gmap = getattr(N, name), getattr(g, name)
        setter = g.set_sigma if name == "sigma" else g.set_tau
        for cx, x in nmap.items():
            hc, hx = phi[cx], phi[x]
            if hc in gmap and gmap[hc] != hx:
                return None
            setter(hc, hx)
    extra = tuple(sorted((k, v) for k, v in glue.items()))
    return g, extra


def _fresh_name(g, base):
    i = 1
    while f"{base}'{i}" in g:
        i += 1
    return f"{base}'{i}"


def satisfies_nacs(nacs, host, mapping) -> bool:
    return not any(has_injective_morphism(n.graph, host, mapping) for n in nacs)


# --------------------------------------------------------------------------
# sequential independence


def _before(app: Application):
    """Reconstruct the host as it was before ``app`` (on a copy)."""
    g = app.host.copy()
    undo(app, g)
    return g


def sequentially_independent(app1: Application, m2: Match, detail=False):
    """Check that ``app1`` followed by ``m2`` can be swapped.

    Four conditions: t2 matches nothing t1 created; t2 deletes nothing t1
    matched; t2 creates nothing that t1's NACs forbid; t1 deleted nothing
    that t2's NACs forbid.
    """
    r2 = m2.rule
    reasons = []
    img2 = set(m2.mapping.values())
    if img2 & app1.created:
        reasons.append("t2 matches an element created by t1")
    kept1 = {app1.comatch[x] for x in app1.rule.kernel_ids}
    del2 = {m2.mapping[x] for x in r2.deleted}
    if del2 & kept1:
        reasons.append("t2 deletes an element matched by t1")
    if not reasons:
        g0 = _before(app1)
        m1 = Match(app1.rule, app1.match.mapping, g0)
        # t2 first ...
        ok2, why2 = is_applicable(r2, Match(r2, m2.mapping, g0), g0)
        if not ok2:
            reasons.append(f"t1 deletes an element t2 forbids ({why2})")
        else:
            g1 = g0.copy()
            apply(r2, Match(r2, m2.mapping, g1), g1)
            ok1, why1 = is_applicable(app1.rule, Match(app1.rule, m1.mapping, g1), g1)
            if not ok1:
                reasons.append(f"t2 creates an element t1 forbids ({why1})")
    if detail:
        return not reasons, reasons
    return not reasons
