"""Short-cut rules: common kernels, construction, and repair rules.

A short-cut rule replaces an application of ``r1`` (the replaced rule) by an
application of ``r2`` (the replacing rule).  Elements both rules create and
that the chosen common kernel identifies are preserved; the rest of ``r1``'s
created elements is deleted and the rest of ``r2``'s created elements is
created.
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
)
from .rewriting import NAC, Rule, restrict, shift_nac
from .tgg import SourceRule, base_name

MINIMAL, MAXIMAL = "minimal", "maximal"
STRATEGIES = (MINIMAL, MAXIMAL)
_ALIASES = {"min": MINIMAL, "max": MAXIMAL, MINIMAL: MINIMAL, MAXIMAL: MAXIMAL}


class EmptyCreatedOverlap(GraphError):
    pass


class InvalidOverlap(GraphError):
    pass


def strategy_name(s):
    try:
        return _ALIASES[s]
    except KeyError:
        raise ValueError(f"unknown overlap strategy {s!r}") from None


# --------------------------------------------------------------------------
# kernels and the overlap problem


@dataclass(frozen=True)
class CommonKernel:
    """Pairs ``(x1, x2)`` of elements of ``R1`` and ``R2`` that are identified.

    ``L∩`` is the part of the pairs lying in both left-hand sides."""

    r1: Rule
    r2: Rule
    pairs: tuple
    strategy: str = ""

    @property
    def l_cap(self):
        return tuple(p for p in self.pairs if p[0] in self.r1.lhs.ids() and p[1] in self.r2.lhs.ids())

    @property
    def r_cap(self):
        return self.pairs

    @property
    def created_overlap(self):
        return tuple(p for p in self.pairs if p[0] in self.r1.created)

    def key(self):
        return (self.r1.name, self.r2.name, self.pairs)


def _kind(g, x):
    return "edge" if hasattr(g.element(x), "src") else "node"


def kernel_diagnostics(kernel: CommonKernel):
    """Why a pair set is not a valid common kernel (empty list if it is)."""
    r1, r2 = kernel.r1, kernel.r2
    out = []
    m12, m21 = {}, {}
    for a, b in kernel.pairs:
        if a in m12 or b in m21:
            out.append(f"{a}/{b} breaks injectivity")
        m12[a], m21[b] = b, a
    for a, b in kernel.pairs:
        c1, c2 = r1.rhs.component_of(a), r2.rhs.component_of(b)
        if c1 is None or c2 is None or c1 != c2:
            out.append(f"{a}/{b} lie in different components")
            continue
        e1, e2 = r1.rhs.element(a), r2.rhs.element(b)
        if _kind(r1.rhs, a) != _kind(r2.rhs, b) or e1.type != e2.type:
            out.append(f"{a}/{b} differ in kind or type")
            continue
        if (a in r1.created) != (b in r2.created):
            out.append(f"{a}/{b} pairs a created element with a context element")
        if hasattr(e1, "src"):
            if m12.get(e1.src) != e2.src or m12.get(e1.trg) != e2.trg:
                out.append(f"edge pair {a}/{b} without its endpoints")
        for name in ("sigma", "tau"):
            s1, s2 = getattr(r1.rhs, name).get(a), getattr(r2.rhs, name).get(b)
            if s1 is not None and s2 is not None and m12.get(s1) != s2:
                out.append(f"corr pair {a}/{b} without its {name} partners")
    return out


@dataclass
class OverlapProblem:
    """0/1 program: maximise the number of activated candidate pairs subject
    to at most one pair per element and edge/corr pairs implying the pairs of
    their endpoints/partners."""

    r1: Rule
    r2: Rule
    strategy: str
    candidates: list  # sorted (x1, x2) pairs
    groups: dict  # ("1", x1) / ("2", x2) -> candidate indices
    implies: list  # (i, j): m_i <= m_j

    def objective(self, chosen):
        return len(chosen)

    def feasible(self, chosen):
        s = set(chosen)
        for idx in self.groups.values():
            if sum(1 for i in idx if i in s) > 1:
                return False
        return all(j in s for i, j in self.implies if i in s)


def build_overlap_problem(r1: Rule, r2: Rule, strategy=MAXIMAL) -> OverlapProblem:
    strategy = strategy_name(strategy)
    cands = set()
    for c in COMPONENTS:
        g1, g2 = r1.rhs.component(c), r2.rhs.component(c)
        for kind, e1s, e2s in (("node", g1.nodes, g2.nodes), ("edge", g1.edges, g2.edges)):
            for a, ea in e1s.items():
                for b, eb in e2s.items():
                    if ea.type != eb.type:
                        continue
                    ca, cb = a in r1.created, b in r2.created
                    if ca and cb:
                        cands.add((a, b))
                    elif not ca and not cb and strategy == MAXIMAL:
                        cands.add((a, b))

    def deps(pair):
        a, b = pair
        e1, e2 = r1.rhs.element(a), r2.rhs.element(b)
        out = []
        if hasattr(e1, "src"):
            out += [(e1.src, e2.src), (e1.trg, e2.trg)]
        for name in ("sigma", "tau"):
            s1, s2 = getattr(r1.rhs, name).get(a), getattr(r2.rhs, name).get(b)
            if (s1 is None) != (s2 is None):
                out.append(None)
            elif s1 is not None:
                out.append((s1, s2))
        return out

    changed = True
    while changed:
        changed = False
        for p in sorted(cands):
            if any(d is None or d not in cands for d in deps(p)):
                cands.discard(p)
                changed = True
    cand_list = sorted(cands)
    index = {p: i for i, p in enumerate(cand_list)}
    groups = {}
    for i, (a, b) in enumerate(cand_list):
        groups.setdefault(("1", a), []).append(i)
        groups.setdefault(("2", b), []).append(i)
    implies = sorted({(index[p], index[d]) for p in cand_list for d in deps(p) if d is not None})
    return OverlapProblem(r1, r2, strategy, cand_list, groups, implies)


def solve_overlap(problem: OverlapProblem, all_ties=False):
    """Exact branch and bound with unit propagation.

    Variables are visited in candidate order and tried with value 1 first,
    so the first optimum found is the lexicographically least pair set.
    Returns a :class:`CommonKernel`, or all tied optima when ``all_ties``.
    """
    n = len(problem.candidates)
    conflicts = [set() for _ in range(n)]
    for idx in problem.groups.values():
        for i in idx:
            conflicts[i].update(j for j in idx if j != i)
    requires = [set() for _ in range(n)]
    required_by = [set() for _ in range(n)]
    for i, j in problem.implies:
        requires[i].add(j)
        required_by[j].add(i)
    val = [None] * n
    best = [-1]
    sols = []

    def assign(i, v, trail):
        queue = [(i, v)]
        while queue:
            k, x = queue.pop()
            if val[k] is not None:
                if val[k] != x:
                    return False
                continue
            val[k] = x
            trail.append(k)
            if x == 1:
                queue += [(j, 0) for j in conflicts[k]]
                queue += [(j, 1) for j in requires[k]]
            else:
                queue += [(j, 0) for j in required_by[k]]
        return True

    def undo(trail):
        for k in trail:
            val[k] = None

    def search(pos):
        ones = sum(1 for v in val if v == 1)
        free = sum(1 for v in val if v is None)
        bound = ones + free
        if bound < best[0] or (bound == best[0] and not all_ties):
            return
        while pos < n and val[pos] is not None:
            pos += 1
        if pos == n:
            chosen = tuple(problem.candidates[i] for i in range(n) if val[i] == 1)
            if ones > best[0]:
                best[0] = ones
                sols.clear()
            sols.append(chosen)
            return
        for v in (1, 0):
            trail = []
            if assign(pos, v, trail):
                search(pos + 1)
            undo(trail)

    search(0)
    kernels = [CommonKernel(problem.r1, problem.r2, s, problem.strategy) for s in sols]
    if all_ties:
        return kernels
    return kernels[0] if kernels else CommonKernel(problem.r1, problem.r2, (), problem.strategy)


# --------------------------------------------------------------------------
# short-cut rules


class ShortcutRule(Rule):
    def __init__(self, name, lhs, rhs, attr_eqs=(), kernel=None, names1=None, names2=None, stem=None):
        super().__init__(name, lhs, rhs, (), attr_eqs)
        self.kernel = kernel
        self.names1 = names1 or {}
        self.names2 = names2 or {}
        self.stem = stem or base_name(name)
        r1, r2 = kernel.r1, kernel.r2
        self.replaced, self.replacing = r1, r2
        self.recovered = frozenset(self.names1[a] for a, b in kernel.pairs if a in r1.created)
        mapped2 = {b for _, b in kernel.pairs}
        self.presumed = frozenset(self.names2[b] for b in r2.lhs.ids() if b not in mapped2)


def _element_names(kernel):
    r1, r2 = kernel.r1, kernel.r2
    ids1, ids2 = r1.rhs.ids(), r2.rhs.ids()
    m12 = dict(kernel.pairs)
    m21 = {b: a for a, b in kernel.pairs}
    n1, n2 = {}, {}
    for a in sorted(ids1):
        if a in m12:
            b = m12[a]
            n1[a] = a if a == b else f"{a}/{b}"
            n2[b] = n1[a]
        else:
            n1[a] = f"o.{a}" if a in ids2 else a
    for b in sorted(ids2):
        if b not in m21:
            n2[b] = f"n.{b}" if b in ids1 else b
    return n1, n2


def _embed(into: TripleGraph, g: TripleGraph, names, only=None):
    """Copy the elements of ``g`` (restricted to ``only``) into ``into`` under
    ``names``, skipping elements already present."""
    ids = g.ids() if only is None else set(only)
    for c in COMPONENTS:
        comp = g.component(c)
        for n in sorted(comp.nodes):
            if n in ids and names[n] not in into:
                into.add_node(c, names[n], comp.nodes[n].type, comp.nodes[n].attrs)
    for c in COMPONENTS:
        comp = g.component(c)
        for e in sorted(comp.edges):
            if e in ids and names[e] not in into:
                ed = comp.edges[e]
                into.add_edge(c, names[e], ed.type, names[ed.src], names[ed.trg])
    for cx, x in g.sigma.items():
        if cx in ids and x in ids:
            into.set_sigma(names[cx], names[x])
    for cx, x in g.tau.items():
        if cx in ids and x in ids:
            into.set_tau(names[cx], names[x])


def _rename_eqs(eqs, names):
    return [(names[a], aa, names[b], ba) for a, aa, b, ba in eqs if a in names and b in names]


def default_stem(kernel):
    tag = {MINIMAL: "min", MAXIMAL: "max"}.get(kernel.strategy, "custom")
    return f"{base_name(kernel.r1.name)}-To-{base_name(kernel.r2.name)}-{tag}"


def build_shortcut_rule(kernel: CommonKernel, stem=None) -> ShortcutRule:
    """Glue both rules along the kernel.

    LHS = L∪ glued with R1, RHS = L∪ glued with R2, interface = L∪ plus the
    recovered elements."""
    problems = kernel_diagnostics(kernel)
    if problems:
        raise InvalidOverlap("; ".join(problems))
    if not kernel.created_overlap:
        raise EmptyCreatedOverlap(f"{kernel.r1.name}/{kernel.r2.name}: no created element is overlapped")
    r1, r2 = kernel.r1, kernel.r2
    n1, n2 = _element_names(kernel)
    lhs, rhs = TripleGraph(), TripleGraph()
    _embed(lhs, r1.rhs, n1)
    _embed(lhs, r2.lhs, n2)
    _embed(rhs, r1.lhs, n1)
    _embed(rhs, r2.rhs, n2)
    stem = stem or default_stem(kernel)
    return ShortcutRule(
        f"{stem}-SC-Rule", lhs, rhs, _rename_eqs(r2.attr_eqs, n2), kernel, n1, n2, stem
    )


def build_concurrent_rule(r1: Rule, r2: Rule, dependency, name=None) -> Rule:
    """Monotonic rule performing ``r1`` and then ``r2`` in one step.

    ``dependency`` maps context elements of ``r2`` onto elements of ``R1``.
    Other elements of ``r2`` whose ids clash get a numeric suffix."""
    dep = dict(dependency)
    if len(set(dep.values())) != len(dep):
        raise InvalidOverlap("dependency is not injective")
    for b, a in dep.items():
        if b not in r2.lhs.ids():
            raise InvalidOverlap(f"{b} is not a context element of {r2.name}")
        if a not in r1.rhs.ids():
            raise InvalidOverlap(f"{a} is not an element of {r1.name}")
        if r1.rhs.component_of(a) != r2.lhs.component_of(b) or r1.rhs.element(a).type != r2.lhs.element(b).type:
            raise InvalidOverlap(f"{b} and {a} differ in component or type")
        if _kind(r1.rhs, a) != _kind(r2.lhs, b):
            raise InvalidOverlap(f"{b} and {a} differ in kind")
        eb = r2.lhs.element(b)
        if hasattr(eb, "src"):
            ea = r1.rhs.element(a)
            if dep.get(eb.src) != ea.src or dep.get(eb.trg) != ea.trg:
                raise InvalidOverlap(f"edge {b} mapped without matching endpoints")
    for name_, g in (("sigma", r2.lhs.sigma), ("tau", r2.lhs.tau)):
        for cx, x in g.items():
            if cx in dep and x in dep and getattr(r1.rhs, name_).get(dep[cx]) != dep[x]:
                raise InvalidOverlap(f"corr element {cx} mapped inconsistently")
    n1 = {x: x for x in r1.rhs.ids()}
    n2 = {}
    taken = set(n1)
    for b in sorted(r2.rhs.ids()):
        if b in dep:
            n2[b] = dep[b]
        else:
            new, i = b, 1
            while new in taken:
                i += 1
                new = f"{b}{i}"
            n2[b] = new
            taken.add(new)
    lhs, rhs = TripleGraph(), TripleGraph()
    _embed(lhs, r1.lhs, n1)
    _embed(lhs, r2.lhs, n2, only=[b for b in r2.lhs.ids() if b not in dep])
    _embed(rhs, r1.rhs, n1)
    _embed(rhs, r2.rhs, n2)
    eqs = list(r1.attr_eqs) + _rename_eqs(r2.attr_eqs, n2)
    name = name or f"{base_name(r1.name)}-{base_name(r2.name)}-Concurrent-Rule"
    if not lhs.ids() <= rhs.ids():
        raise InvalidOverlap("concurrent rule would not be monotonic")
    return Rule(name, lhs, rhs, (), eqs, {"concurrent": (r1.name, r2.name, tuple(sorted(dep.items())))})


# --------------------------------------------------------------------------
# operationalization


class RepairRule(Rule):
    """Forward operationalization of a short-cut rule.

    ``marking``/``required`` describe the replacing rule's application after
    the repair, in this rule's element ids."""

    def __init__(self, name, lhs, rhs, nacs, attr_eqs, shortcut: ShortcutRule, forward_nacs=()):
        super().__init__(name, lhs, rhs, nacs, attr_eqs)
        sc = shortcut
        r1, r2 = sc.replaced, sc.replacing
        self.shortcut = sc
        self.replaced = r1.name
        self.replacing = r2.name
        self.presumed = sc.presumed
        self.recovered = sc.recovered
        self.creation_elements = frozenset(sc.created & sc.rhs.source.ids())
        self.names1 = sc.names1
        self.names2 = sc.names2
        self.reversing = frozenset(sc.names1[x] for x in r1.rhs.ids()) & lhs.ids()
        self.marking = frozenset(sc.names2[x] for x in r2.created & r2.rhs.source.ids())
        self.required = frozenset(sc.names2[x] for x in r2.lhs.source.ids())
        # r1 source elements the edit must have deleted for this rule to fit
        self.deleted_replaced_source = frozenset(
            x for x in r1.rhs.source.ids() if sc.names1[x] not in sc.rhs.source.ids()
        )


def operationalize_shortcut(sc: ShortcutRule, tgg):
    """Return the short-cut source rule and the repair rule of ``sc``."""
    src = SourceRule(
        f"{sc.stem}-Source-Rule",
        restrict(sc.lhs, sc.lhs.source.ids()),
        restrict(sc.rhs, sc.rhs.source.ids()),
        base=sc,
        domain=SOURCE,
        marking=sc.created & sc.rhs.source.ids(),
        required=sc.lhs.source.ids(),
    )
    rs = sc.rhs.source.ids()
    lhs = PartialTripleGraph()
    for comp, graph, keep in (
        (SOURCE, sc.rhs.source, rs),
        (CORR, sc.lhs.corr, sc.lhs.corr.ids()),
        (TARGET, sc.lhs.target, sc.lhs.target.ids()),
    ):
        for n in sorted(graph.nodes):
            lhs.add_node(comp, n, graph.nodes[n].type, graph.nodes[n].attrs)
        for e in sorted(graph.edges):
            ed = graph.edges[e]
            lhs.add_edge(comp, e, ed.type, ed.src, ed.trg)
    for cx, x in sc.lhs.sigma.items():
        if x in rs:
            lhs.set_sigma(cx, x)
    for cx, x in sc.lhs.tau.items():
        lhs.set_tau(cx, x)
    rhs = sc.rhs.copy()
    fwd2 = tgg.forward(sc.replacing)
    inclusion = {x: sc.names2[x] for x in fwd2.lhs.ids()}
    nacs = []
    for nac in fwd2.nacs:
        for shifted in shift_nac(nac, fwd2.lhs, lhs, inclusion):
            nacs.append(shifted)
    # glued variants (fewest new elements) first, then by their new elements
    nacs.sort(key=lambda n: (len(n.graph.ids() - lhs.ids()), sorted(n.graph.ids() - lhs.ids())))
    nacs = [NAC(n.graph, f"nac{i + 1}") for i, n in enumerate(nacs)]
    rep = RepairRule(f"{sc.stem}-Repair-Rule", lhs, rhs, nacs, sc.attr_eqs, sc)
    return src, rep


# --------------------------------------------------------------------------
# catalog


@dataclass
class CatalogEntry:
    shortcut: ShortcutRule
    source_rule: SourceRule
    repair: RepairRule
    strategies: tuple
    declared: bool = False


@dataclass
class RepairCatalog:
    entries: list = field(default_factory=list)

    @property
    def repair_rules(self):
        return [e.repair for e in self.entries]

    def by_replaced(self, name):
        return [e.repair for e in self.entries if e.repair.replaced == name]

    def get(self, name):
        for e in self.entries:
            if name in (e.repair.name, e.shortcut.name, e.source_rule.name, e.shortcut.stem):
                return e
        raise KeyError(name)

    def suitable(self, replaced, deleted_source):
        """Repair rules replacing ``replaced`` whose source deletions are
        exactly ``deleted_source`` (ids of the replaced rule)."""
        deleted_source = frozenset(deleted_source)
        return [r for r in self.by_replaced(replaced) if r.deleted_replaced_source == deleted_source]

    def __len__(self):
        return len(self.entries)


def derive_repair_catalog(tgg, strategies=STRATEGIES, all_ties=False, declared=True):
    """Short-cut and repair rules for every ordered pair of TGG rules.

    Pairs whose kernel overlaps no created element are dropped; kernels found
    by several strategies appear once.  Short-cuts declared by the grammar
    (named overlaps, explicit kernels, concurrent rules) are merged in."""
    strategies = [strategy_name(s) for s in strategies]
    names = {}
    explicit = []
    if declared:
        for d in tgg.shortcuts:
            if d.get("pairs") is None:
                names[(d["replaced"], d["replacing"], strategy_name(d["strategy"]))] = d["name"]
            else:
                explicit.append(d)
    entries = []
    index = {}
    for r1 in tgg.rules:
        for r2 in tgg.rules:
            for strat in strategies:
                problem = build_overlap_problem(r1, r2, strat)
                kernels = solve_overlap(problem, all_ties=all_ties)
                kernels = kernels if all_ties else [kernels]
                for k_i, kernel in enumerate(kernels):
                    if not kernel.created_overlap:
                        continue
                    key = (r1.name, r2.name, kernel.pairs)
                    if key in index:
                        e = entries[index[key]]
                        e.strategies = e.strategies + (strat,)
                        alias = names.get((r1.name, r2.name, strat))
                        if alias and not e.declared:
                            entries[index[key]] = _entry(kernel, tgg, alias, e.strategies, True)
                        continue
                    alias = names.get((r1.name, r2.name, strat))
                    stem = alias or default_stem(kernel) + (f"-{k_i + 1}" if len(kernels) > 1 else "")
                    index[key] = len(entries)
                    entries.append(_entry(kernel, tgg, stem, (strat,), alias is not None))
    for d in explicit:
        r1 = _lookup_rule(tgg, d["replaced"])
        r2 = _lookup_rule(tgg, d["replacing"])
        kernel = CommonKernel(r1, r2, tuple(sorted(d["pairs"])), "custom")
        entries.append(_entry(kernel, tgg, d["name"], ("custom",), True))
    return RepairCatalog(entries)


def _lookup_rule(tgg, name):
    for r in list(tgg.rules) + list(getattr(tgg, "derived_rules", [])):
        if r.name == name:
            return r
    raise KeyError(name)


def _entry(kernel, tgg, stem, strategies, declared):
    sc = build_shortcut_rule(kernel, stem)
    src, rep = operationalize_shortcut(sc, tgg)
    return CatalogEntry(sc, src, rep, tuple(strategies), declared)
