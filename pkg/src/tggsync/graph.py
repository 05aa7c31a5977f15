"""Typed graphs, triple graphs and injective matching.

Every element (node or edge) of a triple graph carries an opaque string id
that is unique across all three components.  A triple graph keeps its two
correspondence morphisms as plain dicts from correspondence element ids to
source/target element ids; a key missing from the dict means the morphism is
undefined there, which is how partial triple graphs are represented.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

SOURCE, CORR, TARGET = "source", "corr", "target"
COMPONENTS = (SOURCE, CORR, TARGET)


class GraphError(Exception):
    pass


class DanglingError(GraphError):
    def __init__(self, edges):
        self.edges = sorted(edges)
        super().__init__(f"dangling edges: {', '.join(self.edges)}")


class SharedNotSubgraph(GraphError):
    pass


# --------------------------------------------------------------------------
# type graphs


@dataclass
class TypeGraph:
    node_types: set = field(default_factory=set)
    edge_types: dict = field(default_factory=dict)  # name -> (src type, trg type)
    attrs: dict = field(default_factory=dict)  # node type -> set of names

    def add_node_type(self, name, attrs=()):
        self.node_types.add(name)
        self.attrs.setdefault(name, set()).update(attrs)

    def add_edge_type(self, name, src, trg):
        self.edge_types[name] = (src, trg)

    def diagnostics(self):
        out = []
        for name, (s, t) in sorted(self.edge_types.items()):
            for end in (s, t):
                if end not in self.node_types:
                    out.append(f"edge type {name} references unknown node type {end}")
        clash = self.node_types & set(self.edge_types)
        for name in sorted(clash):
            out.append(f"name {name} used for a node type and an edge type")
        return out


@dataclass
class TripleTypeGraph:
    source: TypeGraph = field(default_factory=TypeGraph)
    corr: TypeGraph = field(default_factory=TypeGraph)
    target: TypeGraph = field(default_factory=TypeGraph)
    sigma: dict = field(default_factory=dict)  # corr type -> source type
    tau: dict = field(default_factory=dict)  # corr type -> target type

    def component(self, name) -> TypeGraph:
        return getattr(self, name)

    def add_corr_type(self, name, src_type, trg_type):
        self.corr.add_node_type(name)
        self.sigma[name] = src_type
        self.tau[name] = trg_type

    def diagnostics(self):
        out = []
        for comp in COMPONENTS:
            out += [f"{comp}: {d}" for d in self.component(comp).diagnostics()]
        for name in sorted(self.corr.node_types):
            if self.sigma.get(name) not in self.source.node_types | set(self.source.edge_types):
                out.append(f"corr type {name} has no valid source type")
            if self.tau.get(name) not in self.target.node_types | set(self.target.edge_types):
                out.append(f"corr type {name} has no valid target type")
        return out


# --------------------------------------------------------------------------
# graphs


@dataclass
class Node:
    id: str
    type: str
    attrs: dict = field(default_factory=dict)


@dataclass
class Edge:
    id: str
    type: str
    src: str
    trg: str


class Graph:
    """A directed multigraph with typed nodes and edges."""

    def __init__(self):
        self.nodes: dict[str, Node] = {}
        self.edges: dict[str, Edge] = {}
        self._out: dict[str, set] = {}
        self._in: dict[str, set] = {}

    # construction -------------------------------------------------------
    def add_node(self, id, type, attrs=None):
        if id in self.nodes or id in self.edges:
            raise GraphError(f"duplicate id {id}")
        self.nodes[id] = Node(id, type, dict(attrs or {}))
        self._out[id] = set()
        self._in[id] = set()
        return self.nodes[id]

    def add_edge(self, id, type, src, trg):
        if id in self.nodes or id in self.edges:
            raise GraphError(f"duplicate id {id}")
        if src not in self.nodes or trg not in self.nodes:
            raise GraphError(f"edge {id} has a missing endpoint")
        self.edges[id] = Edge(id, type, src, trg)
        self._out[src].add(id)
        self._in[trg].add(id)
        return self.edges[id]

    def remove_edge(self, id):
        e = self.edges.pop(id)
        self._out[e.src].discard(id)
        self._in[e.trg].discard(id)

    def remove_node(self, id):
        if self._out[id] or self._in[id]:
            raise DanglingError(self._out[id] | self._in[id])
        del self.nodes[id]
        del self._out[id]
        del self._in[id]

    def remove(self, id):
        if id in self.edges:
            self.remove_edge(id)
        else:
            self.remove_node(id)

    # queries --------------------------------------------------------------
    def __contains__(self, id):
        return id in self.nodes or id in self.edges

    def __len__(self):
        return len(self.nodes) + len(self.edges)

    def ids(self):
        return set(self.nodes) | set(self.edges)

    def element(self, id):
        return self.nodes.get(id) or self.edges.get(id)

    def type_of(self, id):
        return self.element(id).type

    def out_edges(self, node):
        return self._out.get(node, ())

    def in_edges(self, node):
        return self._in.get(node, ())

    def incident(self, node):
        return self._out.get(node, set()) | self._in.get(node, set())

    def copy(self):
        g = Graph()
        for n in self.nodes.values():
            g.add_node(n.id, n.type, n.attrs)
        for e in self.edges.values():
            g.add_edge(e.id, e.type, e.src, e.trg)
        return g

    def signature(self):
        nodes = {n.id: (n.type, tuple(sorted(n.attrs.items()))) for n in self.nodes.values()}
        edges = {e.id: (e.type, e.src, e.trg) for e in self.edges.values()}
        return nodes, edges

    def __eq__(self, other):
        return isinstance(other, Graph) and self.signature() == other.signature()

    def __repr__(self):
        return f"Graph({len(self.nodes)} nodes, {len(self.edges)} edges)"


# --------------------------------------------------------------------------
# triple graphs


class TripleGraph:
    """Source, correspondence and target graph joined by sigma and tau."""

    partial = False

    def __init__(self, source=None, corr=None, target=None, sigma=None, tau=None):
        self.source = source if source is not None else Graph()
        self.corr = corr if corr is not None else Graph()
        self.target = target if target is not None else Graph()
        self.sigma: dict[str, str] = {}
        self.tau: dict[str, str] = {}
        self._sigma_inv: dict[str, set] = {}
        self._tau_inv: dict[str, set] = {}
        self._counter = 0
        self._seen: set = set()
        for c, s in (sigma or {}).items():
            self.set_sigma(c, s)
        for c, t in (tau or {}).items():
            self.set_tau(c, t)
        self._seen.update(self.ids())

    # component access ----------------------------------------------------------
    def component(self, name) -> Graph:
        return getattr(self, name)

    def component_of(self, id):
        for name in COMPONENTS:
            if id in self.component(name):
                return name
        return None

    def element(self, id):
        for name in COMPONENTS:
            el = self.component(name).element(id)
            if el is not None:
                return el
        return None

    def __contains__(self, id):
        return self.component_of(id) is not None

    def ids(self):
        return self.source.ids() | self.corr.ids() | self.target.ids()

    def __len__(self):
        return len(self.source) + len(self.corr) + len(self.target)

    # morphism bookkeeping -------------------------------------------------------
    def set_sigma(self, c, s):
        self.unset_sigma(c)
        self.sigma[c] = s
        self._sigma_inv.setdefault(s, set()).add(c)

    def set_tau(self, c, t):
        self.unset_tau(c)
        self.tau[c] = t
        self._tau_inv.setdefault(t, set()).add(c)

    def unset_sigma(self, c):
        s = self.sigma.pop(c, None)
        if s is not None:
            self._sigma_inv[s].discard(c)

    def unset_tau(self, c):
        t = self.tau.pop(c, None)
        if t is not None:
            self._tau_inv[t].discard(c)

    def sigma_preimage(self, s):
        return self._sigma_inv.get(s, set())

    def tau_preimage(self, t):
        return self._tau_inv.get(t, set())

    def is_total(self):
        corr_ids = self.corr.ids()
        return set(self.sigma) == corr_ids and set(self.tau) == corr_ids

    # mutation -------------------------------------------------------------------
    def fresh_id(self, prefix):
        while True:
            self._counter += 1
            cand = f"{prefix}_{self._counter}"
            if cand not in self._seen:
                self._seen.add(cand)
                return cand

    def add_node(self, comp, id, type, attrs=None):
        self._seen.add(id)
        return self.component(comp).add_node(id, type, attrs)

    def add_edge(self, comp, id, type, src, trg):
        self._seen.add(id)
        return self.component(comp).add_edge(id, type, src, trg)

    def add_corr(self, id, type, src, trg):
        """Add a correspondence node; ``src``/``trg`` may be None (undefined)."""
        node = self.add_node(CORR, id, type)
        if src is not None:
            self.set_sigma(id, src)
        if trg is not None:
            self.set_tau(id, trg)
        return node

    def remove(self, id):
        comp = self.component_of(id)
        if comp is None:
            raise GraphError(f"unknown id {id}")
        if comp == CORR:
            self.unset_sigma(id)
            self.unset_tau(id)
        self.component(comp).remove(id)
        # correspondence links pointing at the removed element become undefined
        if comp == SOURCE:
            for c in list(self.sigma_preimage(id)):
                self.unset_sigma(c)
        elif comp == TARGET:
            for c in list(self.tau_preimage(id)):
                self.unset_tau(c)

    def copy(self):
        g = type(self)(self.source.copy(), self.corr.copy(), self.target.copy(), self.sigma, self.tau)
        g._counter = self._counter
        g._seen = set(self._seen)
        return g

    def signature(self):
        return (
            self.source.signature(),
            self.corr.signature(),
            self.target.signature(),
            dict(self.sigma),
            dict(self.tau),
        )

    def __eq__(self, other):
        return isinstance(other, TripleGraph) and self.signature() == other.signature()

    def __repr__(self):
        kind = "Partial" if self.partial or not self.is_total() else ""
        return (
            f"{kind}TripleGraph(source={len(self.source)}, corr={len(self.corr)}, "
            f"target={len(self.target)})"
        )


class PartialTripleGraph(TripleGraph):
    """Triple graph whose correspondence morphisms may be undefined on part of
    the correspondence graph."""

    partial = True


def as_triple(g) -> TripleGraph:
    """Wrap a plain graph as the source component of a triple graph."""
    if isinstance(g, TripleGraph):
        return g
    return TripleGraph(source=g)


# --------------------------------------------------------------------------
# morphisms


@dataclass(frozen=True)
class Morphism:
    """Element-wise map between (triple) graphs, stored as one dict.

    Node and edge maps are recovered by splitting on the domain."""

    mapping: dict
    domain: object = None
    codomain: object = None

    def __call__(self, x):
        return self.mapping[x]

    def __getitem__(self, x):
        return self.mapping[x]

    def __contains__(self, x):
        return x in self.mapping

    def __len__(self):
        return len(self.mapping)

    def items(self):
        return self.mapping.items()

    def is_injective(self):
        return len(set(self.mapping.values())) == len(self.mapping)

    def node_map(self, comp=SOURCE):
        g = as_triple(self.domain).component(comp)
        return {k: v for k, v in self.mapping.items() if k in g.nodes}

    def edge_map(self, comp=SOURCE):
        g = as_triple(self.domain).component(comp)
        return {k: v for k, v in self.mapping.items() if k in g.edges}

    def key(self):
        return tuple(sorted(self.mapping.items()))


def is_morphism(pattern, host, mapping, injective=True):
    """Direct check of the morphism conditions, used by tests and assertions."""
    pattern, host = as_triple(pattern), as_triple(host)
    if set(mapping) != pattern.ids():
        return False
    if injective and len(set(mapping.values())) != len(mapping):
        return False
    for comp in COMPONENTS:
        pg, hg = pattern.component(comp), host.component(comp)
        for n in pg.nodes.values():
            h = hg.nodes.get(mapping[n.id])
            if h is None or h.type != n.type:
                return False
            if any(h.attrs.get(k) != v for k, v in n.attrs.items()):
                return False
        for e in pg.edges.values():
            h = hg.edges.get(mapping[e.id])
            if h is None or h.type != e.type:
                return False
            if h.src != mapping[e.src] or h.trg != mapping[e.trg]:
                return False
    for pm, hm in ((pattern.sigma, host.sigma), (pattern.tau, host.tau)):
        for c, x in pm.items():
            if hm.get(mapping[c]) != mapping[x]:
                return False
    return True


# --------------------------------------------------------------------------
# validation


def validate(tg, g):
    """Return a list of diagnostics; empty iff ``g`` is well-formed over ``tg``."""
    out = []
    if isinstance(g, Graph):
        tg = tg.source if isinstance(tg, TripleTypeGraph) else tg
        return _validate_graph(tg, g, "graph")
    ttg = tg if isinstance(tg, TripleTypeGraph) else TripleTypeGraph(source=tg)
    seen = {}
    for comp in COMPONENTS:
        graph = g.component(comp)
        out += _validate_graph(ttg.component(comp), graph, comp)
        for id in graph.ids():
            if id in seen:
                out.append(f"id {id} used in both {seen[id]} and {comp}")
            seen[id] = comp
    for n in g.corr.nodes.values():
        if n.attrs:
            out.append(f"corr node {n.id} carries attributes")
    for name, m, other, typing in (("sigma", g.sigma, g.source, ttg.sigma), ("tau", g.tau, g.target, ttg.tau)):
        for c, x in sorted(m.items()):
            if c not in g.corr:
                out.append(f"{name} defined on unknown corr element {c}")
                continue
            if x not in other:
                out.append(f"{name}({c}) = {x} is not an element")
                continue
            ctype = g.corr.type_of(c)
            if c in g.corr.nodes and x not in other.nodes:
                out.append(f"{name} maps node {c} to non-node {x}")
            if c in g.corr.edges:
                e, h = g.corr.edges[c], other.edges.get(x)
                if h is None:
                    out.append(f"{name} maps edge {c} to non-edge {x}")
                elif m.get(e.src) != h.src or m.get(e.trg) != h.trg:
                    out.append(f"{name} does not commute with endpoints of {c}")
            if ctype in typing and other.type_of(x) != typing[ctype]:
                out.append(f"{name}({c}) has type {other.type_of(x)}, expected {typing[ctype]}")
        if not g.partial:
            for c in sorted(g.corr.ids() - set(m)):
                out.append(f"{name} undefined on {c}")
        else:
            for c, e in g.corr.edges.items():
                if c in m and (e.src not in m or e.trg not in m):
                    out.append(f"{name} domain is not a subgraph at {c}")
    return out


def _validate_graph(tg, g, label):
    out = []
    for n in sorted(g.nodes.values(), key=lambda n: n.id):
        if n.type not in tg.node_types:
            out.append(f"{label}: node {n.id} has unknown type {n.type}")
            continue
        for a in sorted(n.attrs):
            if a not in tg.attrs.get(n.type, ()):
                out.append(f"{label}: node {n.id} uses undeclared attribute {a}")
            elif not isinstance(n.attrs[a], str):
                out.append(f"{label}: attribute {n.id}.{a} is not a string")
    for e in sorted(g.edges.values(), key=lambda e: e.id):
        if e.src not in g.nodes or e.trg not in g.nodes:
            out.append(f"{label}: edge {e.id} has a missing endpoint")
            continue
        decl = tg.edge_types.get(e.type)
        if decl is None:
            out.append(f"{label}: edge {e.id} has unknown type {e.type}")
            continue
        actual = (g.nodes[e.src].type, g.nodes[e.trg].type)
        if actual != decl:
            out.append(f"{label}: edge {e.id} of type {e.type} connects {actual[0]} -> {actual[1]}")
    return out


# --------------------------------------------------------------------------
# gluing and difference


def glue_along(g1, g2, shared):
    """Union of ``g1`` and ``g2`` which must intersect exactly in ``shared``."""
    if isinstance(g1, TripleGraph):
        return _glue_triple(g1, g2, shared)
    for g in (g1, g2):
        if not _is_subgraph(shared, g):
            raise SharedNotSubgraph("shared graph is not a subgraph of both operands")
    common = g1.ids() & g2.ids()
    if common != shared.ids():
        raise SharedNotSubgraph(f"operands also overlap in {sorted(common - shared.ids())}")
    out = g1.copy()
    for n in g2.nodes.values():
        if n.id not in out:
            out.add_node(n.id, n.type, n.attrs)
    for e in g2.edges.values():
        if e.id not in out:
            out.add_edge(e.id, e.type, e.src, e.trg)
    return out


def _glue_triple(g1, g2, shared):
    parts = [glue_along(g1.component(c), g2.component(c), shared.component(c)) for c in COMPONENTS]
    for name in ("sigma", "tau"):
        m1, m2 = getattr(g1, name), getattr(g2, name)
        for c in set(m1) & set(m2):
            if m1[c] != m2[c]:
                raise SharedNotSubgraph(f"{name} disagrees on {c}")
    cls = PartialTripleGraph if (g1.partial or g2.partial) else TripleGraph
    return cls(*parts, {**g1.sigma, **g2.sigma}, {**g1.tau, **g2.tau})


def _is_subgraph(small, big):
    for n in small.nodes.values():
        b = big.nodes.get(n.id)
        if b is None or b.type != n.type:
            return False
    for e in small.edges.values():
        b = big.edges.get(e.id)
        if b is None or (b.type, b.src, b.trg) != (e.type, e.src, e.trg):
            return False
    return True


def is_subgraph(small, big):
    if isinstance(small, TripleGraph):
        if not all(_is_subgraph(small.component(c), big.component(c)) for c in COMPONENTS):
            return False
        return all(big.sigma.get(c) == s for c, s in small.sigma.items()) and all(
            big.tau.get(c) == t for c, t in small.tau.items()
        )
    return _is_subgraph(small, big)


def dangling_edges(g: Graph, elems) -> set:
    elems = set(elems)
    out = set()
    for id in elems:
        if id in g.nodes:
            out |= {e for e in g.incident(id) if e not in elems}
    return out


def subtract(g, elems):
    """Set difference; raises DanglingError if the result is not a graph."""
    elems = set(elems)
    if isinstance(g, TripleGraph):
        bad = set()
        for c in COMPONENTS:
            bad |= dangling_edges(g.component(c), elems)
        for m_inv, comp in ((g._sigma_inv, g.source), (g._tau_inv, g.target)):
            for x in elems & comp.ids():
                bad |= {c for c in m_inv.get(x, ()) if c not in elems}
        if bad:
            raise DanglingError(bad)
        out = g.copy()
        for id in _edges_first(out, elems):
            out.remove(id)
        return out
    bad = dangling_edges(g, elems)
    if bad:
        raise DanglingError(bad)
    out = g.copy()
    for id in _edges_first(out, elems):
        out.remove(id)
    return out


def _edges_first(g, elems):
    graphs = [g.component(c) for c in COMPONENTS] if isinstance(g, TripleGraph) else [g]
    edges = sorted(x for x in elems if any(x in h.edges for h in graphs))
    nodes = sorted(x for x in elems if x not in set(edges))
    return edges + nodes


def restrict_after_edit(g: TripleGraph, edited_source: Graph) -> PartialTripleGraph:
    """Replace the source graph, keeping sigma only where its image survives."""
    sigma = {}
    for c, s in g.sigma.items():
        old, new = g.source.element(s), edited_source.element(s)
        if new is not None and old is not None and new.type == old.type:
            sigma[c] = s
    out = PartialTripleGraph(edited_source.copy(), g.corr.copy(), g.target.copy(), sigma, g.tau)
    out._counter = g._counter
    out._seen = set(g._seen) | edited_source.ids()
    return out


# --------------------------------------------------------------------------
# matching


def iter_injective_morphisms(pattern, host, fixed=None, forbidden_images=None) -> Iterator[dict]:
    """Yield every injective, type-preserving, commuting map pattern -> host.

    ``fixed`` pins some pattern elements; the search only extends it.  Order of
    the yielded maps is unspecified; :func:`find_injective_morphisms` sorts.
    """
    pattern, host = as_triple(pattern), as_triple(host)
    fixed = dict(fixed or {})
    used = set(fixed.values())
    if len(used) != len(fixed):
        return
    if forbidden_images:
        used |= set(forbidden_images)
    for k, v in fixed.items():
        if not _compatible(pattern, host, k, v, fixed):
            return
        comp = pattern.component_of(k)
        if k in pattern.component(comp).nodes and not _node_ok(pattern, host, comp, k, v, fixed):
            return
    nodes = [(c, n) for c in COMPONENTS for n in pattern.component(c).nodes if n not in fixed]
    order = _node_order(pattern, nodes, fixed)
    yield from _extend_nodes(pattern, host, order, 0, fixed, used)


def find_injective_morphisms(pattern, host, fixed=None, limit=None) -> list:
    """All injective matches, sorted by (pattern element id, host element id)."""
    pattern = as_triple(pattern)
    keys = sorted(pattern.ids())
    found = []
    for m in iter_injective_morphisms(pattern, host, fixed):
        found.append(m)
    found.sort(key=lambda m: [m[k] for k in keys])
    if limit is not None:
        found = found[:limit]
    return [Morphism(m, pattern, host) for m in found]


def has_injective_morphism(pattern, host, fixed=None) -> bool:
    return next(iter_injective_morphisms(pattern, host, fixed), None) is not None


def _neighbours(pattern, comp, n):
    """Pattern nodes adjacent to ``n`` (within a component or across sigma/tau)."""
    g = pattern.component(comp)
    for e in g.out_edges(n):
        yield g.edges[e].trg
    for e in g.in_edges(n):
        yield g.edges[e].src
    if comp == CORR:
        if n in pattern.sigma:
            yield pattern.sigma[n]
        if n in pattern.tau:
            yield pattern.tau[n]
    elif comp == SOURCE:
        yield from pattern.sigma_preimage(n)
    else:
        yield from pattern.tau_preimage(n)


def _node_order(pattern, nodes, fixed):
    remaining = dict((n, c) for c, n in nodes)
    done = set(k for k in fixed if pattern.component_of(k) is not None)
    order = []
    while remaining:
        frontier = [
            n for n in remaining if any(x in done for x in _neighbours(pattern, remaining[n], n))
        ]
        if frontier:
            # most connected first, ties by id for determinism
            n = max(
                sorted(frontier),
                key=lambda n: sum(1 for x in _neighbours(pattern, remaining[n], n) if x in done),
            )
        else:
            n = min(remaining)
        order.append((remaining.pop(n), n))
        done.add(n)
    return order


def _compatible(pattern, host, k, v, mapping):
    comp = pattern.component_of(k)
    if comp is None or host.component_of(v) != comp:
        return False
    pg, hg = pattern.component(comp), host.component(comp)
    if k in pg.nodes:
        h = hg.nodes.get(v)
        p = pg.nodes[k]
        if h is None or h.type != p.type:
            return False
        return all(h.attrs.get(a) == val for a, val in p.attrs.items())
    h, p = hg.edges.get(v), pg.edges[k]
    if h is None or h.type != p.type:
        return False
    for end, hend in ((p.src, h.src), (p.trg, h.trg)):
        if end in mapping and mapping[end] != hend:
            return False
    return True


def _candidates(pattern, host, comp, n, mapping):
    pg, hg = pattern.component(comp), host.component(comp)
    ptype = pg.nodes[n].type
    best = None
    for e in pg.incident(n):
        if e in mapping:
            he = hg.edges.get(mapping[e])
            if he is None:
                return []
            cands = {he.src if pg.edges[e].src == n else he.trg}
            best = cands if best is None else best & cands
    for e in pg.out_edges(n):
        pe = pg.edges[e]
        if pe.trg in mapping:
            cands = {hg.edges[h].src for h in hg.in_edges(mapping[pe.trg]) if hg.edges[h].type == pe.type}
            best = cands if best is None else best & cands
    for e in pg.in_edges(n):
        pe = pg.edges[e]
        if pe.src in mapping:
            cands = {hg.edges[h].trg for h in hg.out_edges(mapping[pe.src]) if hg.edges[h].type == pe.type}
            best = cands if best is None else best & cands
    if comp == CORR:
        if n in pattern.sigma and pattern.sigma[n] in mapping:
            cands = set(host.sigma_preimage(mapping[pattern.sigma[n]]))
            best = cands if best is None else best & cands
        if n in pattern.tau and pattern.tau[n] in mapping:
            cands = set(host.tau_preimage(mapping[pattern.tau[n]]))
            best = cands if best is None else best & cands
    else:
        pre = pattern.sigma_preimage(n) if comp == SOURCE else pattern.tau_preimage(n)
        hm = host.sigma if comp == SOURCE else host.tau
        for c in pre:
            if c in mapping:
                img = hm.get(mapping[c])
                cands = {img} if img is not None else set()
                best = cands if best is None else best & cands
    if best is None:
        best = (h.id for h in hg.nodes.values() if h.type == ptype)
    return sorted(best)


def _node_ok(pattern, host, comp, n, v, mapping):
    pg, hg = pattern.component(comp), host.component(comp)
    h = hg.nodes.get(v)
    p = pg.nodes[n]
    if h is None or h.type != p.type:
        return False
    if any(h.attrs.get(a) != val for a, val in p.attrs.items()):
        return False
    for e in pg.incident(n):
        if e in mapping:
            he = hg.edges.get(mapping[e])
            pe = pg.edges[e]
            if he is None or (pe.src == n and he.src != v) or (pe.trg == n and he.trg != v):
                return False
    # every pattern edge between n and an already mapped node needs a host edge
    for e in pg.out_edges(n):
        pe = pg.edges[e]
        t = v if pe.trg == n else mapping.get(pe.trg)
        if t is not None and not _count_edges(hg, v, t, pe.type):
            return False
    for e in pg.in_edges(n):
        pe = pg.edges[e]
        if pe.src == n:
            continue
        s = mapping.get(pe.src)
        if s is not None and not _count_edges(hg, s, v, pe.type):
            return False
    if comp == CORR:
        for pm, hm in ((pattern.sigma, host.sigma), (pattern.tau, host.tau)):
            if n in pm:
                if v not in hm:
                    return False
                x = pm[n]
                if x in mapping and mapping[x] != hm[v]:
                    return False
    else:
        pre = pattern.sigma_preimage(n) if comp == SOURCE else pattern.tau_preimage(n)
        hm = host.sigma if comp == SOURCE else host.tau
        for c in pre:
            if c in mapping and hm.get(mapping[c]) != v:
                return False
    return True


def _count_edges(hg, s, t, type):
    return sum(1 for e in hg.out_edges(s) if hg.edges[e].trg == t and hg.edges[e].type == type)


def _extend_nodes(pattern, host, order, i, mapping, used):
    if i == len(order):
        yield from _extend_edges(pattern, host, mapping, used)
        return
    comp, n = order[i]
    for v in _candidates(pattern, host, comp, n, mapping):
        if v in used or not _node_ok(pattern, host, comp, n, v, mapping):
            continue
        mapping[n] = v
        used.add(v)
        yield from _extend_nodes(pattern, host, order, i + 1, mapping, used)
        used.discard(v)
        del mapping[n]


def _extend_edges(pattern, host, mapping, used):
    edges = sorted((c, e) for c in COMPONENTS for e in pattern.component(c).edges if e not in mapping)
    yield from _edge_rec(pattern, host, edges, 0, mapping, used)


def _edge_rec(pattern, host, edges, i, mapping, used):
    if i == len(edges):
        if _corr_edges_commute(pattern, host, mapping):
            yield dict(mapping)
        return
    comp, e = edges[i]
    pe = pattern.component(comp).edges[e]
    hg = host.component(comp)
    s, t = mapping[pe.src], mapping[pe.trg]
    for h in sorted(hg.out_edges(s)):
        he = hg.edges[h]
        if he.trg != t or he.type != pe.type or h in used:
            continue
        mapping[e] = h
        used.add(h)
        yield from _edge_rec(pattern, host, edges, i + 1, mapping, used)
        used.discard(h)
        del mapping[e]


def _corr_edges_commute(pattern, host, mapping):
    for pm, hm in ((pattern.sigma, host.sigma), (pattern.tau, host.tau)):
        for c, x in pm.items():
            if c in pattern.corr.edges and hm.get(mapping[c]) != mapping[x]:
                return False
    return True


def element_ids(g, comps=COMPONENTS) -> set:
    g = as_triple(g)
    out = set()
    for c in comps:
        out |= g.component(c).ids()
    return out


def iter_elements(g) -> Iterable:
    g = as_triple(g)
    for c in COMPONENTS:
        comp = g.component(c)
        for n in comp.nodes.values():
            yield c, n
        for e in comp.edges.values():
            yield c, e
