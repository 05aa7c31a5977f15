"""Isomorphism helpers built on networkx.

Used for deduplicating enumerated graphs and for comparing derived rules with
reference shapes.  The injective matcher used by rewriting lives in
:mod:`tggsync.graph`; this module is deliberately independent of it.
"""

from __future__ import annotations

import hashlib

import networkx as nx
from networkx.algorithms import isomorphism as nxiso

from .graph import COMPONENTS, as_triple


def to_nx(g, status=None, attrs=True):
    """Encode a triple graph as a labelled digraph: every element becomes a
    vertex; edge elements point to their endpoints; sigma/tau become arcs.

    ``status`` optionally maps element ids to an extra label (e.g. created or
    deleted)."""
    g = as_triple(g)
    d = nx.DiGraph()
    status = status or {}
    for c in COMPONENTS:
        comp = g.component(c)
        for n in comp.nodes.values():
            a = tuple(sorted(n.attrs.items())) if attrs else ()
            d.add_node(n.id, label=(c, "node", n.type, a, status.get(n.id, "")))
        for e in comp.edges.values():
            d.add_node(e.id, label=(c, "edge", e.type, (), status.get(e.id, "")))
    for c in COMPONENTS:
        for e in g.component(c).edges.values():
            d.add_edge(e.id, e.src, label="src")
            d.add_edge(e.id, e.trg, label="trg") if e.src != e.trg else d.add_edge(e.id, e.trg, label="loop")
    for cx, x in g.sigma.items():
        d.add_edge(cx, x, label="sigma")
    for cx, x in g.tau.items():
        d.add_edge(cx, x, label="tau")
    return d


def canonical_key(g, status=None):
    d = to_nx(g, status)
    for v in d.nodes:
        d.nodes[v]["h"] = repr(d.nodes[v]["label"])
    for u, v in d.edges:
        d.edges[u, v]["h"] = d.edges[u, v]["label"]
    return nx.weisfeiler_lehman_graph_hash(d, node_attr="h", edge_attr="h", iterations=3)


def _refine(d, iterations=6):
    """Attach colour-refinement labels to the vertices, following arcs in
    both directions.  The colours are invariant under isomorphism, so
    matching on them is exact, and they keep VF2 from wandering through
    symmetric subtrees."""
    colour = {v: repr(d.nodes[v]["label"]) for v in d.nodes}
    for _ in range(iterations):
        nxt = {}
        for v in d.nodes:
            out = sorted((d.edges[v, u]["label"], colour[u]) for u in d.successors(v))
            inc = sorted((d.edges[u, v]["label"], colour[u]) for u in d.predecessors(v))
            nxt[v] = hashlib.blake2b(repr((colour[v], out, inc)).encode(), digest_size=12).hexdigest()
        if len(set(nxt.values())) == len(set(colour.values())):
            colour = nxt
            break
        colour = nxt
    for v, c in colour.items():
        d.nodes[v]["wl"] = c
    return d


def _match(d1, d2):
    m = nxiso.DiGraphMatcher(
        d1,
        d2,
        node_match=lambda a, b: a["label"] == b["label"] and a.get("wl") == b.get("wl"),
        edge_match=lambda a, b: a["label"] == b["label"],
    )
    return m


def _refined_match(d1, d2):
    if len(d1) != len(d2) or d1.number_of_edges() != d2.number_of_edges():
        return None
    _refine(d1)
    _refine(d2)
    if sorted(d1.nodes[v]["wl"] for v in d1) != sorted(d2.nodes[v]["wl"] for v in d2):
        return None
    return _match(d1, d2)


def isomorphic(g1, g2, status1=None, status2=None, attrs=True) -> bool:
    m = _refined_match(to_nx(g1, status1, attrs), to_nx(g2, status2, attrs))
    return m is not None and m.is_isomorphic()


def rule_graph(rule, with_nacs=True):
    """Integrated view of a rule: union of L and R with element status
    (context/created/deleted) and NAC-only elements attached to a hub per NAC."""
    from .graph import glue_along
    from .rewriting import restrict

    kernel = restrict(rule.rhs, rule.kernel_ids)
    union = glue_along(rule.lhs, rule.rhs, kernel)
    status = {}
    for x in union.ids():
        status[x] = "deleted" if x in rule.deleted else "created" if x in rule.created else "context"
    d = to_nx(union, status, attrs=False)
    if with_nacs:
        for i, nac in enumerate(rule.nacs):
            hub = ("nac", i)
            d.add_node(hub, label=("nac",))
            extra = nac.graph.ids() - rule.lhs.ids()
            sub = to_nx(nac.graph, attrs=False)
            for x in extra:
                key = ("nac", i, x)
                lab = sub.nodes[x]["label"]
                d.add_node(key, label=lab[:4] + ("nac",))
                d.add_edge(hub, key, label="member")
            for u, v, data in sub.edges(data=True):
                if u in extra or v in extra:
                    uu = ("nac", i, u) if u in extra else u
                    vv = ("nac", i, v) if v in extra else v
                    d.add_edge(uu, vv, label=data["label"])
    return d


def rules_isomorphic(r1, r2, with_nacs=True) -> bool:
    m = _refined_match(rule_graph(r1, with_nacs), rule_graph(r2, with_nacs))
    return m is not None and m.is_isomorphic()
