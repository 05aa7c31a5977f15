"""Shared test oracles and generators."""

from __future__ import annotations

import itertools
import random

from tggsync.graph import COMPONENTS, Graph, as_triple, iter_injective_morphisms


def random_graph(rng, n_nodes, n_edges, node_types=("A", "B"), edge_types=("x", "y"), prefix="n"):
    g = Graph()
    for i in range(n_nodes):
        g.add_node(f"{prefix}{i}", rng.choice(node_types))
    nodes = list(g.nodes)
    for j in range(n_edges if nodes else 0):
        g.add_edge(f"{prefix}e{j}", rng.choice(edge_types), rng.choice(nodes), rng.choice(nodes))
    return g


def brute_force_morphisms(pattern, host):
    """Every injective commuting map, by plain enumeration.

    Kept deliberately naive: all node permutations, then all edge choices,
    then a full check of types, endpoints and correspondence links."""
    p, h = as_triple(pattern), as_triple(host)
    per_comp = []
    for comp in COMPONENTS:
        pg, hg = p.component(comp), h.component(comp)
        pn, pe = sorted(pg.nodes), sorted(pg.edges)
        options = []
        for img in itertools.permutations(sorted(hg.nodes), len(pn)):
            nm = dict(zip(pn, img))
            if any(pg.nodes[x].type != hg.nodes[nm[x]].type for x in pn):
                continue
            if any(hg.nodes[nm[x]].attrs.get(k) != v for x in pn for k, v in pg.nodes[x].attrs.items()):
                continue
            cands = []
            for e in pe:
                pe_ = pg.edges[e]
                cands.append([
                    f for f, he in hg.edges.items()
                    if he.type == pe_.type and he.src == nm[pe_.src] and he.trg == nm[pe_.trg]
                ])
            for choice in itertools.product(*cands):
                if len(set(choice)) != len(choice):
                    continue
                m = dict(nm)
                m.update(zip(pe, choice))
                options.append(m)
        per_comp.append(options)
    out = []
    for parts in itertools.product(*per_comp):
        m = {}
        for part in parts:
            m.update(part)
        if all(h.sigma.get(m[c]) == m[x] for c, x in p.sigma.items()) and all(
            h.tau.get(m[c]) == m[x] for c, x in p.tau.items()
        ):
            out.append(m)
    return out


def canon(maps):
    return sorted(tuple(sorted(m.items())) for m in maps)


def rng_for(seed):
    return random.Random(seed)



def random_derivation(tgg, rng, max_source=15, steps=40, noise=0, by_rule=False):
    """Triple graph from random rule applications, optionally with a few
    extra well-typed source edges.

    Picks uniformly among all matches, or with ``by_rule`` first among the
    applicable rules (which favours rules with few matches)."""
    from tggsync.rewriting import Match, apply

    g = tgg.start.copy()
    k = 0
    for _ in range(steps):
        options = []
        for r in tgg.rules:
            if len(g.source) + len(r.created & r.rhs.source.ids()) > max_source:
                continue
            options += [(r, m) for m in iter_injective_morphisms(r.lhs, g)]
        if not options:
            break
        if by_rule:
            rules = sorted({r.name for r, _ in options})
            pick = rng.choice(rules)
            options = [o for o in options if o[0].name == pick]
        r, m = options[rng.randrange(len(options))]
        k += 1
        apply(r, Match(r, m, g), g, ids={x: f"d{k}.{x}" for x in r.created})
    src_types = tgg.type_graph.source.edge_types
    for j in range(noise):
        if len(g.source) >= max_source:
            break
        et = rng.choice(sorted(src_types))
        s_t, t_t = src_types[et]
        ss = sorted(n for n, v in g.source.nodes.items() if v.type == s_t)
        ts = sorted(n for n, v in g.source.nodes.items() if v.type == t_t)
        if ss and ts:
            g.add_edge("source", f"noise{j}", et, rng.choice(ss), rng.choice(ts))
    return g


def shortcut_equivalence(entry, host, strip_nacs=True):
    """Apply the short-cut rule directly and as source rule followed by the
    repair rule, at every match, with shared ids for created elements.

    Yields ``(mapping, direct, composed)`` where each result is a triple
    graph or None when that route is not applicable."""
    from tggsync.rewriting import Match, apply, is_applicable

    sc, src, rep = entry.shortcut, entry.source_rule, entry.repair
    if strip_nacs:
        rep = rep.copy(nacs=[])
    ids = {x: f"new.{x}" for x in sc.created}
    for m in iter_injective_morphisms(sc.lhs, host):
        direct = host.copy()
        if is_applicable(sc, Match(sc, m, direct), direct)[0]:
            apply(sc, Match(sc, m, direct), direct, ids=ids)
        else:
            direct = None
        composed = host.copy()
        src_m = {x: m[x] for x in src.lhs.ids()}
        if not is_applicable(src, Match(src, src_m, composed), composed)[0]:
            yield m, direct, None
            continue
        apply(src, Match(src, src_m, composed), composed, ids={x: ids[x] for x in src.created})
        rep_m = {x: m[x] if x in m else ids[x] for x in rep.lhs.ids()}
        if is_applicable(rep, Match(rep, rep_m, composed), composed)[0]:
            apply(rep, Match(rep, rep_m, composed), composed, ids={x: ids[x] for x in rep.created})
        else:
            composed = None
        yield m, direct, composed


def random_edit(tgg, source, rng, n_ops=2):
    """A few random, well-typed source edits (as EditOps) on a copy."""
    from tggsync.modelio import EditOp, apply_edit_ops

    g = source.copy()
    etypes = tgg.type_graph.source.edge_types
    ops = []
    k = 0
    for _ in range(n_ops):
        k += 1
        kind = rng.choice(["move", "move", "delete-edge", "add-edge", "add-node", "delete-node"])
        edges = sorted(g.edges)
        nodes = sorted(g.nodes)
        new = []
        if kind == "move" and edges:
            e = g.edges[rng.choice(edges)]
            s_t = g.nodes[e.src].type
            parents = sorted(n for n in nodes if g.nodes[n].type == s_t and n != e.src)
            if parents:
                new = [EditOp("delete-edge", e.id),
                       EditOp("add-edge", f"m{k}", e.type, rng.choice(parents), e.trg)]
        elif kind == "delete-edge" and edges:
            new = [EditOp("delete-edge", rng.choice(edges))]
        elif kind == "add-edge":
            et = rng.choice(sorted(etypes))
            ss = [n for n in nodes if g.nodes[n].type == etypes[et][0]]
            ts = [n for n in nodes if g.nodes[n].type == etypes[et][1]]
            if ss and ts:
                new = [EditOp("add-edge", f"a{k}", et, rng.choice(ss), rng.choice(ts))]
        elif kind == "add-node":
            et = rng.choice(sorted(etypes))
            s_t, t_t = etypes[et]
            ss = [n for n in nodes if g.nodes[n].type == s_t]
            if ss:
                new = [EditOp("add-node", f"n{k}", t_t, attrs={"name": f"n{k}"}),
                       EditOp("add-edge", f"ne{k}", et, rng.choice(ss), f"n{k}")]
        elif kind == "delete-node" and nodes:
            new = [EditOp("delete-node", rng.choice(nodes), cascade=True)]
        if new:
            apply_edit_ops(g, new)
            ops += new
    return ops, g


def all_source_hosts(type_graph, max_nodes, max_edges):
    """Every simple source graph over ``type_graph`` with at most
    ``max_nodes`` nodes and ``max_edges`` edges.

    Node types are assigned in sorted blocks (all graphs differing only by a
    permutation of same-typed nodes are isomorphic, so nothing is lost);
    edge sets are enumerated in full, at most one edge per type and ordered
    node pair."""
    types = sorted(type_graph.node_types)
    edge_types = sorted(type_graph.edge_types.items())

    def type_blocks(n, i=0):
        if i == len(types) - 1:
            yield [n]
            return
        for k in range(n + 1):
            for rest in type_blocks(n - k, i + 1):
                yield [k] + rest

    for n in range(max_nodes + 1):
        for counts in type_blocks(n):
            nodes = []
            for t, k in zip(types, counts):
                nodes += [(f"{t[0].lower()}{j}", t) for j in range(k)]
            cands = [
                (et, s, d)
                for et, (st, dt) in edge_types
                for s, ts in nodes
                if ts == st
                for d, td in nodes
                if td == dt
            ]
            for k in range(min(max_edges, len(cands)) + 1):
                for chosen in itertools.combinations(cands, k):
                    g = Graph()
                    for nid, t in nodes:
                        g.add_node(nid, t)
                    for j, (et, s, d) in enumerate(chosen):
                        g.add_edge(f"e{j}", et, s, d)
                    yield g


def random_docgen_source(rng, packages, classes, edges):
    g = Graph()
    for i in range(packages):
        g.add_node(f"p{i}", "Package")
    for i in range(classes):
        g.add_node(f"c{i}", "Class")
    pk = sorted(n for n in g.nodes if n.startswith("p"))
    cl = sorted(n for n in g.nodes if n.startswith("c"))
    for j in range(edges):
        if not pk:
            break
        if cl and rng.random() < 0.4:
            g.add_edge(f"e{j}", "classes", rng.choice(pk), rng.choice(cl))
        else:
            g.add_edge(f"e{j}", "subpackages", rng.choice(pk), rng.choice(pk))
    return g


def docgen_shape_ok(g):
    """Independent characterization of translatable docgen sources: every
    class sits in exactly one package, every package has at most one parent,
    and the containment relation has no cycles."""
    parent = {}
    for n in g.nodes.values():
        inc = [g.edges[e] for e in g.in_edges(n.id)]
        if n.type == "Class" and len(inc) != 1:
            return False
        if n.type == "Package":
            if len(inc) > 1:
                return False
            if inc:
                parent[n.id] = inc[0].src
    for start in parent:
        seen, cur = set(), start
        while cur in parent:
            if cur in seen:
                return False
            seen.add(cur)
            cur = parent[cur]
    return True


def random_typed_source(rng, type_graph, n_nodes, n_edges, prefix="r"):
    """Random well-typed source graph (edges need endpoints of the right
    types, so fewer than ``n_edges`` may be placed)."""
    g = Graph()
    types = sorted(type_graph.node_types)
    for i in range(n_nodes):
        g.add_node(f"{prefix}{i}", rng.choice(types))
    etypes = sorted(type_graph.edge_types.items())
    for j in range(n_edges):
        et, (st, dt) = rng.choice(etypes)
        srcs = sorted(n for n in g.nodes if g.nodes[n].type == st)
        trgs = sorted(n for n in g.nodes if g.nodes[n].type == dt)
        if srcs and trgs:
            g.add_edge(f"{prefix}e{j}", et, rng.choice(srcs), rng.choice(trgs))
    return g
