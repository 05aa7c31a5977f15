from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_graph, rng_for
from tggsync.graph import SOURCE, Graph, TripleGraph, as_triple, find_injective_morphisms
from tggsync.modelio import parse_rule_text as parse_rules
from tggsync.rewriting import (
    NAC,
    HasNACs,
    InvalidRule,
    Match,
    NotApplicable,
    Rule,
    apply,
    find_matches,
    invert,
    is_applicable,
    satisfies_nacs,
    sequentially_independent,
    shift_nac,
    undo,
)


def parse_rule_text(text):
    (rule,) = parse_rules(text)
    return rule


ADD_X = """
rule Add-X
  source
    a : A
    ++ b : B
    ++ e : a -x-> b
end
"""

DEL_B = """
rule Del-B
  source
    a : A
    -- b : B
    -- e : a -x-> b
end
"""

GUARDED = """
rule Guarded
  source
    a : A
    ++ b : B
    ++ e : a -x-> b
  nac already
    source
      o : B
      f : a -x-> o
  end
end
"""


def host_ab():
    g = Graph()
    g.add_node("1", "A")
    g.add_node("2", "A")
    g.add_node("3", "B")
    g.add_edge("13", "x", "1", "3")
    return TripleGraph(source=g)


def test_rule_sets():
    r = parse_rule_text(ADD_X)
    assert r.created == {"b", "e"} and r.deleted == set() and r.kernel_ids == {"a"}
    assert r.is_monotonic()


def test_invalid_rules():
    g1, g2 = Graph(), Graph()
    g1.add_node("a", "A")
    g2.add_node("a", "B")
    with pytest.raises(InvalidRule):
        Rule("bad", g1, g2)
    with pytest.raises(InvalidRule):
        Rule("bad", g1, g1.copy(), [NAC(TripleGraph(), "empty")])


def test_apply_creates_fresh_ids():
    h = host_ab()
    r = parse_rule_text(ADD_X)
    m = find_matches(r, h)[0]
    app = apply(r, m)
    assert m["a"] == "1"
    assert app.created == {"Add-X_1", "Add-X_2"}
    assert h.source.edges[app.comatch["e"]].trg == app.comatch["b"]


def test_apply_respects_fixed_ids():
    h = host_ab()
    r = parse_rule_text(ADD_X)
    app = apply(r, Match(r, {"a": "2"}, h), ids={"b": "nb", "e": "ne"})
    assert h.source.edges["ne"].src == "2" and "nb" in h.source.nodes


def test_dangling_condition():
    h = host_ab()
    h.source.add_edge("23", "x", "2", "3")
    r = parse_rule_text(DEL_B)
    m = Match(r, {"a": "1", "b": "3", "e": "13"}, h)
    ok, why = is_applicable(r, m)
    assert not ok and "dangling" in why and "23" in why
    with pytest.raises(NotApplicable):
        apply(r, m)
    app = apply(r, m, implicit_delete=True)
    assert "3" not in h.source and app.implicit == {"23"}
    undo(app)
    assert h.source.ids() == {"1", "2", "3", "13", "23"}


def test_nac_blocks():
    h = host_ab()
    r = parse_rule_text(GUARDED)
    assert [m["a"] for m in find_matches(r, h)] == ["2"]
    assert {m["a"] for m in find_matches(r, h, check_nacs=False)} == {"1", "2"}


def test_undo_restores_links():
    h = TripleGraph()
    h.add_node(SOURCE, "s", "A")
    h.add_node("target", "t", "F")
    h.add_corr("c", "AF", "s", "t")
    r = parse_rule_text("""
rule Drop
  source
    -- s : A
  corr
    -- c : AF s <-> t
  target
    t : F
end
""")
    before = h.copy()
    app = apply(r, find_matches(r, h)[0])
    assert len(h.corr) == 0
    undo(app)
    assert h == before


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_undo_is_inverse(seed):
    rng = rng_for(seed)
    h = TripleGraph(source=random_graph(rng, 5, 6))
    for text in (ADD_X, DEL_B):
        r = parse_rule_text(text)
        for m in find_matches(r, h, implicit_delete=True):
            g = h.copy()
            app = apply(r, Match(r, m.mapping, g), g, implicit_delete=True)
            undo(app)
            assert g == h


def test_invert_is_involution():
    r = parse_rule_text(ADD_X)
    inv = invert(r)
    assert inv.name == "Add-X^-1" and inv.deleted == r.created
    back = invert(inv)
    assert back.name == r.name
    assert back.lhs == r.lhs and back.rhs == r.rhs
    with pytest.raises(HasNACs):
        invert(parse_rule_text(GUARDED))


def test_apply_then_inverse():
    h = host_ab()
    before = h.copy()
    r = parse_rule_text(ADD_X)
    app = apply(r, Match(r, {"a": "2"}, h))
    inv = invert(r)
    apply(inv, Match(inv, app.comatch, h))
    assert h.signature()[0] == before.signature()[0]


class TestIndependence:
    def test_parallel_additions_commute(self):
        h = host_ab()
        r = parse_rule_text(ADD_X)
        app1 = apply(r, Match(r, {"a": "1"}, h))
        m2 = Match(r, {"a": "2"}, h)
        assert sequentially_independent(app1, m2)

    def test_use_of_created_element(self):
        h = host_ab()
        r = parse_rule_text(ADD_X)
        d = parse_rule_text(DEL_B)
        app1 = apply(r, Match(r, {"a": "2"}, h))
        m2 = Match(d, {"a": "2", "b": app1.comatch["b"], "e": app1.comatch["e"]}, h)
        ok, reasons = sequentially_independent(app1, m2, detail=True)
        assert not ok and "created by t1" in reasons[0]

    def test_nac_conflict(self):
        # deleting the B node enables the guarded rule at node 1
        h = host_ab()
        d = parse_rule_text(DEL_B)
        g = parse_rule_text(GUARDED)
        app1 = apply(d, Match(d, {"a": "1", "b": "3", "e": "13"}, h))
        m2 = Match(g, {"a": "1"}, h)
        assert is_applicable(g, m2)[0]
        ok, reasons = sequentially_independent(app1, m2, detail=True)
        assert not ok and "forbids" in reasons[0]

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_church_rosser(self, seed):
        """Independent steps reach the same graph in either order."""
        rng = rng_for(seed)
        h = TripleGraph(source=random_graph(rng, 4, 4))
        r = parse_rule_text(ADD_X)
        d = parse_rule_text(DEL_B)
        for r1 in (r, d):
            for m1 in find_matches(r1, h):
                g = h.copy()
                app1 = apply(r1, Match(r1, m1.mapping, g), g, ids={x: f"t1.{x}" for x in r1.created})
                for r2 in (r, d):
                    for m2 in find_matches(r2, g):
                        if not sequentially_independent(app1, m2):
                            continue
                        ids2 = {x: f"t2.{x}" for x in r2.created}
                        a = g.copy()
                        apply(r2, Match(r2, m2.mapping, a), a, ids=ids2)
                        b = h.copy()
                        apply(r2, Match(r2, m2.mapping, b), b, ids=ids2)
                        apply(r1, Match(r1, m1.mapping, b), b, ids={x: f"t1.{x}" for x in r1.created})
                        assert a.signature()[0] == b.signature()[0]


def shift_agrees(nac, lhs, target, inclusion, host):
    """Compare shifted and original NAC satisfaction over all matches of
    ``target`` into ``host``."""
    shifted = shift_nac(nac, lhs, target, inclusion)
    checked = 0
    for m in find_injective_morphisms(target, host):
        m = m.mapping
        induced = {x: m[inclusion[x]] for x in lhs.ids()}
        assert satisfies_nacs(shifted, host, m) == satisfies_nacs([nac], host, induced)
        checked += 1
    return checked


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_shift_nac_property(seed):
    rng = rng_for(seed)
    lhs = TripleGraph()
    lhs.add_node(SOURCE, "a", "A")
    nac_g = lhs.copy()
    nac_g.add_node(SOURCE, "o", rng.choice("AB"))
    nac_g.add_edge(SOURCE, "f", rng.choice("xy"), "a", "o")
    target = lhs.copy()
    target.add_node(SOURCE, "b", rng.choice("AB"))
    target.add_edge(SOURCE, "g", rng.choice("xy"), *rng.choice([("a", "b"), ("b", "a")]))
    host = TripleGraph(source=random_graph(rng, 5, 6))
    shift_agrees(NAC(nac_g, "n"), lhs, target, {"a": "a"}, host)


def test_shift_nac_overlaps():
    lhs = as_triple(Graph())
    lhs.add_node(SOURCE, "a", "A")
    n = lhs.copy()
    n.add_node(SOURCE, "o", "B")
    n.add_edge(SOURCE, "f", "x", "a", "o")
    target = lhs.copy()
    target.add_node(SOURCE, "b", "B")
    shifted = shift_nac(NAC(n, "n"), lhs, target)
    # o stays apart from b, or o is glued onto b
    assert len(shifted) == 2
    assert sorted(len(s.graph.source.nodes) for s in shifted) == [2, 3]
