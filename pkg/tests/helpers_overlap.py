"""Exhaustive common-kernel enumeration, independent of the solver."""

from __future__ import annotations

from tggsync.graph import COMPONENTS


def _elements(rule):
    out = []
    for c in COMPONENTS:
        g = rule.rhs.component(c)
        out += [(x, c, "node", g.nodes[x].type) for x in sorted(g.nodes)]
        out += [(x, c, "edge", g.edges[x].type) for x in sorted(g.edges)]
    return out


def _valid(r1, r2, m):
    for a, b in m.items():
        e1, e2 = r1.rhs.element(a), r2.rhs.element(b)
        if hasattr(e1, "src") and (m.get(e1.src) != e2.src or m.get(e1.trg) != e2.trg):
            return False
        for name in ("sigma", "tau"):
            s1, s2 = getattr(r1.rhs, name).get(a), getattr(r2.rhs, name).get(b)
            if (s1 is None) != (s2 is None):
                return False
            if s1 is not None and m.get(s1) != s2:
                return False
    return True


def all_kernels(r1, r2, strategy):
    """Every valid kernel as a frozenset of pairs.

    A pair joins elements of equal component, kind and type that are both
    created, or (maximal strategy only) both context."""
    elems1 = _elements(r1)
    elems2 = _elements(r2)
    out = []

    def ok_pair(a, b):
        ca, cb = a[0] in r1.created, b[0] in r2.created
        if a[1:] != b[1:]:
            return False
        return (ca and cb) or (strategy == "maximal" and not ca and not cb)

    def rec(i, m, used):
        if i == len(elems1):
            if _valid(r1, r2, m):
                out.append(frozenset(m.items()))
            return
        rec(i + 1, m, used)
        a = elems1[i]
        for b in elems2:
            if b[0] in used or not ok_pair(a, b):
                continue
            m[a[0]] = b[0]
            used.add(b[0])
            rec(i + 1, m, used)
            used.discard(b[0])
            del m[a[0]]

    rec(0, {}, set())
    return out


def maximum_kernels(r1, r2, strategy):
    ks = all_kernels(r1, r2, strategy)
    best = max(len(k) for k in ks)
    return best, {k for k in ks if len(k) == best}
