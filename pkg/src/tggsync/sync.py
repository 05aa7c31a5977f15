"""Repair-based synchronization of source edits.

A :class:`Synchronizer` owns a triple graph, the bookkeeping of rule
applications that explain it (:class:`MatchStore`) and the marking of
translated source elements.  Edits go through the synchronizer so that it
knows which elements changed; :meth:`Synchronizer.update_matches` then only
looks at records and forward matches near those elements.

Modes of :meth:`Synchronizer.synchronize`:

``repair``
    translate first, then repair broken records with repair rules; implicit
    deletion of dangling edges is allowed and an unrepairable record is
    revoked instead of aborting.
``legacy``
    never repair: broken records are revoked and their elements translated
    again.  This is the baseline the benchmarks compare against.
``strict``
    like ``repair`` but without implicit deletion and without revocation;
    an unrepairable record raises :class:`InconsistentState`.
"""

from __future__ import annotations

import graphlib
import random
import time
from collections import defaultdict
from dataclasses import dataclass, field
from types import SimpleNamespace

from .graph import CORR, SOURCE, TARGET, GraphError, PartialTripleGraph, TripleGraph, is_morphism, iter_injective_morphisms
from .rewriting import Match, apply, is_applicable, dangling, propagate_attributes, satisfies_nacs, undo
from .tgg import TGG, MarkingState, NotInLanguage, check_marking_sequence, is_member

MODES = ("repair", "legacy", "strict")


class InconsistentState(GraphError):
    """Nothing is left to translate or repair but the model is not consistent."""

    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace


class StepCapExceeded(GraphError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace


# --------------------------------------------------------------------------
# bookkeeping


@dataclass
class Record:
    """One TGG rule application witnessed by a consistency match.

    ``mapping`` maps the rule's RHS ids to host ids; ``created`` holds the
    correspondence and target host elements the application created."""

    id: int
    rule: object
    mapping: dict
    marked: frozenset
    required: frozenset
    created: frozenset
    kind: str = "translate"

    def images(self):
        return set(self.mapping.values())

    def sort_key(self):
        return (self.rule.name, tuple(sorted(self.mapping.values())))


def record_from_comatch(rid, rule, comatch, kind="translate"):
    mapping = {x: comatch[x] for x in rule.rhs.ids()}
    src = rule.rhs.source.ids()
    return Record(
        rid,
        rule,
        mapping,
        frozenset(mapping[x] for x in rule.created & src),
        frozenset(mapping[x] for x in rule.lhs.source.ids()),
        frozenset(mapping[x] for x in rule.created - src),
        kind,
    )


class MatchStore:
    def __init__(self):
        self.records: dict[int, Record] = {}
        self.by_elem = defaultdict(set)
        self.creator: dict[str, int] = {}
        self.marking = MarkingState()
        self.broken: dict[int, str] = {}
        self.fwd: dict[tuple, Match] = {}
        self.fwd_by_elem = defaultdict(set)
        self._next = 0

    def new_id(self):
        self._next += 1
        return self._next

    def add(self, rec: Record):
        self.records[rec.id] = rec
        for h in rec.mapping.values():
            self.by_elem[h].add(rec.id)
        for h in rec.created:
            self.creator[h] = rec.id
        self.marking.mark(rec.marked, rec.id)

    def remove(self, rid):
        rec = self.records.pop(rid)
        for h in rec.mapping.values():
            self.by_elem[h].discard(rid)
            if not self.by_elem[h]:
                del self.by_elem[h]
        for h in rec.created:
            if self.creator.get(h) == rid:
                del self.creator[h]
        self.marking.unmark(x for x in rec.marked if self.marking.owner.get(x) == rid)
        self.broken.pop(rid, None)
        return rec

    def intact(self):
        return [r for r in self.records.values() if r.id not in self.broken]

    def owner_of(self, h):
        """Record that translated (source) or created (corr/target) ``h``."""
        if h in self.marking.owner:
            return self.marking.owner[h]
        return self.creator.get(h)

    def ancestors(self, rid):
        """Records ``rid`` transitively depends on via required elements."""
        seen, todo = set(), [rid]
        while todo:
            rec = self.records.get(todo.pop())
            if rec is None:
                continue
            for h in rec.required:
                o = self.marking.owner.get(h)
                if o is not None and o not in seen:
                    seen.add(o)
                    todo.append(o)
        return seen

    def precedence(self):
        return PrecedenceGraph.from_store(self)

    def sequence(self):
        """Records in an order where every record comes after the records
        translating its required elements."""
        ts = graphlib.TopologicalSorter()
        for rec in sorted(self.records.values(), key=lambda r: r.id):
            deps = {self.marking.owner[h] for h in rec.required if h in self.marking.owner}
            ts.add(rec.id, *sorted(deps - {rec.id}))
        order = list(ts.static_order())
        return [self.records[i] for i in order if i in self.records]

    def add_fwd(self, match):
        key = match.key()
        if key in self.fwd:
            return
        self.fwd[key] = match
        for h in match.mapping.values():
            self.fwd_by_elem[h].add(key)

    def drop_fwd(self, key):
        match = self.fwd.pop(key, None)
        if match is None:
            return
        for h in match.mapping.values():
            s = self.fwd_by_elem.get(h)
            if s is not None:
                s.discard(key)
                if not s:
                    del self.fwd_by_elem[h]


class PrecedenceGraph:
    """Dependencies between source elements: an element marked by some
    application depends on every element that application required."""

    def __init__(self, edges=()):
        self.succ = defaultdict(set)
        for a, b in edges:
            self.succ[a].add(b)

    @classmethod
    def from_store(cls, store: MatchStore):
        edges = [(m, q) for rec in store.records.values() for m in rec.marked for q in rec.required]
        return cls(edges)

    def depends(self, a, b):
        """``a`` depends transitively on ``b``."""
        seen, todo = set(), [a]
        while todo:
            for y in self.succ.get(todo.pop(), ()):
                if y == b:
                    return True
                if y not in seen:
                    seen.add(y)
                    todo.append(y)
        return False

    def is_acyclic(self):
        ts = graphlib.TopologicalSorter({a: sorted(bs) for a, bs in self.succ.items()})
        try:
            ts.prepare()
        except graphlib.CycleError:
            return False
        return True


# --------------------------------------------------------------------------
# traces


@dataclass
class Step:
    kind: str  # translate | repair | revoke
    rule: str
    match: dict
    created: list
    deleted: list
    preserved: int = 0
    recreated: int = 0
    created_nodes: int = 0
    created_links: int = 0

    def to_dict(self):
        return {
            "kind": self.kind,
            "rule": self.rule,
            "match": dict(sorted(self.match.items())),
            "created": sorted(self.created),
            "deleted": sorted(self.deleted),
            "preserved": self.preserved,
            "recreated": self.recreated,
        }


@dataclass
class SyncTrace:
    mode: str = "repair"
    steps: list = field(default_factory=list)
    wall_time_ms: float = 0.0
    outcome: str = "ok"
    initial_broken: int = 0
    source_elements: int = 0
    attribute_updates: list = field(default_factory=list)

    def count(self, kind):
        return sum(1 for s in self.steps if s.kind == kind)

    @property
    def revocations(self):
        return self.count("revoke")

    @property
    def created_elements(self):
        """Elements created again for source elements that were already
        translated before the run (the 'recreated' count)."""
        return sum(s.recreated for s in self.steps)

    @property
    def created_total(self):
        return sum(len(s.created) for s in self.steps)

    @property
    def deleted_elements(self):
        return sum(len(s.deleted) for s in self.steps)

    @property
    def preserved_elements(self):
        return sum(s.preserved for s in self.steps)

    def step_bound(self):
        return self.source_elements + self.initial_broken + self.revocations

    def totals(self):
        recre = [s for s in self.steps if s.recreated]
        return {
            "createdElements": self.created_elements,
            "createdTotal": self.created_total,
            "deletedElements": self.deleted_elements,
            "preservedElements": self.preserved_elements,
            "recreatedNodes": sum(s.created_nodes for s in recre),
            "recreatedWithLinks": sum(s.recreated + s.created_links for s in recre),
            "steps": len(self.steps),
            "translateSteps": self.count("translate"),
            "repairSteps": self.count("repair"),
            "revokeSteps": self.revocations,
            "wallTimeMs": round(self.wall_time_ms, 3),
        }

    def to_dict(self):
        return {
            "mode": self.mode,
            "outcome": self.outcome,
            "initialBroken": self.initial_broken,
            "sourceElements": self.source_elements,
            "steps": [s.to_dict() for s in self.steps],
            "attributeUpdates": [list(u) for u in self.attribute_updates],
            "totals": self.totals(),
        }


# --------------------------------------------------------------------------
# the engine


def _is_edge(el):
    return hasattr(el, "src")


def _is_local(nac, lhs):
    """Every NAC-only element is adjacent to the LHS, so a new violation can
    only appear next to a changed element."""
    g, base = nac.graph, lhs.ids()
    for comp in (SOURCE, CORR, TARGET):
        c = g.component(comp)
        for e in c.edges.values():
            if e.id not in base and e.src not in base and e.trg not in base:
                return False
        for n in c.nodes:
            if n in base:
                continue
            near = any(
                (c.edges[e].src in base or c.edges[e].trg in base) for e in c.incident(n)
            ) or g.sigma.get(n) in base or g.tau.get(n) in base
            if not near:
                return False
    return True


class Synchronizer:
    """Owns one host triple graph and keeps its bookkeeping up to date."""

    def __init__(self, tgg: TGG, host: TripleGraph, catalog=None, seed=None):
        self.tgg = tgg
        self.host = host
        self.catalog = catalog
        self.store = MatchStore()
        self.untranslated = set(self.host.source.ids())
        self._changed = set()
        self._deleted = set()
        self._attr_changed = set()
        self._rng = random.Random(seed) if seed is not None else None
        self._fwd_rules = tgg.forward_rules()
        self._global_nacs = {
            r.name
            for r in tgg.rules
            if not all(_is_local(n, tgg.consistency(r).lhs) for n in tgg.consistency(r).nacs)
        }
        self._global_fwd = [
            fr for fr in self._fwd_rules if not all(_is_local(n, fr.lhs) for n in fr.nacs)
        ]
        self._anchors = {}
        self._trace = SyncTrace()
        self.initially_translated = set()
        self.implicit_delete = True

    # construction -------------------------------------------------------------
    @classmethod
    def translate(cls, tgg: TGG, source, catalog=None, seed=None):
        """Batch-translate a source graph by forward steps."""
        host = PartialTripleGraph(source=source.copy())
        st = tgg.start
        for comp in (CORR, TARGET):
            for n in st.component(comp).nodes.values():
                host.add_node(comp, n.id, n.type, n.attrs)
            for e in st.component(comp).edges.values():
                host.add_edge(comp, e.id, e.type, e.src, e.trg)
        for cx, x in st.sigma.items():
            host.set_sigma(cx, x)
        for cx, x in st.tau.items():
            host.set_tau(cx, x)
        sync = cls(tgg, host, catalog, seed)
        sync.untranslated -= st.source.ids()
        sync._changed = set(host.ids())
        trace = sync.synchronize(mode="strict")
        sync.translation_trace = trace
        return sync

    @classmethod
    def from_triple(cls, tgg: TGG, triple: TripleGraph, catalog=None, seed=None):
        """Rebuild the bookkeeping of a consistent triple graph."""
        ok, records = is_member(tgg, triple, return_records=True)
        if not ok:
            raise NotInLanguage("model is not a member of the grammar's language")
        sync = cls(tgg, triple.copy(), catalog, seed)
        for rule, m in records:
            rec = record_from_comatch(sync.store.new_id(), rule, m, kind="initial")
            sync.store.add(rec)
            sync.untranslated -= rec.marked
        sync.untranslated -= tgg.start.source.ids()
        return sync

    # edits ----------------------------------------------------------------------
    def edit(self, ops):
        """Apply source edit operations (see :mod:`tggsync.modelio`)."""
        from .modelio import DanglingWithoutCascade, UnknownId, parse_edit_script

        if isinstance(ops, str):
            ops = parse_edit_script(ops)
        h = self.host
        for op in ops:
            if op.kind == "add-node":
                h.add_node(SOURCE, op.id, op.type, op.attrs)
                self._added(op.id)
            elif op.kind == "add-edge":
                if op.src not in h.source.nodes or op.trg not in h.source.nodes:
                    raise UnknownId(f"edge {op.id} refers to a missing node")
                h.add_edge(SOURCE, op.id, op.type, op.src, op.trg)
                self._added(op.id)
            elif op.kind == "delete-edge":
                if op.id not in h.source.edges:
                    raise UnknownId(op.id)
                self._remove(op.id)
            elif op.kind == "delete-node":
                if op.id not in h.source.nodes:
                    raise UnknownId(op.id)
                inc = h.source.incident(op.id)
                if inc and not op.cascade:
                    raise DanglingWithoutCascade(f"{op.id} still has edges {sorted(inc)}")
                for e in sorted(inc):
                    self._remove(e)
                self._remove(op.id)
            elif op.kind == "set-attr":
                if op.id not in h.source.nodes:
                    raise UnknownId(op.id)
                h.source.nodes[op.id].attrs.update(op.attrs)
                self._attr_changed.add(op.id)
            else:
                raise GraphError(f"unknown edit operation {op.kind}")

    def _neighbours(self, x):
        h = self.host
        el = h.element(x)
        if el is None:
            return set()
        out = {x}
        if _is_edge(el):
            out |= {el.src, el.trg}
        comp = h.component_of(x)
        if comp == CORR:
            out |= {y for y in (h.sigma.get(x), h.tau.get(x)) if y is not None}
        else:
            out |= h.sigma_preimage(x) | h.tau_preimage(x)
        return out

    def _added(self, x):
        if self.host.component_of(x) == SOURCE:
            self.untranslated.add(x)
        self._changed |= self._neighbours(x)

    def _remove(self, x):
        """Remove one element, remembering what it touched."""
        near = self._neighbours(x) - {x}
        self.host.remove(x)
        self._note_deleted(x, near)

    def _note_deleted(self, x, near):
        self._deleted.add(x)
        self._changed.discard(x)
        self._changed |= near
        self.untranslated.discard(x)

    def _note_app(self, app):
        for comp, el, s, t, (spre, tpre) in app._removed:
            near = set(spre) | set(tpre) | {y for y in (s, t) if y is not None}
            if _is_edge(el):
                near |= {el.src, el.trg}
            self._note_deleted(el.id, {y for y in near if self.host.element(y) is not None})
        for x in app.created:
            self._added(x)

    # match bookkeeping -----------------------------------------------------
    def record_status(self, rec: Record):
        """'' for an intact record, otherwise the reason it is broken."""
        h, m = self.host, rec.mapping
        for x in m.values():
            if h.element(x) is None:
                return "deleted"
        for cx, x in rec.rule.rhs.sigma.items():
            if h.sigma.get(m[cx]) != m[x]:
                return "sigma"
        for cx, x in rec.rule.rhs.tau.items():
            if h.tau.get(m[cx]) != m[x]:
                return "tau"
        if not rec.required <= self.store.marking.translated:
            return "unmarked-context"
        if not satisfies_nacs(self.tgg.consistency(rec.rule).nacs, h, m):
            return "nac"
        return ""

    def _fwd_valid(self, match):
        fr, m = match.rule, match.mapping
        h = self.host
        if any(h.element(x) is None for x in m.values()):
            return False
        translated = self.store.marking.translated
        if any(m[x] in translated for x in fr.marking):
            return False
        if not all(m[x] in translated for x in fr.required):
            return False
        if not is_morphism(fr.lhs, h, m):
            return False
        return satisfies_nacs(fr.nacs, h, m)

    def update_matches(self):
        """Bring broken records and forward matches up to date.

        Returns ``(broken, intact, fwd)``: broken record ids with reasons,
        intact record ids and the available forward matches."""
        st, h = self.store, self.host
        touched = self._changed | self._deleted
        self._changed, self._deleted = set(), set()
        check = set()
        for x in touched:
            check |= st.by_elem.get(x, set())
        if touched and self._global_nacs:
            check |= {r.id for r in st.records.values() if r.rule.name in self._global_nacs}
        for rid in check:
            rec = st.records[rid]
            why = self.record_status(rec)
            if why:
                st.broken[rid] = why
            else:
                st.broken.pop(rid, None)
        stale = set()
        for x in touched:
            stale |= st.fwd_by_elem.get(x, set())
        if touched and self._global_fwd:
            stale |= set(st.fwd)
        for key in stale:
            if key in st.fwd and not self._fwd_valid(st.fwd[key]):
                st.drop_fwd(key)
        alive = [x for x in sorted(touched) if h.element(x) is not None]
        for fr in self._fwd_rules:
            anchors = self._anchor_index(fr)
            for x in alive:
                el = h.element(x)
                for y in anchors.get((h.component_of(x), _is_edge(el), el.type), ()):
                    for m in iter_injective_morphisms(fr.lhs, h, fixed={y: x}):
                        match = Match(fr, m, h)
                        if match.key() not in st.fwd and self._fwd_valid(match):
                            st.add_fwd(match)
        if touched and self._global_fwd:
            for fr in self._global_fwd:
                for m in iter_injective_morphisms(fr.lhs, h):
                    match = Match(fr, m, h)
                    if match.key() not in st.fwd and self._fwd_valid(match):
                        st.add_fwd(match)
        self._propagate_changed_attributes()
        intact = sorted(set(st.records) - set(st.broken))
        return dict(st.broken), intact, list(st.fwd.values())

    def _anchor_index(self, fr):
        cache = self._anchors
        if fr.name not in cache:
            idx = defaultdict(list)
            for comp in (SOURCE, CORR, TARGET):
                g = fr.lhs.component(comp)
                for n in g.nodes.values():
                    idx[(comp, False, n.type)].append(n.id)
                for e in g.edges.values():
                    idx[(comp, True, e.type)].append(e.id)
            cache[fr.name] = idx
        return cache[fr.name]

    def _propagate_changed_attributes(self):
        if not self._attr_changed:
            return
        changed, self._attr_changed = self._attr_changed, set()
        rids = set()
        for x in changed:
            rids |= self.store.by_elem.get(x, set())
        for rid in sorted(rids):
            rec = self.store.records[rid]
            if rid in self.store.broken:
                continue
            eqs = self.tgg.forward(rec.rule).attr_eqs if rec.rule in self.tgg.rules else rec.rule.attr_eqs
            for upd in _propagate(eqs, rec.mapping, self.host):
                self._trace.attribute_updates.append(upd)

    def is_finished(self):
        st = self.store
        if st.fwd or st.broken:
            return False
        if self.untranslated:
            raise InconsistentState(
                f"untranslated source elements remain: {', '.join(sorted(self.untranslated)[:10])}",
                self._trace,
            )
        return True

    # steps -------------------------------------------------------------------
    def _choose(self, items, key):
        items = sorted(items, key=key)
        if self._rng is not None:
            return self._rng.choice(items)
        return items[0]

    def builds_on_waiting(self, match, waiting):
        """True if the forward match requires an element owned by one of the
        ``waiting`` applications, directly or through its ancestors.

        A waiting application is broken only because some element it
        requires is untranslated. Translating on top of it can close a
        dependency cycle, which otherwise shows up as an endless round of
        translations and revocations, so such matches are deferred."""
        st = self.store
        fr, m = match.rule, match.mapping
        owners = {st.marking.owner.get(m[x]) for x in fr.required} - {None}
        closure = set(owners)
        for o in owners:
            closure |= st.ancestors(o)
        return bool(closure & waiting)

    def _waiting(self):
        st = self.store
        return {rid for rid in st.broken if st.records[rid].required - st.marking.translated}

    def translate_step(self):
        st = self.store
        if not st.fwd:
            return False
        waiting = self._waiting()
        cands = [mt for mt in st.fwd.values() if not waiting or not self.builds_on_waiting(mt, waiting)]
        if not cands:
            return False
        match = self._choose(cands, lambda mt: (mt.rule.name, tuple(sorted(mt.mapping.values()))))
        fr = match.rule
        app = apply(fr, match, self.host)
        st.drop_fwd(match.key())
        rec = record_from_comatch(st.new_id(), fr.base, app.comatch)
        st.add(rec)
        self.untranslated -= rec.marked
        self._note_app(app)
        self._changed |= rec.marked
        nodes = sum(1 for x in app.created if self.host.element(x) is not None and not _is_edge(self.host.element(x)))
        links = sum(1 for x in app.created if x in self.host.sigma) + sum(1 for x in app.created if x in self.host.tau)
        again = bool(rec.marked & self.initially_translated)
        self._trace.steps.append(
            Step(
                "translate",
                fr.name,
                dict(match.mapping),
                sorted(app.created),
                [],
                recreated=len(app.created) if again else 0,
                created_nodes=nodes if again else 0,
                created_links=links if again else 0,
            )
        )
        return True

    def least_broken(self):
        st = self.store
        if not st.broken:
            return None
        return min(st.broken, key=lambda rid: st.records[rid].sort_key())

    def suitable_repairs(self, rec: Record):
        if self.catalog is None:
            return []
        missing = frozenset(
            y for y in rec.rule.rhs.source.ids() if self.host.element(rec.mapping[y]) is None
        )
        out = []
        for rr in self.catalog.suitable(rec.rule.name, missing):
            if not rr.deleted and not rr.created:
                continue  # the identity short-cut repairs nothing
            out.append(rr)
        return sorted(out, key=lambda r: r.name)

    def reversing_fix(self, rr, rec: Record):
        fixed = {}
        for y, h in rec.mapping.items():
            x = rr.names1.get(y)
            if x is not None and x in rr.lhs:
                if self.host.element(h) is None:
                    return None
                fixed[x] = h
        return fixed

    def is_valid_repair_match(self, rr, mapping, rec: Record):
        """Check the clauses of a valid repair match; returns (ok, reason)."""
        st, h = self.store, self.host
        if rr.replaced != rec.rule.name:
            return False, "repair rule replaces another rule"
        for y, hy in rec.mapping.items():
            x = rr.names1.get(y)
            if x is not None and x in rr.lhs and mapping.get(x) != hy:
                return False, f"not reversing at {x}"
        ok, why = is_applicable(rr, Match(rr, mapping, h), h, implicit_delete=self.implicit_delete)
        if not ok:
            return False, why
        doomed = {mapping[x] for x in rr.deleted}
        if self.implicit_delete:
            doomed |= dangling(rr, Match(rr, mapping, h), h)
        for x in doomed:
            for other in st.by_elem.get(x, ()):
                if other != rec.id and other not in st.broken:
                    return False, f"disabling: deletes {x} of an intact application"
        ancestors_cache = {}
        for x in rr.presumed:
            hx = mapping[x]
            owner = st.owner_of(hx)
            if h.component_of(hx) == SOURCE and hx not in st.marking.translated:
                return False, f"presumed element {hx} is not translated"
            if owner is None:
                return False, f"presumed element {hx} belongs to no application"
            if owner in st.broken:
                return False, f"presumed element {hx} belongs to a broken application"
            if owner not in ancestors_cache:
                ancestors_cache[owner] = st.ancestors(owner)
            if owner == rec.id or rec.id in ancestors_cache[owner]:
                return False, f"presumed element {hx} depends on the repaired application"
        for x in rr.creation_elements:
            if mapping[x] in st.marking.translated:
                return False, f"creation element {mapping[x]} is already translated"
        return True, ""

    def repair_candidates(self, rr, rec: Record):
        fixed = self.reversing_fix(rr, rec)
        if fixed is None:
            return []
        cands = list(iter_injective_morphisms(rr.lhs, self.host, fixed=fixed))
        keys = sorted(rr.lhs.ids())
        cands.sort(key=lambda m: [m[k] for k in keys])
        return cands

    def repair_step(self):
        """Repair the least broken record; returns ``(match, success)``."""
        rid = self.least_broken()
        if rid is None:
            return None, False
        rec = self.store.records[rid]
        for rr in self.suitable_repairs(rec):
            for m in self.repair_candidates(rr, rec):
                ok, _ = self.is_valid_repair_match(rr, m, rec)
                if ok and self._apply_repair(rr, m, rec):
                    return Match(rr, m, self.host), True
        return None, False

    def _apply_repair(self, rr, m, rec: Record):
        st, h = self.store, self.host
        app = apply(rr, Match(rr, m, h), h, implicit_delete=self.implicit_delete)
        r2 = rr.shortcut.replacing
        comatch = {y: app.comatch[rr.names2[y]] for y in r2.rhs.ids()}
        new = record_from_comatch(rec.id, r2, comatch, kind="repair")
        # the new record must be intact and must not break intact neighbours
        st.marking.unmark(rec.marked)
        st.marking.mark(new.marked - st.marking.translated, rec.id)
        ok = self.record_status(new) == ""
        if ok:
            near = set()
            for x in app.created:
                near |= self._neighbours(x)
            for x in sorted(near):
                for other in st.by_elem.get(x, ()):
                    if other != rec.id and other not in st.broken and self.record_status(st.records[other]):
                        ok = False
        if not ok:
            st.marking.unmark(new.marked)
            st.marking.mark(rec.marked, rec.id)
            undo(app, h)
            return False
        st.marking.unmark(new.marked)
        st.remove(rec.id)
        st.add(new)
        self.untranslated -= new.marked
        self._note_app(app)
        self._changed |= new.images()
        eqs = self.tgg.forward(r2).attr_eqs if r2 in self.tgg.rules else r2.attr_eqs
        for upd in _propagate(eqs, new.mapping, h):
            self._trace.attribute_updates.append(upd)
        kept = {rec.mapping[y] for y in rec.rule.created - rec.rule.rhs.source.ids()}
        self._trace.steps.append(
            Step(
                "repair",
                rr.name,
                dict(m),
                sorted(x for x in app.created if h.component_of(x) != SOURCE),
                sorted(app.deleted),
                preserved=len(kept & new.created),
            )
        )
        return True

    def revoke(self, rid):
        """Delete what the application created and unmark its elements."""
        st, h = self.store, self.host
        rec = st.records[rid]
        doomed = {x for x in rec.created if h.element(x) is not None}
        extra = set()
        for x in doomed:
            el = h.element(x)
            if not _is_edge(el):
                extra |= h.component(h.component_of(x)).incident(x)
        doomed |= extra
        edges = sorted(x for x in doomed if _is_edge(h.element(x)))
        nodes = sorted(doomed - set(edges))
        for x in edges + nodes:
            self._remove(x)
        st.remove(rid)
        alive = {x for x in rec.marked if h.element(x) is not None}
        self.untranslated |= alive
        self._changed |= alive
        self._trace.steps.append(Step("revoke", rec.rule.name, dict(rec.mapping), [], sorted(doomed)))

    # main loop ---------------------------------------------------------------
    def synchronize(self, mode="repair", step_cap=None):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
        self.implicit_delete = mode != "strict"
        trace = SyncTrace(mode)
        self._trace = trace
        self.initially_translated = set(self.store.marking.translated)
        trace.source_elements = len(self.host.source)
        t0 = time.perf_counter()
        self.update_matches()
        trace.initial_broken = len(self.store.broken)
        if step_cap is None:
            step_cap = 4 * (len(self.host.source) + len(self.store.records) + 8)
        try:
            while True:
                self.update_matches()
                if self.is_finished():
                    break
                if len(trace.steps) >= step_cap:
                    trace.outcome = "step-cap"
                    raise StepCapExceeded(f"step cap {step_cap} reached", trace)
                if self.translate_step():
                    continue
                if mode == "legacy":
                    self.revoke(self.least_broken())
                    continue
                _, ok = self.repair_step()
                if ok:
                    continue
                if mode == "strict":
                    rec = self.store.records[self.least_broken()]
                    raise InconsistentState(f"no valid repair for broken {rec.rule.name} application", trace)
                self.revoke(self.least_broken())
        except InconsistentState:
            if trace.outcome == "ok":
                trace.outcome = "inconsistent"
            trace.wall_time_ms = (time.perf_counter() - t0) * 1000
            raise
        finally:
            trace.wall_time_ms = (time.perf_counter() - t0) * 1000
        return trace

    # checks -------------------------------------------------------------------
    def result(self) -> TripleGraph:
        h = self.host
        g = TripleGraph(h.source.copy(), h.corr.copy(), h.target.copy(), h.sigma, h.tau)
        g._counter, g._seen = h._counter, set(h._seen)
        return g

    def marking_check(self):
        seq = [(r.marked, r.required) for r in self.store.sequence()]
        universe = self.host.source.ids() - self.tgg.start.source.ids()
        return check_marking_sequence(seq, universe)

    def rebuild_store(self):
        """Recompute all bookkeeping from scratch (used to cross-check the
        incremental updates)."""
        fresh = Synchronizer(self.tgg, self.host.copy(), self.catalog)
        fresh.store.marking = MarkingState(set(self.store.marking.translated), dict(self.store.marking.owner))
        for rec in self.store.records.values():
            fresh.store.records[rec.id] = rec
            for x in rec.mapping.values():
                fresh.store.by_elem[x].add(rec.id)
        fresh.untranslated = set(self.untranslated)
        fresh._changed = set(fresh.host.ids())
        fresh.update_matches()
        return fresh.store


def _propagate(eqs, mapping, host):
    return propagate_attributes(SimpleNamespace(attr_eqs=eqs), mapping, host)


# --------------------------------------------------------------------------
# convenience front end


def synchronize(tgg, model, edit, catalog=None, mode="repair", step_cap=None, seed=None):
    """Load bookkeeping for a consistent ``model``, apply ``edit`` and
    synchronize.  Returns ``(synchronizer, trace)``."""
    sync = Synchronizer.from_triple(tgg, model, catalog, seed)
    sync.edit(edit)
    trace = sync.synchronize(mode, step_cap)
    return sync, trace


def translate(tgg, source, seed=None):
    """Batch forward translation; returns the translated triple graph."""
    return Synchronizer.translate(tgg, source, seed=seed).result()
