from __future__ import annotations

import pytest

from tggsync.bench import (
    REFACTORINGS,
    SCENARIOS,
    ScenarioSpec,
    bundled,
    gen_synthetic,
    leaf_packages,
    prepare,
    run_matrix,
    run_refactoring,
    run_scenario,
    subtree,
    translation_counts,
)
from tggsync.iso import isomorphic
from tggsync.sync import Synchronizer
from tggsync.tgg import is_member


def count_types(g):
    out = {}
    for n in g.nodes.values():
        out[n.type] = out.get(n.type, 0) + 1
    return out


class TestSynthetic:
    @pytest.mark.parametrize("n, packages, classes", [(1, 1, 5), (2, 6, 25), (3, 31, 125)])
    def test_tree_shape(self, n, packages, classes):
        g = gen_synthetic(n)
        assert count_types(g) == {"Package": packages, "Class": classes}
        # a tree: one edge per non-root node
        assert len(g.edges) == len(g.nodes) - 1
        assert len(leaf_packages(g)) == 5 ** (n - 1)

    def test_n1_counts(self):
        g = gen_synthetic(1)
        assert (len(g.nodes), len(g.edges)) == (6, 5)

    @pytest.mark.parametrize("bad", [0, -1, 1.5])
    def test_rejects_bad_levels(self, bad):
        with pytest.raises(ValueError):
            gen_synthetic(bad)

    def test_eval_flavor(self, evalg):
        g = gen_synthetic(1, "eval")
        types = count_types(g)
        assert types["Model"] == 1 and types["MethodDecl"] == 5 and types["FieldDecl"] == 5
        tgg, _ = evalg
        assert is_member(tgg, Synchronizer.translate(tgg, g).result())

    def test_translation_counts(self):
        # hand count for n=1: 6 corr nodes, 6 folder/doc nodes, 5 target edges
        assert translation_counts(1) == {"nodes": 12, "elements": 17, "with_links": 29}

    def test_subtree(self):
        g = gen_synthetic(2)
        assert subtree(g, "p") == g.ids()
        assert len(subtree(g, "p.1")) == 11


class TestScenarios:
    @pytest.mark.parametrize("scen", SCENARIOS)
    @pytest.mark.parametrize("n", [1, 2])
    def test_repair_creates_nothing(self, scen, n):
        row = run_scenario(ScenarioSpec(scen, n, "repair"))
        assert row.created_elements == 0
        assert row.trace.revocations == 0

    @pytest.mark.parametrize("scen", SCENARIOS)
    @pytest.mark.parametrize("n", [1, 2])
    def test_legacy_recreates_moved_subtree(self, scen, n):
        row = run_scenario(ScenarioSpec(scen, n, "legacy"))
        assert row.created_elements >= row.footprint > 0

    def test_scen1_legacy_counts(self):
        # the whole tree hangs below the new root, so legacy re-creates all of
        # it plus the new root's folder and correspondence
        for n, expected in [(1, 20), (2, 105)]:
            row = run_scenario(ScenarioSpec("scen1", n, "legacy"))
            assert row.created_elements == expected
            assert row.footprint == translation_counts(n)["elements"]

    @pytest.mark.parametrize("scen", SCENARIOS)
    def test_repair_and_legacy_agree(self, scen):
        results = []
        for mode in ("repair", "legacy"):
            spec = ScenarioSpec(scen, 2, mode)
            sync, ops, _ = prepare(spec)
            sync.edit(ops)
            sync.synchronize(mode)
            results.append(sync.result())
        tgg, _ = bundled(ScenarioSpec(scen, 2).grammar)
        assert all(is_member(tgg, r) for r in results)
        assert isomorphic(*results, attrs=False)

    def test_unknown_scenario(self):
        with pytest.raises(ValueError):
            run_scenario(ScenarioSpec("scen9", 1))


class TestReport:
    def test_reproducible_with_seed(self):
        a = run_matrix((1, 2), seed=7)
        b = run_matrix((1, 2), seed=7)
        assert [r.as_tuple() for r in a.rows] == [r.as_tuple() for r in b.rows]
        assert a.table(times=False) == b.table(times=False)
        assert [[(s.kind, s.rule, sorted(s.match.items())) for s in r.trace.steps] for r in a.rows] == [
            [(s.kind, s.rule, sorted(s.match.items())) for s in r.trace.steps] for r in b.rows
        ]

    def test_deltas_and_table(self):
        rep = run_matrix((1,), ("scen1", "scen3"))
        assert rep.deltas() == {("synthetic n=1", "scen1"): 20, ("synthetic n=1", "scen3"): 3}
        lines = rep.table(times=False).splitlines()
        assert lines[0].split("\t") == ["model", "scenario", "mode", "created", "footprint", "steps"]
        assert len(lines) == 5
        with pytest.raises(KeyError):
            rep.get("scen2", 1, "repair")


class TestRefactorings:
    def test_move_field(self):
        out = run_refactoring("move-field")
        assert out["rules"] == ["Move-Field-Repair-Rule"] and out["created"] == 0

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_push_up_field(self, k):
        out = run_refactoring("push-up-field", k)
        assert out["repair"] == 1 and out["revoke"] == k and out["translate"] == 0

    def test_extract_class(self):
        out = run_refactoring("extract-class")
        assert out["translate"] >= 1 and out["repair"] >= 1 and out["revoke"] == 0

    @pytest.mark.parametrize("rid", REFACTORINGS)
    def test_marking_and_legacy_agreement(self, rid, evalg):
        tgg, _ = evalg
        rep, leg = run_refactoring(rid), run_refactoring(rid, mode="legacy")
        assert rep["marking"]["consistent"] and rep["marking"]["entire"]
        assert is_member(tgg, rep["sync"].result())
        assert isomorphic(rep["sync"].result(), leg["sync"].result(), attrs=False)
        assert leg["created"] > rep["created"] == 0

    def test_unknown_refactoring(self):
        with pytest.raises(ValueError):
            run_refactoring("inline-method")
