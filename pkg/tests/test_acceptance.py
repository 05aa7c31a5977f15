"""End-to-end acceptance checks.  Each test prints one summary line."""

from __future__ import annotations

import math
import time
from importlib.resources import files
from pathlib import Path

import pytest

from helpers import (
    all_source_hosts,
    docgen_shape_ok,
    random_derivation,
    random_docgen_source,
    random_edit,
    random_typed_source,
    rng_for,
    shortcut_equivalence,
)
from helpers_overlap import maximum_kernels
from tggsync.bench import (
    REFACTORINGS,
    ScenarioSpec,
    prepare,
    refactoring_fixture,
    run_scenario,
)
from tggsync.cli import main
from tggsync.graph import TripleGraph, iter_injective_morphisms
from tggsync.iso import isomorphic, rules_isomorphic
from tggsync.modelio import parse_model, parse_rule_text
from tggsync.rewriting import NAC, restrict, satisfies_nacs, shift_nac
from tggsync.shortcut import MAXIMAL, MINIMAL, build_overlap_problem, build_shortcut_rule, solve_overlap
from tggsync.sync import InconsistentState, StepCapExceeded, Synchronizer, synchronize
from tggsync.tgg import NotInLanguage, generate_language_sample, is_member, membership_by_translation

SHAPES = Path(__file__).parent / "fixtures" / "shapes.rules"


def data(name):
    return (files("tggsync") / "data" / name).read_text(encoding="utf-8")


@pytest.fixture
def report(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\nacceptance {label}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail

    return emit


def translatable(tgg, source):
    try:
        membership_by_translation(tgg, source)
        return True
    except NotInLanguage:
        return False


def test_round_trip_and_single_repair(docgen, report):
    tgg, cat = docgen
    t0 = time.perf_counter()
    nested = parse_model(data("nested.trim"), tgg.type_graph)
    translated = Synchronizer.translate(tgg, nested.source).result()
    # content is hand-written target data that no translation produces
    reference = nested.copy()
    del reference.target.nodes["leafPDoc"].attrs["content"]
    round_trip = isomorphic(translated, reference)
    sync, tr = synchronize(tgg, nested, data("makeroot.edit"), cat)
    out = sync.result()
    expected = nested.copy()
    for x in ("e_root_sub", "f_root_sub", "d_sub", "subPDoc"):
        expected.remove(x)
    elapsed = time.perf_counter() - t0
    checks = {
        "translation isomorphic": round_trip,
        "one repair step": [s.kind for s in tr.steps] == ["repair"],
        "nothing created": tr.created_elements == 0,
        "three deleted": sorted(tr.steps[0].deleted) == ["d_sub", "f_root_sub", "subPDoc"],
        "content kept": out.target.nodes["leafPDoc"].attrs.get("content") == "leaf",
        "exact result": out.signature() == expected.signature(),
        "under 1 s": elapsed < 1.0,
    }
    bad = [k for k, v in checks.items() if not v]
    report("round-trip", not bad, f"{len(checks) - len(bad)}/{len(checks)} checks, {elapsed * 1000:.0f} ms" + (f", failed: {bad}" if bad else ""))


def test_derived_rule_shapes(tmp_path, capsys, report):
    shapes = {r.name: r for r in parse_rule_text(SHAPES.read_text(encoding="utf-8"))}
    out_file = tmp_path / "derived.rules"
    t0 = time.perf_counter()
    code = main(["derive", "--grammar", "docgen", "--strategy", "both", "--out", str(out_file)])
    derived = {r.name: r for r in parse_rule_text(out_file.read_text(encoding="utf-8"))}
    elapsed = time.perf_counter() - t0
    capsys.readouterr()
    matched = []
    for stem in ("Connect-Root", "Make-Root", "Move-To-New-Sub"):
        for kind in ("SC", "Repair"):
            name = f"{stem}-{kind}-Rule"
            if name in derived and rules_isomorphic(derived[name], shapes[name]):
                matched.append(name)
    nacs = [n.name for n in derived["Make-Root-Repair-Rule"].nacs] if "Make-Root-Repair-Rule" in derived else []
    ok = code == 0 and len(matched) == 6 and nacs == ["nac1", "nac2"] and elapsed < 1.0
    report("rule-shapes", ok, f"{len(matched)}/6 rules isomorphic, Make-Root NACs {nacs}, {elapsed * 1000:.0f} ms")


def test_created_elements_pattern(report):
    t0 = time.perf_counter()
    rows = []
    problems = []
    for n in (1, 2, 3):
        for scen in ("scen1", "scen2", "scen3", "scen4"):
            rep = run_scenario(ScenarioSpec(scen, n, "repair"))
            leg = run_scenario(ScenarioSpec(scen, n, "legacy"))
            rows.append((n, scen, rep.created_elements, leg.created_elements, leg.footprint))
            if rep.created_elements != 0:
                problems.append(f"{scen} n={n} repair created {rep.created_elements}")
            if scen in ("scen1", "scen2") and leg.created_elements <= 0:
                problems.append(f"{scen} n={n} legacy created nothing")
            if leg.created_elements < leg.footprint:
                problems.append(f"{scen} n={n} legacy {leg.created_elements} < footprint {leg.footprint}")
    elapsed = time.perf_counter() - t0
    if elapsed >= 30:
        problems.append(f"took {elapsed:.1f} s")
    summary = " ".join(f"{s}/n{n}:{r}|{lg}" for n, s, r, lg, _ in rows)
    report("created-elements", not problems, f"repair|legacy created {summary}; {elapsed:.1f} s" + (f"; {problems}" if problems else ""))


def test_shortcut_equivalence(docgen, evalg, report):
    hosts = agree = disagree = 0
    exercised = {}
    # the evaluation grammar is deep, so hosts where the parameter rules
    # apply twice are rare; it gets more samples
    for name, (tgg, cat), count in (("docgen", docgen, 60), ("eval", evalg, 400)):
        for seed in range(count):
            host = random_derivation(tgg, rng_for(1000 + seed), 15, noise=seed % 3, by_rule=seed % 2 == 1)
            assert len(host.source) <= 15 + seed % 3
            hosts += 1
            for e in cat.entries:
                for _, direct, composed in shortcut_equivalence(e, host):
                    if direct is None and composed is None:
                        continue
                    if direct is None or composed is None or direct.signature() != composed.signature():
                        disagree += 1
                    else:
                        agree += 1
                        exercised[e.repair.name] = exercised.get(e.repair.name, 0) + 1
    names = [e.repair.name for _, c in (docgen, evalg) for e in c.entries]
    idle = sorted(set(names) - set(exercised))
    ok = disagree == 0 and not idle and hosts >= 100
    report("shortcut-equivalence",
        ok,
        f"{agree} agreeing applications, {disagree} disagreeing, {hosts} hosts, "
        f"{len(exercised)}/{len(names)} repair rules exercised" + (f" (never applicable: {idle})" if idle else ""),
    )


def test_membership_and_sync_correctness(docgen, evalg, report):
    t0 = time.perf_counter()
    failures = []
    members = non_members = outputs = 0
    for name, (tgg, cat) in (("docgen", docgen), ("eval", evalg)):
        sample = generate_language_sample(tgg, 10, measure=lambda g: len(g.source))
        for g in sample:
            members += 1
            if not translatable(tgg, g.source):
                failures.append(f"{name}: member not translated")
    # non-members, decided by independent oracles
    rng = rng_for(5)
    tgg, _ = docgen
    found = 0
    while found < 50:
        g = random_docgen_source(rng, rng.randint(1, 4), rng.randint(0, 3), rng.randint(0, 6))
        if docgen_shape_ok(g):
            continue
        found += 1
        if translatable(tgg, g):
            failures.append("docgen: non-member translated")
    non_members += found
    tgg, _ = evalg
    src_rules = [tgg.source_rule(r) for r in tgg.rules]
    language = generate_language_sample(tgg, 7, measure=lambda g: len(g), rules=src_rules)
    found = 0
    while found < 50:
        g = random_typed_source(rng, tgg.type_graph.source, rng.randint(1, 4), rng.randint(0, 3))
        if len(g) > 7:
            continue
        t = TripleGraph(source=g)
        if any(isomorphic(t, m) for m in language):
            continue
        found += 1
        if translatable(tgg, g):
            failures.append("eval: non-member translated")
    non_members += found
    # synchronization outputs
    for name, (tgg, cat) in (("docgen", docgen), ("eval", evalg)):
        for seed in range(40):
            rng = rng_for(seed)
            host = random_derivation(tgg, rng, 10)
            ops, _ = random_edit(tgg, host.source, rng, rng.randint(1, 3))
            for mode in ("repair", "legacy"):
                sync = Synchronizer.from_triple(tgg, host, cat)
                sync.edit(ops)
                try:
                    sync.synchronize(mode)
                except InconsistentState:
                    continue
                outputs += 1
                mc = sync.marking_check()
                if not is_member(tgg, sync.result()) or not (mc["consistent"] and mc["entire"]):
                    failures.append(f"{name} seed {seed} {mode}: bad output")
    elapsed = time.perf_counter() - t0
    if elapsed >= 60:
        failures.append(f"took {elapsed:.1f} s")
    report("correctness",
        not failures,
        f"{members} members translated, {non_members} non-members rejected, {outputs} sync outputs checked, "
        f"{elapsed:.1f} s" + (f"; {failures[:3]}" if failures else ""),
    )


def test_overlap_solver_optimal(docgen, evalg, report):
    pairs = mismatches = 0
    identity_ok = True
    for tgg, _ in (docgen, evalg):
        for strategy in (MINIMAL, MAXIMAL):
            for r1 in tgg.rules:
                for r2 in tgg.rules:
                    best, optima = maximum_kernels(r1, r2, strategy)
                    k = solve_overlap(build_overlap_problem(r1, r2, strategy))
                    pairs += 1
                    if len(k.pairs) != best or frozenset(k.pairs) not in optima:
                        mismatches += 1
        for r in tgg.rules:
            k = solve_overlap(build_overlap_problem(r, r, MAXIMAL))
            sc = build_shortcut_rule(k)
            if not all(a == b for a, b in k.pairs) or sc.created or sc.deleted:
                identity_ok = False
    report("overlap-solver", mismatches == 0 and identity_ok, f"{pairs - mismatches}/{pairs} pairs optimal, self-overlap identity {identity_ok}")


def _source_part(g):
    return restrict(g, g.source.ids())


def test_nac_shift_semantics(docgen, report):
    tgg, cat = docgen
    root_fwd = tgg.forward("Root-Rule")
    (root_nac,) = root_fwd.nacs
    lhs_root = _source_part(root_fwd.lhs)
    make_root = cat.get("Make-Root").repair
    lhs_mr = _source_part(make_root.lhs)
    nac2 = NAC(_source_part(make_root.nacs[1].graph), "nac2")
    derived_nacs = [NAC(_source_part(n.graph), n.name) for n in make_root.nacs]
    move = _source_part(cat.get("Move-To-New-Sub").repair.lhs)
    connect = _source_part(cat.get("Connect-Root").repair.lhs)
    sub_fwd = _source_part(tgg.forward("Sub-Rule").lhs)
    cases = [
        (root_nac, lhs_root, lhs_mr, {"p": "p"}),
        (root_nac, lhs_root, sub_fwd, {"p": "sp"}),
        (root_nac, lhs_root, move, {"p": "p"}),
        (root_nac, lhs_root, move, {"p": "o.sp"}),
        (root_nac, lhs_root, connect, {"p": "p"}),
        (nac2, lhs_mr, move, {"sp": "o.sp", "p": "p"}),
    ]
    shifted = [shift_nac(nac, lhs, target, inc) for nac, lhs, target, inc in cases]
    checked = disagree = 0
    hosts = 0
    for g in all_source_hosts(tgg.type_graph.source, 6, 3):
        host = TripleGraph(source=g)
        hosts += 1
        for (nac, lhs, target, inc), sh in zip(cases, shifted):
            for m in iter_injective_morphisms(target, host):
                induced = {x: m[inc[x]] for x in lhs.ids()}
                checked += 1
                if satisfies_nacs(sh, host, m) != satisfies_nacs([nac], host, induced):
                    disagree += 1
        # the derived repair NACs are the shifted filter NAC
        for m in iter_injective_morphisms(lhs_mr, host):
            checked += 1
            if satisfies_nacs(derived_nacs, host, m) != satisfies_nacs([root_nac], host, {"p": m["p"]}):
                disagree += 1
    report("nac-shift", disagree == 0 and checked > 0, f"{checked - disagree}/{checked} match checks agree over {hosts} hosts")


def _log_slope(points):
    xs = [math.log(s) for s, _ in points]
    ys = [math.log(t) for _, t in points]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sum((x - mx) ** 2 for x in xs)


def test_termination_and_time_trend(docgen, evalg, report):
    problems = []
    runs = 0

    def run(tgg, cat, model, ops, mode):
        nonlocal runs
        sync = Synchronizer.from_triple(tgg, model, cat)
        sync.edit(ops)
        try:
            tr = sync.synchronize(mode)
        except StepCapExceeded:
            problems.append(f"step cap in {mode} mode")
            return
        except InconsistentState as exc:
            tr = exc.trace
        runs += 1
        if len(tr.steps) > tr.step_bound():
            problems.append(f"{len(tr.steps)} steps > bound {tr.step_bound()}")

    tgg, cat = docgen
    nested = parse_model(data("nested.trim"), tgg.type_graph)
    modes = ("repair", "legacy", "strict")
    for edit in ("makeroot.edit", "newroot.edit"):
        for mode in modes:
            run(tgg, cat, nested, data(edit), mode)
    for n in (1, 2, 3):
        for scen in ("scen1", "scen2", "scen3", "scen4"):
            for mode in modes:
                spec = ScenarioSpec(scen, n, mode)
                sync, ops, _ = prepare(spec)
                g, c = docgen if spec.grammar == "docgen" else evalg
                run(g, c, sync.result(), ops, mode)
    etgg, ecat = evalg
    for rid in REFACTORINGS:
        source, ops = refactoring_fixture(rid, 2)
        model = Synchronizer.translate(etgg, source).result()
        for mode in modes:
            run(etgg, ecat, model, ops, mode)
    for g, c in (docgen, evalg):
        for seed in range(30):
            rng = rng_for(500 + seed)
            host = random_derivation(g, rng, 10)
            ops, _ = random_edit(g, host.source, rng, rng.randint(1, 3))
            for mode in modes:
                run(g, c, host, ops, mode)
    # wall-time trend on Scenario 1
    slopes = {}
    for mode in ("repair", "legacy"):
        points = []
        for n in (1, 2, 3):
            row = run_scenario(ScenarioSpec("scen1", n, mode), repeats=7)
            size = len(prepare(ScenarioSpec("scen1", n, mode))[0].host.ids())
            points.append((size, row.wall_time_ms))
        slopes[mode] = _log_slope(points)
    if not slopes["repair"] <= 0.5:
        problems.append(f"repair slope {slopes['repair']:.2f} not sub-linear")
    if not slopes["legacy"] >= 0.9:
        problems.append(f"legacy slope {slopes['legacy']:.2f} below linear")
    report("termination",
        not problems,
        f"{runs} runs within the step bound, no strict-mode cap; log-log time slope repair "
        f"{slopes['repair']:.2f}, legacy {slopes['legacy']:.2f}" + (f"; {problems[:3]}" if problems else ""),
    )
