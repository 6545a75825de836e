import itertools

import pytest

from adtsched.model import AllZeroDurations, GateKind
from adtsched.oracle import enumerate_outcomes
from adtsched.preprocess import (MINIMAL, Dag, DagNode, DagNodeKind, DefenceScenario,
                                 apply_defences, defence_labelling, enumerate_defence_scenarios,
                                 enumerate_or_variants, expand_sand, normalize_time, preprocess,
                                 scenario_labels)
from adtsched.generate import random_corpus

from conftest import tree

OFF = DefenceScenario(frozenset())
ON = DefenceScenario(frozenset({"p"}))


def h_dag(treasure):
    return expand_sand(normalize_time(apply_defences(treasure, OFF), 1))


def test_treasure_scenarios(treasure):
    assert enumerate_defence_scenarios(treasure) == [ON, OFF]


def test_no_defences_single_scenario():
    adt = tree("attack a time=1\nattack b\ngate g = AND(a, b)\nroot g\n")
    assert enumerate_defence_scenarios(adt) == [OFF]


def test_or_defence_collapses_to_two_labellings():
    adt = tree("attack a time=1\ndefence d1\ndefence d2\ngate D = OR(d1, d2)\n"
               "gate g = NODEF(a, D)\nroot g\n")
    scenarios = enumerate_defence_scenarios(adt)
    assert len(scenarios) == 2
    # all four subsets map onto exactly these two labellings
    seen = {defence_labelling(adt, frozenset(s))["D"]
            for r in range(3) for s in itertools.combinations(["d1", "d2"], r)}
    assert seen == {True, False}


def test_police_active_is_infeasible(treasure):
    assert apply_defences(treasure, ON) is None


def test_police_inactive_replaces_cand_with_null(treasure):
    out = apply_defences(treasure, OFF)
    assert out["TS"].kind is GateKind.NULL
    assert out["TS"].children == ("TF",)
    assert "p" not in out.nodes


def test_nodef_failed_defence_is_childless_null():
    adt = tree("attack a time=2\ndefence d time=1\ngate g = NODEF(a, d) time=1\n"
               "attack b time=1\ngate r = AND(g, b)\nroot r\n")
    out = apply_defences(adt, DefenceScenario(frozenset()))
    assert out["g"].kind is GateKind.NULL and out["g"].children == ()
    assert "a" not in out.nodes
    on = apply_defences(adt, DefenceScenario(frozenset({"d"})))
    assert on["g"].children == ("a",)


def test_failure_propagates_to_nearest_or():
    adt = tree("attack a time=1\ndefence d\ngate c = CAND(a, d)\nattack x time=1\n"
               "gate s = AND(c, x)\nattack y time=3\ngate o = OR(s, y)\nroot o\n")
    out = apply_defences(adt, DefenceScenario(frozenset({"d"})))
    assert out["o"].children == ("y",)
    assert set(out.nodes) == {"o", "y"}


def test_normalize_leaf_chain(treasure):
    dag = normalize_time(apply_defences(treasure, OFF), 1)
    assert [dag.children[f"b_{i}"] for i in (60, 1)] == [["b_59"], ["b'"]]
    assert dag.nodes["b'"].kind is DagNodeKind.ZERO_LEAF
    assert dag.children["ST_2"] == ["ST_1"]
    assert dag.children["ST_1"] == ["ST'"]
    assert dag.nodes["ST'"].kind is DagNodeKind.AND_JOIN
    assert dag.children["ST'"] == ["b_60", "f_120"]
    assert dag.nodes["GA'"].kind is DagNodeKind.OR_JOIN
    assert dag.nodes["TS'"].kind is DagNodeKind.NULL
    assert dag.root == "TS'"


def test_normalize_respects_unit():
    adt = tree("attack a time=4\nattack b time=6\ngate g = AND(a, b)\nroot g\n")
    dag = normalize_time(adt, 2)
    assert dag.n == 5
    assert dag.children["a_2"] == ["a_1"]


def test_expand_sand_treasure(treasure):
    dag = h_dag(treasure)
    assert dag.children["TS'"] == ["TF'_2"]
    assert dag.children["TF'_2"] == ["GA'"]
    assert dag.children["TF'_1"] == ["ST_2"]
    assert dag.children["h'"] == ["TF'_1"]
    assert dag.children["e'"] == ["TF'_1"]
    assert "TF'" not in dag.nodes
    assert dag.nodes["TF'_1"].origin == "TF"


def test_expand_sand_single_child():
    dag = Dag("S'", {"S'": DagNode("S'", "S", DagNodeKind.NULL, GateKind.SAND),
                     "a_1": DagNode("a_1", "a", DagNodeKind.SEQ),
                     "a'": DagNode("a'", "a", DagNodeKind.ZERO_LEAF)},
              {"S'": ["a_1"], "a_1": ["a'"], "a'": []})
    out = expand_sand(dag)
    assert out.root == "S'_1"
    assert out.children["S'_1"] == ["a_1"]


def test_nested_sand_orders_all_units():
    adt = tree("attack a time=1\nattack b time=1\nattack c time=1\n"
               "gate i = SAND(a, b)\ngate o = SAND(i, c)\nroot o\n")
    (v,) = preprocess(adt)
    dag = v.dag
    # one long chain c above b above a
    assert dag.critical_path() == 3
    order = dag.topological_order()
    assert order.index("c_1") < order.index("b_1") < order.index("a_1")


def test_or_variants_minimal(treasure):
    variants = enumerate_or_variants(h_dag(treasure), MINIMAL)
    assert [(ch, g.critical_path()) for ch, g in variants] == [({"GA": "h"}, 125)]
    (_, g) = variants[0]
    assert "e_1" not in g.nodes and "e'" not in g.nodes


def test_or_variants_target_keeps_both(treasure):
    variants = enumerate_or_variants(h_dag(treasure), 132)
    assert sorted(g.critical_path() for _, g in variants) == [125, 132]


def test_or_tie_keeps_both():
    adt = tree("attack a time=2\nattack b time=2\ngate o = OR(a, b)\nroot o\n")
    assert len(preprocess(adt)) == 2


def test_target_below_minimum_keeps_shortest(treasure):
    variants = enumerate_or_variants(h_dag(treasure), 5)
    assert [ch for ch, _ in variants] == [{"GA": "h"}]


def test_preprocess_treasure(treasure):
    variants = preprocess(treasure)
    assert [v.infeasible for v in variants] == [True, False]
    assert variants[1].dag.n == 185
    assert variants[1].or_choices == {"GA": "h"}
    assert scenario_labels(treasure, variants) == ["p=on", "p=off"]


def test_preprocess_treasure_target_132(treasure):
    variants = preprocess(treasure, 132)
    assert len(variants) == 3
    assert variants[2].or_choices == {"GA": "e"}
    assert scenario_labels(treasure, variants) == ["p=on", "p=off GA=h", "p=off GA=e"]


def test_single_leaf():
    (v,) = preprocess(tree("attack a time=3\nroot a\n"))
    assert (v.dag.n, v.dag.unit) == (1, 3)


def test_all_zero_durations():
    with pytest.raises(AllZeroDurations):
        preprocess(tree("attack a\nattack b\ngate g = AND(a, b)\nroot g\n"))


def test_identical_dags_are_merged():
    # with d on, the OR only has x; with d off the slower CAND branch is pruned
    adt = tree("attack x time=1\nattack a time=5\ndefence d\ngate c = CAND(a, d)\n"
               "gate o = OR(x, c)\nroot o\n")
    (v,) = preprocess(adt)
    assert v.scenario == DefenceScenario(frozenset({"d"}))
    assert v.merged == [DefenceScenario(frozenset())]
    assert len(preprocess(adt, 5)) == 2


def test_work_is_preserved_and_origins_resolve():
    for adt in random_corpus(3, 60):
        for v in preprocess(adt):
            if v.dag is None:
                continue
            for node in v.dag.nodes.values():
                assert node.origin in adt.nodes
            v.dag.topological_order()
            kept = {node.origin for node in v.dag.nodes.values()}
            work = sum(adt[o].duration for o in kept) // v.dag.unit
            assert v.dag.n == work


def test_minimal_variant_matches_oracle_time():
    for adt in random_corpus(5, 60):
        variants = [v for v in preprocess(adt) if v.dag is not None]
        times = [o.acctime for o in enumerate_outcomes(adt) if o.succeed]
        if not variants:
            assert not times
            continue
        best = min(v.dag.critical_path() * v.dag.unit for v in variants)
        assert best == min(times)
