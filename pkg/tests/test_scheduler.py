import math

import pytest

from adtsched.preprocess import DagNodeKind, preprocess
from adtsched.scheduler import (bounds, compute_depth, compute_level, min_schedule, prepare,
                                reshuffle_slot, schedule, zero_assign)

from conftest import tree

GOLDEN_DEPTH = {"TS'": 125, "TF'_2": 125, "GA'": 125, "h_3": 125, "h_2": 124, "h_1": 123,
             "h'": 122, "TF'_1": 122, "ST_2": 122, "ST_1": 121, "ST'": 120, "b_60": 60,
             "b_1": 1, "b'": 0, "f_120": 120, "f_1": 1, "f'": 0}
GOLDEN_LEVEL = {"TS'": 0, "TF'_2": 0, "GA'": 0, "h_3": 0, "h_2": 1, "h_1": 2, "h'": 3,
             "TF'_1": 3, "ST_2": 3, "ST_1": 4, "ST'": 5, "b_60": 5, "b_1": 64, "b'": 65,
             "f_120": 5, "f_1": 124, "f'": 125}


@pytest.fixture
def h_dag(treasure):
    return prepare(preprocess(treasure)[1].dag)


def chain(k):
    """k unit tasks in a row: g_1 above a_{k-1} .. a_1."""
    return tree(f"attack a time={k - 1}\nattack z\ngate g = AND(a, z) time=1\nroot g\n")


def two_chains(k):
    # the 1-minute defence only fixes the time unit; its inactive scenario is the last
    return tree(f"attack a time={k}\nattack b time={k}\ngate g = AND(a, b)\n"
                f"defence d time=1\ngate r = CAND(g, d)\nroot r\n")


def test_depth_matches_golden(h_dag):
    assert {k: h_dag.nodes[k].depth for k in GOLDEN_DEPTH} == GOLDEN_DEPTH


def test_level_matches_golden(h_dag):
    assert {k: h_dag.nodes[k].level for k in GOLDEN_LEVEL} == GOLDEN_LEVEL


def test_depth_of_trivial_graphs():
    (v,) = preprocess(tree("attack a time=1\nroot a\n"))
    dag = compute_depth(v.dag.copy())
    assert dag.nodes["a_1"].depth == 1 and dag.nodes["a'"].depth == 0
    dag = compute_level(dag)
    assert dag.nodes["a_1"].level == 0 and dag.nodes["a'"].level == 1


def test_chain_depth_and_level():
    dag = prepare(preprocess(chain(4))[0].dag)
    assert dag.nodes[dag.root].depth == 4
    assert [dag.nodes[k].level for k in ("g_1", "a_3", "a_2", "a_1")] == [0, 1, 2, 3]


def test_or_join_takes_minimum_and_marks_keep(treasure):
    v = preprocess(treasure, 132)[1]
    # rebuild the un-branched graph by hand: both branches under GA'
    from adtsched.preprocess import apply_defences, expand_sand, normalize_time
    dag = expand_sand(normalize_time(apply_defences(treasure, v.scenario), 1))
    compute_depth(dag)
    assert dag.nodes["GA'"].depth == 125
    assert dag.nodes["h_3"].keep and not dag.nodes["e_10"].keep


def test_bounds_treasure(h_dag):
    b = bounds(h_dag)
    assert (b.slots, b.low, b.up) == (125, 1, 2)
    assert h_dag.n == 185


def test_bounds_chain_and_pair():
    b = bounds(prepare(preprocess(chain(5))[0].dag))
    assert (b.slots, b.low, b.up) == (5, 0, 1)
    b = bounds(prepare(preprocess(two_chains(5))[-1].dag))
    assert (b.slots, b.low, b.up) == (5, 1, 2)


def test_schedule_two_agents_golden(h_dag):
    assignment, n_remain = schedule(h_dag, 125, 2)
    assert n_remain == 0
    a_main = assignment["h_3"][0]
    assert [assignment[f"h_{i}"] for i in (3, 2, 1)] == [(a_main, 125), (a_main, 124), (a_main, 123)]
    assert assignment["ST_2"] == (a_main, 122) and assignment["ST_1"] == (a_main, 121)
    assert all(assignment[f"f_{i}"] == (a_main, i) for i in range(1, 121))
    other = assignment["b_60"][0]
    assert other != a_main
    assert all(assignment[f"b_{i}"] == (other, 60 + i) for i in range(1, 61))


def test_schedule_one_agent_fails(h_dag):
    assignment, n_remain = schedule(h_dag, 125, 1)
    assert n_remain > 0 and assignment == {}


def test_two_unit_tasks_one_slot():
    dag = prepare(preprocess(two_chains(1))[-1].dag)
    assignment, n_remain = schedule(dag, 1, 2)
    assert n_remain == 0
    assert sorted(assignment.values()) == [(1, 1), (2, 1)]


def test_reshuffle_moves_node_to_parent_agent(h_dag):
    assignment, _ = schedule(h_dag, 125, 2)
    # swap the chains at slot 119 by hand, then let reshuffle restore them
    f, b = assignment["f_119"], assignment["b_59"]
    broken = dict(assignment)
    broken["f_119"], broken["b_59"] = (b[0], 119), (f[0], 119)
    fixed = reshuffle_slot(h_dag, broken, 119, 2)
    assert fixed["f_119"][0] == assignment["f_120"][0]
    assert fixed["b_59"][0] == assignment["b_60"][0]
    # permutation only
    assert sorted(fixed.values()) == sorted(broken.values())


def test_reshuffle_fixed_point(h_dag):
    assignment, _ = schedule(h_dag, 125, 2)
    assert reshuffle_slot(h_dag, assignment, 124, 2) == assignment


def test_zero_assign_golden(h_schedule):
    a = h_schedule.assignment
    main = a["h_3"][0]
    for nid in ("TS'", "TF'_2", "GA'"):
        assert a[nid] == (main, 125)
    assert a["h'"] == (main, 123)
    assert a["TF'_1"] == (main, 122)
    assert a["ST'"] == (main, 121)
    assert a["f'"] == (main, 1)
    assert a["b'"] == (a["b_1"][0], 61)


def test_zero_assign_and_join_takes_latest_child():
    # AND join of two chains finishing at different slots, no timed gate above
    adt = tree("attack a time=3\nattack b time=1\ngate g = AND(a, b)\nattack c time=1\n"
               "gate r = SAND(g, c)\nroot r\n")
    dag = prepare(preprocess(adt)[0].dag)
    seq = {"c_1": (1, 5), "a_3": (1, 4), "a_2": (1, 3), "a_1": (1, 2), "b_1": (2, 2)}
    a = zero_assign(dag, seq)
    assert a["g'"] == (1, 4)


def test_zero_assign_only_touches_zero_nodes(h_dag):
    seq, _ = schedule(h_dag, 125, 2)
    full = zero_assign(h_dag, seq)
    assert {k: full[k] for k in seq} == seq
    assert set(full) == set(h_dag.nodes)


def test_min_schedule_treasure(treasure_schedules):
    no_attack, s = treasure_schedules
    assert no_attack.no_attack
    assert (s.makespan, s.agents_used, s.slots) == (125, 2, 125)


def test_single_chain_one_agent():
    (s,) = min_schedule(preprocess(chain(7)))
    assert (s.makespan, s.agents_used) == (7, 1)


def test_target_slots_allow_fewer_agents():
    s = min_schedule(preprocess(two_chains(3)))[-1]
    assert (s.makespan, s.agents_used) == (3, 2)
    s = min_schedule(preprocess(two_chains(3), 6), 6)[-1]
    assert (s.makespan, s.agents_used) == (6, 1)


def test_unit_scaling():
    (s,) = min_schedule(preprocess(tree("attack a time=10\nattack b time=20\n"
                                        "gate g = SAND(a, b)\nroot g\n")))
    assert (s.unit, s.slots, s.makespan, s.agents_used) == (10, 3, 30, 1)


def test_schedule_invariants(h_schedule):
    dag = h_schedule.dag
    a = h_schedule.assignment
    seq = [k for k, v in dag.nodes.items() if v.kind is DagNodeKind.SEQ]
    assert len({a[k] for k in seq}) == len(seq)
    # every Seq ancestor runs in a later slot than its Seq descendants
    for p in seq:
        stack = list(dag.children[p])
        while stack:
            c = stack.pop()
            if dag.nodes[c].kind is DagNodeKind.SEQ:
                assert a[p][1] > a[c][1]
            else:
                stack.extend(dag.children[c])
    assert h_schedule.agents_used == max(x for x, _ in a.values())
    assert math.ceil(dag.n / h_schedule.bounds.slots) <= h_schedule.agents_used <= h_schedule.bounds.up


def test_minimal_agents_can_force_a_split_chain():
    # 9 unit tasks in 3 slots need 3 agents; chains of 3, 2, 2, 2 cannot be
    # packed whole onto 3 agents of capacity 3, so some chain must be split
    import itertools
    from collections import defaultdict
    adt = tree("gate g3 = AND(g2, a5)\ngate g2 = AND(a1, a3, a4)\nattack a1 time=3\n"
               "attack a3 time=2\nattack a4 time=2\nattack a5 time=2\nroot g3\n")
    (s,) = min_schedule(preprocess(adt))
    assert (s.slots, s.agents_used) == (3, 3)
    lengths = [3, 2, 2, 2]
    for owners in itertools.product(range(3), repeat=len(lengths)):
        load = [sum(n for n, o in zip(lengths, owners) if o == a) for a in range(3)]
        assert max(load) > s.slots
    agents_of = defaultdict(set)
    for k, v in s.dag.nodes.items():
        if v.kind is DagNodeKind.SEQ:
            agents_of[v.origin].add(s.assignment[k][0])
    assert any(len(x) > 1 for x in agents_of.values())
