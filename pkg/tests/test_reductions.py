"""Gadget builders: structural invariants, frozen counts, oracle agreement."""

import itertools

import pytest

from srdg.errors import FormatError, ResourceLimitError
from srdg.milp import solve_feasibility
from srdg.model import instance_to_dict, is_exogenous, shape, validate
from srdg.reductions import (
    CubicGraph,
    Formula223,
    UnitIntervalInstance,
    VcInstance,
    oracle_223sat,
    oracle_is,
    oracle_mis_uig,
    oracle_vc,
    parse_cnf223,
    parse_edge_list,
    parse_interval_classes,
    reduce_223sat,
    reduce_cubic_is,
    reduce_mis_uig,
    reduce_vertex_cover,
    sample_formula223,
    scaled_intervals,
)


def fs(*pairs):
    return tuple(frozenset(p) for p in pairs)


@pytest.fixture(scope="module")
def k4():
    return CubicGraph(
        ("a", "b", "c", "d"),
        fs(("a", "b"), ("a", "c"), ("a", "d"), ("b", "c"), ("b", "d"), ("c", "d")),
    )


@pytest.fixture(scope="module")
def q3():
    verts = tuple("".join(b) for b in itertools.product("01", repeat=3))
    edges = fs(*[
        (u, w)
        for u, w in itertools.combinations(verts, 2)
        if sum(a != b for a, b in zip(u, w)) == 1
    ])
    return CubicGraph(verts, edges)


@pytest.fixture(scope="module")
def triangle():
    return VcInstance(("a", "b", "c"), fs(("a", "b"), ("a", "c"), ("b", "c")))


def hop(graph, u, w):
    conn, _idx, _rev = graph.hop_connection(u, w)
    return conn.theta, conn.deadline


def endpoints(instance):
    return [(p.source, p.sink) for p in instance.paths]


def assert_verdict(instance, expect_feasible, fold_fixed=False):
    out = solve_feasibility(instance, fold_fixed=fold_fixed)
    assert (out.status == "feasible") == expect_feasible
    if out.status == "feasible":
        assert validate(instance, out.schedule).ok


# ---------------------------------------------------------------------------
# source-problem types and oracles


def test_interval_instance_rejects_duplicate_start():
    with pytest.raises(FormatError):
        UnitIntervalInstance(((2, 7), (2,)))


def test_interval_instance_rejects_overlap_within_class():
    with pytest.raises(FormatError):
        UnitIntervalInstance(((2, 3),))


def test_interval_instance_rejects_bad_start():
    with pytest.raises(FormatError):
        UnitIntervalInstance(((0,),))
    with pytest.raises(FormatError):
        UnitIntervalInstance(((1.5,),))
    with pytest.raises(FormatError):
        UnitIntervalInstance(((),))


def test_cubic_graph_rejects_wrong_degrees():
    with pytest.raises(FormatError):
        CubicGraph(("a", "b", "c"), fs(("a", "b"), ("b", "c")))


def test_vc_instance_rejects_malformed_edges():
    with pytest.raises(FormatError):
        VcInstance(("a", "b"), fs(("a", "a")))
    with pytest.raises(FormatError):
        VcInstance(("a", "b"), fs(("a", "x")))
    with pytest.raises(FormatError):
        VcInstance(("a", "b"), fs(("a", "b"), ("b", "a")))


def test_formula_rejects_bad_occurrence_counts():
    # variable 1 appears three times unnegated, once negated
    with pytest.raises(FormatError):
        Formula223(3, ((1, 2, 3), (1, 2, 3), (1, -2, -3), (-1, -2, -3)))


def test_formula_rejects_repeated_variable_in_clause():
    with pytest.raises(FormatError):
        Formula223(3, ((1, -1, 2), (1, 2, 3), (-2, 3, -3), (-1, 2, 3)))


def test_formula_occurrences_are_sorted_clause_indices():
    f = Formula223(3, ((1, 2, 3), (1, 2, 3), (-1, -2, -3), (-1, -2, -3)))
    assert f.occurrences(1, negated=False) == [1, 2]
    assert f.occurrences(1, negated=True) == [3, 4]


def test_oracle_mis_uig():
    assert oracle_mis_uig(UnitIntervalInstance(((2, 7),)))
    assert oracle_mis_uig(UnitIntervalInstance(((2, 5), (7,))))
    assert not oracle_mis_uig(UnitIntervalInstance(((2,), (3,))))


def test_oracle_is(k4, q3):
    assert oracle_is(k4, 1)
    assert not oracle_is(k4, 2)
    assert oracle_is(q3, 4)  # one side of the bipartition
    assert not oracle_is(q3, 5)


def test_oracle_vc(triangle):
    assert not oracle_vc(triangle, 1)
    assert oracle_vc(triangle, 2)
    assert oracle_vc(triangle, 3)


def test_oracle_223sat():
    assert oracle_223sat(sample_formula223(3, 0))
    assert oracle_223sat(Formula223(3, ((1, 2, 3), (1, 2, 3), (-1, -2, -3), (-1, -2, -3))))


def test_oracle_budgets():
    big = UnitIntervalInstance((tuple(range(1, 52, 2)),))
    with pytest.raises(ResourceLimitError):
        oracle_mis_uig(big)
    with pytest.raises(ResourceLimitError):
        oracle_vc(VcInstance(tuple(range(25)), ()), 25)
    with pytest.raises(ResourceLimitError):
        oracle_223sat(sample_formula223(27, 0))


# ---------------------------------------------------------------------------
# interval scaling


def test_scaled_intervals_keeps_spaced_starts_as_unit_intervals():
    assert scaled_intervals(UnitIntervalInstance(((2, 7),))) == [[(2, 3), (7, 8)]]


def test_scaled_intervals_doubles_on_close_starts():
    src = UnitIntervalInstance(((1, 3), (2,)))
    scaled = scaled_intervals(src)
    flat = {a: (lo, hi) for cls, orig in zip(scaled, src.classes)
            for (lo, hi), a in zip(cls, sorted(orig))}
    assert flat == {1: (2, 4), 2: (4, 6), 3: (6, 8)}
    # intersection relation preserved: touching intervals intersect
    for a, b in itertools.combinations(flat, 2):
        before = abs(a - b) <= 1
        (lo1, hi1), (lo2, hi2) = flat[a], flat[b]
        after = max(lo1, lo2) <= min(hi1, hi2)
        assert before == after
    starts = sorted(lo for lo, _hi in flat.values())
    assert all(b - a >= 2 for a, b in zip(starts, starts[1:]))


# ---------------------------------------------------------------------------
# interval reduction: capacity-one exogenous path


def test_mis_uig_shape_capacities_and_horizon():
    inst = reduce_mis_uig(UnitIntervalInstance(((2, 7),)))
    g = inst.graph
    assert shape(g) == "path"
    assert is_exogenous(g)
    assert g.tau == 8
    assert all(g.capacity(v) == 1 for v in g.vertices)
    assert all(c.theta == 0 for c in g.connections)
    assert len(g.vertices) == 2 * g.tau + 2 * 1 + 3


def test_mis_uig_chain_and_spine_deadlines():
    inst = reduce_mis_uig(UnitIntervalInstance(((2, 7),)))
    g = inst.graph
    for t in range(1, g.tau):
        assert hop(g, f"x{t}", f"x{t + 1}") == (0, t)
        assert hop(g, f"y{t}", f"y{t + 1}") == (0, t)
    assert hop(g, f"x{g.tau}", "v1a") == (0, g.tau)
    assert hop(g, "v1b", f"y{g.tau}") == (0, g.tau)
    for u, w in (("v1a", "vl"), ("vl", "vs"), ("vs", "vr"), ("vr", "v1b")):
        assert hop(g, u, w) == (0, g.tau)


def test_mis_uig_one_left_blocker_per_time_step():
    inst = reduce_mis_uig(UnitIntervalInstance(((2, 7),)))
    lefts = [snk for _src, snk in endpoints(inst) if snk.startswith("x")]
    assert sorted(lefts) == sorted(f"x{t}" for t in range(1, inst.graph.tau + 1))


def test_mis_uig_blocker_case_split():
    # two colors: intervals [2,3], [5,6] (color 1) and [7,8] (color 2)
    inst = reduce_mis_uig(UnitIntervalInstance(((2, 5), (7,))))
    by_sink = {snk: src for src, snk in endpoints(inst) if snk[0] in "xy"}
    # L1 = {2,5}, L2 = {2,5,7}: starts in L1 launch from x8, the start only
    # in L2 launches one color earlier, the rest from vl
    assert {t: by_sink[f"x{t}"] for t in range(1, 9)} == {
        1: "vl", 2: "x8", 3: "vl", 4: "vl", 5: "x8", 6: "vl", 7: "v1a", 8: "vl",
    }
    # R1 = {3,6,8}, R2 = {8}: Y_8 is skipped (t = tau), ends in R1 \ R2
    # launch from v2b, the rest from vr
    assert "y8" not in by_sink
    assert {t: by_sink[f"y{t}"] for t in range(1, 8)} == {
        1: "vr", 2: "vr", 3: "v2b", 4: "vr", 5: "vr", 6: "v2b", 7: "vr",
    }


def test_mis_uig_color_path_counts():
    inst = reduce_mis_uig(UnitIntervalInstance(((2, 5), (7,))))
    ends = endpoints(inst)
    assert ends.count(("v1a", "vl")) == 1  # m_1 - 1
    assert ends.count(("v1b", "vr")) == 1
    assert ends.count(("v1a", "v1b")) == 1  # validation
    assert ends.count(("v2a", "vl")) == 0  # m_2 - 1 = 0
    assert ends.count(("v2b", "vr")) == 0
    assert ends.count(("v2a", "v2b")) == 1


def test_mis_uig_verdicts_match_oracle():
    cases = [
        ((2, 7),),
        ((2,), (3,)),
        ((2, 5), (7,)),
        ((1,), (2,)),  # triggers the doubling transform
        ((1,), (3,)),
    ]
    for classes in cases:
        src = UnitIntervalInstance(classes)
        assert_verdict(reduce_mis_uig(src), oracle_mis_uig(src))


# ---------------------------------------------------------------------------
# cubic independent set reduction: capacitated star


def test_cubic_is_structure_on_k4(k4):
    inst = reduce_cubic_is(k4, 1)
    g = inst.graph
    n, m = 4, 6
    assert shape(g) == "star"
    assert g.tau == 27
    assert g.capacity("vs") == 2 * m + 3 * n + 4 * 1 == 28
    assert all(g.capacity(v) == 2 for v in g.vertices if v != "vs")
    blockers = [p for p in inst.paths if len(p.vertices) == 2]
    assert len(blockers) == 632
    assert len(inst.paths) - len(blockers) == n + 3 * m + 2 * m == 34
    assert sum(1 for v in g.vertices if v.startswith("b1_")) == 24  # C - n
    assert sum(1 for v in g.vertices if v.startswith("b7_")) == 18  # C - (4k + m)
    assert sum(1 for v in g.vertices if v.startswith("b9_")) == 28  # C - 0


def test_cubic_is_leaf_timings(k4):
    g = reduce_cubic_is(k4, 1).graph
    assert hop(g, "vs", "v_a") == (4, 19)
    assert hop(g, "vs", "vp_a") == (0, 1)
    assert hop(g, "vs", "ve_a_b") == (6, 27)
    assert hop(g, "vs", "vep_a_b") == (0, 7)
    assert hop(g, "vs", "vepp_a_b") == (0, 20)
    assert hop(g, "vs", "vedag_a_b") == (7, 8)
    for i in (1, 13, 27):
        assert hop(g, "vs", f"b{i}_1") == (i - 1, i)


def test_cubic_is_path_families(k4):
    inst = reduce_cubic_is(k4, 1)
    ends = endpoints(inst)
    assert ends.count(("vp_a", "v_a")) == 1
    assert ends.count(("ve_a_b", "vep_a_b")) == 1
    assert ends.count(("ve_a_b", "vepp_a_b")) == 1
    assert ends.count(("vedag_a_b", "ve_a_b")) == 1
    assert ends.count(("v_a", "ve_a_b")) == 1
    assert ends.count(("v_b", "ve_a_b")) == 1
    assert all(len(p.vertices) in (2, 3) for p in inst.paths)


def test_cubic_is_blocker_table_on_q3(q3):
    inst = reduce_cubic_is(q3, 3)
    n, m, k = 8, 12, 3
    assert inst.graph.capacity("vs") == 2 * m + 3 * n + 4 * k == 60
    blockers = sum(1 for p in inst.paths if len(p.vertices) == 2)
    assert blockers == 1390
    assert len(inst.paths) - blockers == 68


def test_cubic_is_rejects_out_of_range_k(k4):
    with pytest.raises(FormatError):
        reduce_cubic_is(k4, 0)
    with pytest.raises(FormatError):
        reduce_cubic_is(k4, 5)


def test_cubic_is_verdicts_on_k4(k4):
    assert_verdict(reduce_cubic_is(k4, 1), oracle_is(k4, 1), fold_fixed=True)
    assert_verdict(reduce_cubic_is(k4, 2), oracle_is(k4, 2), fold_fixed=True)


# ---------------------------------------------------------------------------
# vertex cover reduction: capacity-one star


def test_vertex_cover_structure_on_triangle(triangle):
    inst = reduce_vertex_cover(triangle, 2)
    g = inst.graph
    assert shape(g) == "star"
    assert g.tau == 7 * 3 + 2 + 3 == 26
    assert all(g.capacity(v) == 1 for v in g.vertices)
    assert len(g.vertices) - 1 == 19  # 2n + 2m + blockers
    blockers = [p for p in inst.paths if len(p.vertices) == 2]
    assert len(blockers) == 3 * 3 - 3 + 2 - 1 == 7
    assert len(inst.paths) == 3 + 3 + 2 * 3 + 7


def test_vertex_cover_leaf_timings(triangle):
    n, m, k = 3, 3, 2
    g = reduce_vertex_cover(triangle, k).graph
    assert hop(g, "vs", "v_a") == (m + 1, 7 * m + k + 3)
    assert hop(g, "vs", "vp_a") == (0, 4 * m + k)
    for i in (1, 2, 3):
        assert hop(g, "vs", f"ve_{i}") == (i, 5 * m + k + 2 + i)
        assert hop(g, "vs", f"vep_{i}") == (5 * m + k - i, 5 * m + k - i + 1)
    for j in (1, 7):
        assert hop(g, "vs", f"b_{j}") == (m + n - k + j, m + n - k + j + 1)


def test_vertex_cover_path_families(triangle):
    inst = reduce_vertex_cover(triangle, 2)
    ends = endpoints(inst)
    assert ends.count(("v_a", "vp_a")) == 1
    assert ends.count(("vep_1", "ve_1")) == 1
    # edges sorted by name: e_1 = {a,b}
    assert ends.count(("ve_1", "v_a")) == 1
    assert ends.count(("ve_1", "v_b")) == 1
    assert ends.count(("ve_1", "v_c")) == 0
    assert ends.count(("b_1", "vs")) == 1


def test_vertex_cover_domain_guard():
    edgeless = VcInstance(("a", "b"), ())
    with pytest.raises(FormatError):
        reduce_vertex_cover(edgeless, 1)  # 3m - n + k - 1 = -2
    one_edge = VcInstance(("a", "b"), fs(("a", "b")))
    with pytest.raises(FormatError):
        reduce_vertex_cover(one_edge, 2)  # m + k = 3: windows too tight
    # m=1, k=3 over four vertices: 3 - 4 + 3 - 1 = 1 blocker, in domain
    sparse = VcInstance(("a", "b", "c", "d"), fs(("a", "b")))
    inst = reduce_vertex_cover(sparse, 3)
    assert sum(1 for p in inst.paths if len(p.vertices) == 2) == 1


def test_vertex_cover_rejects_out_of_range_k(triangle):
    with pytest.raises(FormatError):
        reduce_vertex_cover(triangle, 0)
    with pytest.raises(FormatError):
        reduce_vertex_cover(triangle, 4)


def test_vertex_cover_verdicts_on_triangle(triangle):
    assert_verdict(reduce_vertex_cover(triangle, 1), oracle_vc(triangle, 1))
    assert_verdict(reduce_vertex_cover(triangle, 2), oracle_vc(triangle, 2))


# ---------------------------------------------------------------------------
# (2,2)-3SAT reduction: uncapacitated exogenous tree


def test_223sat_structure():
    f = sample_formula223(3, 0)
    inst = reduce_223sat(f)
    g = inst.graph
    assert shape(g) == "tree"
    assert is_exogenous(g)
    assert g.tau == 4
    assert all(g.capacity(v) is None for v in g.vertices)
    assert all(c.theta == 0 for c in g.connections)
    assert len(g.vertices) == 1 + 20 * 3 + 4 == 65
    assert len(inst.paths) == 18 * 3


def test_223sat_edge_deadlines():
    g = reduce_223sat(sample_formula223(3, 0)).graph
    assert hop(g, "z", "u_1") == (0, 4)
    assert hop(g, "z", "w_1") == (0, 4)
    assert hop(g, "u_1", "up_1") == (0, 3)
    assert hop(g, "up_1", "upp_1") == (0, 1)
    assert hop(g, "z", "v_1_1") == (0, 4)
    assert hop(g, "v_1_1", "t_1_1") == (0, 4)
    assert hop(g, "v_1_1", "f_1_1") == (0, 4)
    assert hop(g, "t_1_1", "tp_1_1") == (0, 2)
    assert hop(g, "tp_1_1", "tpp_1_1") == (0, 1)
    assert hop(g, "z", "c_1") == (0, 4)


def test_223sat_paths_for_known_formula():
    f = Formula223(3, ((1, 2, 3), (1, 2, 3), (-1, -2, -3), (-1, -2, -3)))
    inst = reduce_223sat(f)
    verts = [p.vertices for p in inst.paths]
    # blockers for variable 1
    assert ("u_1", "up_1", "upp_1") in verts
    assert ("w_1", "wp_1", "wpp_1") in verts
    assert verts.count(("up_1", "u_1", "z", "w_1", "wp_1")) == 2
    assert ("tp_1_1", "t_1_1", "v_1_1", "f_1_1", "fp_1_1") in verts
    # validity paths connect the occurrence gadgets to the variable gadget
    assert ("t_1_1", "v_1_1", "z", "u_1") in verts
    assert ("t_1_2", "v_1_2", "z", "w_1") in verts
    assert ("f_1_1", "v_1_1", "z", "w_1") in verts
    assert ("f_1_2", "v_1_2", "z", "u_1") in verts
    # verifiers target the occurrence clauses in index order
    assert ("t_1_1", "v_1_1", "z", "c_1") in verts
    assert ("t_1_2", "v_1_2", "z", "c_2") in verts
    assert ("f_1_1", "v_1_1", "z", "c_3") in verts
    assert ("f_1_2", "v_1_2", "z", "c_4") in verts


def test_223sat_verdict_matches_oracle():
    f = sample_formula223(3, 1)
    assert_verdict(reduce_223sat(f), oracle_223sat(f))


def test_sample_formula223():
    f = sample_formula223(3, 5)
    assert f == sample_formula223(3, 5)
    assert f.n_vars == 3 and len(f.clauses) == 4
    for seed in range(10):
        sample_formula223(3, seed)  # constructor re-validates
    with pytest.raises(FormatError):
        sample_formula223(4, 0)


# ---------------------------------------------------------------------------
# parsers and determinism


def test_parse_interval_classes():
    src = parse_interval_classes("2 7\n# comment\n\n4\n")
    assert src.classes == ((2, 7), (4,))
    with pytest.raises(FormatError):
        parse_interval_classes("2 x\n")


def test_parse_edge_list():
    verts, edges = parse_edge_list("a b\nb c  # path\nd\n")
    assert verts == ("a", "b", "c", "d")
    assert edges == fs(("a", "b"), ("b", "c"))
    with pytest.raises(FormatError):
        parse_edge_list("a b c\n")


def test_parse_cnf223():
    text = "c comment\np cnf 3 4\n1 2 3 0\n1 2 3 0\n-1 -2 -3 0\n-1 -2 -3 0\n"
    f = parse_cnf223(text)
    assert f.n_vars == 3 and len(f.clauses) == 4
    f2 = parse_cnf223("1 2 3 0\n1 2 3 0\n-1 -2 -3 0\n-1 -2 -3 0\n")
    assert f2 == f
    with pytest.raises(FormatError):
        parse_cnf223("1 2 3\n")


def test_reductions_are_deterministic(k4, triangle):
    pairs = [
        (reduce_mis_uig, UnitIntervalInstance(((2, 5), (7,)))),
        (lambda s: reduce_cubic_is(s, 2), k4),
        (lambda s: reduce_vertex_cover(s, 2), triangle),
        (reduce_223sat, sample_formula223(3, 3)),
    ]
    for build, src in pairs:
        assert instance_to_dict(build(src)) == instance_to_dict(build(src))
