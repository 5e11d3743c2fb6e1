import pytest
from hypothesis import given, settings, strategies as st

from ershov.approximation import PI, RELATION, ApproxTrace, Change, pair_code
from ershov.eqrel import (
    Partition, build_inf_triple, build_split_reductions, collapse, direct_sum, f_x, greedy_transversal,
    id_n, id_rel, orbit, plus_point, poset, q_from_set, rb_equiv, reduce_exists, split,
    split_target, transversal_to_reduction, verify_reduction,
)
from ershov.notation import fin
from oracles import brute_reduce, set_partitions


def P(n, *blocks):
    listed = set().union(*map(set, blocks)) if blocks else set()
    rest = [{x} for x in range(n) if x not in listed]
    return Partition(n, tuple(frozenset(b) for b in list(blocks) + rest))


def labels(p: Partition) -> list[int]:
    return [p.rep(x) for x in range(p.support)]


@st.composite
def partitions(draw, max_n=8):
    n = draw(st.integers(0, max_n))
    labs = draw(st.lists(st.integers(0, max(n - 1, 0)), min_size=n, max_size=n))
    return Partition.from_labels(labs)


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition(3, (frozenset({0, 1}), frozenset({1, 2})))
    with pytest.raises(ValueError):
        Partition(3, (frozenset({0, 1}),))
    with pytest.raises(ValueError):
        Partition(2, (frozenset({0, 1}), frozenset()))


def test_id_rel_and_id_n():
    assert id_rel(3).blocks == (frozenset({0}), frozenset({1}), frozenset({2}))
    assert id_rel(0).blocks == ()
    assert id_rel(5).class_of(4) == {4}
    assert id_n(2, 4) == P(4, {0, 2}, {1, 3})
    assert id_n(1, 3) == P(3, {0, 1, 2})
    assert id_n(5, 3) == id_rel(3)
    with pytest.raises(ValueError):
        id_n(0, 3)


def test_f_x_and_q():
    assert f_x({0, 2}, 4) == P(4, {0, 2}, {1, 3})
    assert f_x(set(), 3) == P(3, {0, 1, 2})
    assert f_x({0, 1}, 2) == P(2, {0, 1})
    assert q_from_set({0}, 4) == P(4, {0, 1})
    assert q_from_set(set(), 4) == id_rel(4)
    assert q_from_set({1}, 4) == P(4, {2, 3})


def test_direct_sum():
    assert direct_sum(id_n(1, 2), id_n(1, 2)) == P(4, {0, 2}, {1, 3})
    assert direct_sum(P(2, {0, 1}), id_rel(2)) == P(4, {0, 2})
    s = direct_sum(P(3, {0, 2}), P(3, {1, 2}))
    assert not any(s.related(x, y) for x in range(0, 6, 2) for y in range(1, 6, 2))


def test_collapse_and_split():
    assert collapse(id_rel(4), 0, 1) == P(4, {0, 1})
    assert collapse(P(4, {0, 1}, {2, 3}), 1, 2) == P(4, {0, 1, 2, 3})
    with pytest.raises(ValueError):
        collapse(id_rel(2), 0, 0)
    assert split(P(3, {0, 1, 2}), 0) == P(3, {1, 2})
    assert split(P(2, {0, 1}), 1) == id_rel(2)
    with pytest.raises(ValueError):
        split(id_rel(3), 1)


def test_plus_point():
    pp = plus_point(P(2, {0, 1}))
    assert pp == P(4, {0, 2})
    assert pp.class_count == P(2, {0, 1}).class_count + 2


def test_plus_point_strictly_above_for_identity():
    # Id restricted is self-full at finite scale: plus_point adds classes
    for n in range(1, 6):
        R = id_rel(n)
        assert reduce_exists(R, plus_point(R), 2 * n) is not None
        assert reduce_exists(plus_point(R), R, n) is None


def test_split_reductions_example():
    R = P(2, {0, 1})
    f, g = build_split_reductions(R, 0)
    assert f[0] == 1 and f[1] == 2
    assert all(g[x] == 0 for x in (1, 3))
    assert g[0] == 1 and g[2] == 1
    assert verify_reduction(f, split(R, 0), split_target(R))
    assert verify_reduction(g, split_target(R), split(R, 0))
    with pytest.raises(ValueError):
        build_split_reductions(id_rel(3), 0)


def test_split_reductions_support_eight():
    R = P(8, {0, 3, 5}, {1, 2}, {4, 6, 7})
    for z in (0, 1, 4, 7):
        f, g = build_split_reductions(R, z)
        assert verify_reduction(f, split(R, z), split_target(R))
        assert verify_reduction(g, split_target(R), split(R, z))


def test_rb_equiv():
    assert rb_equiv([{0, 5}, {1}], 0, 4, 1, 9)
    assert rb_equiv([{0, 5}, {1}], 0, 3, 0, 3)
    assert not rb_equiv([{0, 1}, set()], 0, 1, 1, 0)
    with pytest.raises(IndexError):
        rb_equiv([{0}], 0, 1, 1, 1)


def test_reduce_exists_examples():
    assert reduce_exists(id_n(3, 6), id_n(2, 6), 6) is None
    assert reduce_exists(id_n(2, 4), id_n(3, 6), 6) is not None
    R = P(5, {0, 3}, {1, 4})
    assert reduce_exists(R, R, 5) == {x: R.rep(x) for x in range(5)}
    with pytest.raises(ValueError):
        reduce_exists(R, R, 0)


def test_verify_reduction():
    R = P(4, {0, 1})
    assert verify_reduction({x: x for x in range(4)}, R, R)
    assert not verify_reduction({0: 0, 1: 0}, id_n(2, 2), R)
    with pytest.raises(ValueError):
        verify_reduction({0: 0}, R, R)


def test_orbit():
    assert orbit({5: 5}, 5, 10) == [5]
    assert orbit({0: 1, 1: 2, 2: 3, 3: 4}, 0, 3) == [0, 1, 2, 3]
    assert orbit({0: 1, 1: 0}, 0, 10) == [0, 1]
    with pytest.raises(ValueError):
        orbit({0: 7}, 0, 3)


def pi_trace(n, leave=(), t_of=3):
    changes = tuple(Change(pair_code(x, y), t_of + k, 0, fin(0))
                    for k, (x, y) in enumerate(leave))
    return ApproxTrace(PI, fin(1), RELATION, n, 10, changes)


def test_greedy_transversal():
    every = [(x, y) for y in range(4) for x in range(y)]
    assert greedy_transversal(pi_trace(4, every), 3) == [0, 1, 2]
    id2 = [(x, y) for y in range(4) for x in range(y) if (x - y) % 2]
    assert greedy_transversal(pi_trace(4, id2), 2) == [0, 1]
    assert greedy_transversal(pi_trace(3, [(0, 1)]), 2) == [0, 1]
    back = ApproxTrace(PI, fin(2), RELATION, 3, 10,
                       (Change(pair_code(0, 1), 2, 0, fin(1)),
                        Change(pair_code(0, 1), 4, 1, fin(0))))
    with pytest.raises(ValueError):
        greedy_transversal(back, 2)


def test_transversal_to_reduction():
    assert transversal_to_reduction([0, 1, 2], id_rel(3)) == {0: 0, 1: 1, 2: 2}
    assert transversal_to_reduction([0, 1], id_n(2, 4)) == {0: 0, 1: 1, 2: 0, 3: 1}
    assert transversal_to_reduction([7], id_n(1, 3)) == {0: 7, 1: 7, 2: 7}
    with pytest.raises(ValueError):
        transversal_to_reduction([0], id_rel(2))


@pytest.mark.parametrize("n", [4, 6])
def test_inf_triple_lower_bound(n):
    Q = P(n, {0, 1})
    for X, Y in (({0}, {1, 2}), ({0, 2}, {0, 2}), ({1}, {n - 1})):
        R, S, T = build_inf_triple(X, Y, Q, n)
        assert reduce_exists(T, R, R.support) is not None
        assert reduce_exists(T, S, S.support) is not None
    R, S, _ = build_inf_triple({0, 2}, {0, 2}, id_rel(n), n)
    assert R == S
    with pytest.raises(ValueError):
        build_inf_triple(set(), {1}, Q, n)


def test_poset_examples():
    ps = poset([id_n(1, 6), id_n(2, 6), id_n(3, 6)], 6)
    assert ps.nodes == ((0,), (1,), (2,))
    assert ps.edges == ((0, 1), (1, 2))
    dup = poset([id_n(2, 4), id_n(3, 4), id_n(2, 4)], 4)
    assert dup.nodes == ((0, 2), (1,))
    empty = poset([], 1)
    assert empty.matrix == () and empty.edges == ()
    assert "d0 -> d1" in ps.to_dot()


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(st.integers(0, n - 1), min_size=n, max_size=n), max_size=5)))
def test_poset_matrix_is_preorder(labs):
    # with one common support and range bound equal to it, composition stays in range
    cat = [Partition.from_labels(lab) for lab in labs]
    m = poset(cat, len(labs[0]) if labs else 1).matrix
    k = len(cat)
    assert all(m[i][i] for i in range(k))
    for i in range(k):
        for j in range(k):
            for l in range(k):
                if m[i][j] and m[j][l]:
                    assert m[i][l]


@settings(max_examples=200, deadline=None)
@given(partitions(max_n=5), partitions(max_n=5), st.integers(1, 6))
def test_reduce_exists_matches_brute_force(R, S, rb):
    want = brute_reduce(labels(R), labels(S), rb)
    got = reduce_exists(R, S, rb)
    assert got == want
    if got is not None:
        assert verify_reduction(got, R, S)


def test_partition_oracle_counts():
    assert [sum(1 for _ in set_partitions(n)) for n in range(7)] == [1, 1, 2, 5, 15, 52, 203]


@given(partitions())
def test_partition_json_and_pairs(p):
    assert Partition.from_json(p.to_json()) == p
    assert Partition.from_pairs(p.support, p.pairs()) == p


@settings(max_examples=300, deadline=None)
@given(partitions(max_n=6), partitions(max_n=6), st.data())
def test_verify_reduction_matches_pairwise_definition(R, S, data):
    f = {x: data.draw(st.integers(0, S.support + 2)) for x in range(R.support)}
    naive = all(R.related(x, y) == S.related(f[x], f[y])
                for x in range(R.support) for y in range(x + 1, R.support))
    assert verify_reduction(f, R, S) == naive
