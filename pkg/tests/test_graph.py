from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bridge_consensus.errors import MetropolisOnDirected
from bridge_consensus.graph import (
    GraphSchedule,
    Topology,
    WeightKind,
    WeightPolicy,
    adjacency_matrix,
    is_balanced,
    laplacian,
    max_degree,
    psi,
    union_strongly_connected,
)

from graphgen import (
    FIG3_EDGES,
    closure_strongly_connected,
    exact_psi,
    fig1,
    fig3,
    random_balanced,
    random_digraph,
    random_undirected,
)

UNIFORM0 = WeightPolicy(WeightKind.UNIFORM_DEGREE, 0)
METROPOLIS = WeightPolicy(WeightKind.METROPOLIS)


def edgeless(n=3):
    return Topology(n)


# --- construction ---------------------------------------------------------

def test_topology_rejects_self_loops_and_out_of_range():
    with pytest.raises(ValueError, match="self-loop"):
        Topology(3, frozenset({(2, 2)}))
    with pytest.raises(ValueError, match="outside"):
        Topology(3, frozenset({(1, 4)}))
    with pytest.raises(ValueError, match="reversed"):
        Topology(3, frozenset({(1, 2)}), undirected=True)


def test_from_edges_closes_undirected():
    t = Topology.from_edges(3, [(1, 2)], undirected=True)
    assert t.edges == {(1, 2), (2, 1)}


def test_schedule_periodic_and_persisting():
    a, b = Topology(2, frozenset({(1, 2)})), Topology(2, frozenset({(2, 1)}))
    per = GraphSchedule(((a, 2), (b, 1)), periodic=True)
    assert [per.topology_at(t) is a for t in range(7)] == [True, True, False, True, True, False, True]
    once = GraphSchedule(((a, 2), (b, 1)), periodic=False)
    assert [once.topology_at(t) is b for t in range(6)] == [False, False, True, True, True, True]
    with pytest.raises(ValueError):
        GraphSchedule(((a, 1), (Topology(3), 1)))


# --- adjacency / laplacian / degree ---------------------------------------

def test_adjacency_fig1():
    expected = np.zeros((4, 4), dtype=int)
    for i, j in [(1, 2), (2, 1), (2, 3), (3, 2), (3, 4), (4, 3)]:
        expected[i - 1, j - 1] = 1
    assert np.array_equal(adjacency_matrix(fig1()), expected)


def test_adjacency_edgeless():
    assert np.array_equal(adjacency_matrix(edgeless()), np.zeros((3, 3)))


def test_adjacency_fig3_receiver_rows():
    A = adjacency_matrix(fig3())
    ones = {(2, 1), (4, 2), (1, 3), (3, 4), (4, 5), (5, 4), (5, 6), (6, 5), (1, 6), (6, 1)}
    for i in range(1, 7):
        for j in range(1, 7):
            assert A[i - 1, j - 1] == ((i, j) in ones)


def test_laplacian_fig1_and_edgeless():
    L = laplacian(fig1())
    assert np.array_equal(L, np.diag([1, 2, 2, 1]) - adjacency_matrix(fig1()))
    assert not laplacian(edgeless()).any()


def test_laplacian_fig3_in_degrees():
    hand_count = [sum(1 for _, i in FIG3_EDGES if i == node) for node in range(1, 7)]
    assert hand_count == [2, 1, 1, 2, 2, 2]
    assert list(np.diag(laplacian(fig3()))) == hand_count
    assert list(adjacency_matrix(fig3()).sum(axis=1)) == hand_count


@pytest.mark.parametrize("t, expected", [(fig1(), 2), (edgeless(), 0), (fig3(), 2)])
def test_max_degree(t, expected):
    assert max_degree(t) == expected


# --- balance / connectivity -----------------------------------------------

def test_is_balanced_examples():
    assert is_balanced(fig1())
    outdeg = [sum(1 for j, _ in FIG3_EDGES if j == node) for node in range(1, 7)]
    indeg = [sum(1 for _, i in FIG3_EDGES if i == node) for node in range(1, 7)]
    assert outdeg == indeg
    assert is_balanced(fig3())
    assert not is_balanced(Topology(2, frozenset({(1, 2)})))


def test_union_strongly_connected_examples():
    s = GraphSchedule.static(fig3())
    assert closure_strongly_connected(6, FIG3_EDGES)
    assert all(union_strongly_connected(s, t0, 0) for t0 in range(5))
    assert not union_strongly_connected(GraphSchedule.static(edgeless(4)), 0, 10)

    half_a = Topology.from_edges(4, [(1, 2), (3, 4)], undirected=True)
    half_b = Topology.from_edges(4, [(2, 3), (4, 1)], undirected=True)
    alt = GraphSchedule(((half_a, 1), (half_b, 1)), periodic=True)
    assert not closure_strongly_connected(4, half_a.edges)
    assert closure_strongly_connected(4, half_a.edges | half_b.edges)
    assert not union_strongly_connected(alt, 0, 0)
    assert union_strongly_connected(alt, 0, 1)
    assert union_strongly_connected(alt, 7, 1)


def test_union_strongly_connected_rejects_negative_window():
    with pytest.raises(ValueError):
        union_strongly_connected(GraphSchedule.static(fig3()), 0, -1)


def test_union_matches_closure_oracle_exhaustive_sample():
    rng = np.random.default_rng(20261016)
    agree = 0
    for _ in range(1500):
        n = int(rng.integers(1, 7))
        t = random_digraph(rng, n, p=float(rng.uniform(0.1, 0.6)))
        assert union_strongly_connected(GraphSchedule.static(t), 0, 0) == closure_strongly_connected(n, t.edges)
        agree += 1
    assert agree >= 1000


def test_union_over_switching_frames_matches_oracle():
    rng = np.random.default_rng(7)
    for _ in range(300):
        n = int(rng.integers(2, 7))
        frames = [random_digraph(rng, n, 0.2) for _ in range(int(rng.integers(1, 4)))]
        s = GraphSchedule(tuple((f, int(rng.integers(1, 3))) for f in frames), periodic=True)
        union = frozenset().union(*(f.edges for f in frames))
        assert union_strongly_connected(s, int(rng.integers(0, 10)), s.period - 1) == closure_strongly_connected(n, union)


# --- psi -------------------------------------------------------------------

def test_psi_edgeless_is_identity():
    assert np.array_equal(psi(edgeless(), UNIFORM0), np.eye(3))
    assert np.array_equal(psi(edgeless(), WeightPolicy()), np.eye(3))


def test_psi_fig1_row1_at_boundary_degree():
    P = psi(fig1(), UNIFORM0)
    exact = exact_psi(4, fig1().edges, 2)
    assert exact[0] == [Fraction(1, 2), Fraction(1, 2), 0, 0]
    assert np.array_equal(P, np.array(exact, dtype=float))


def test_psi_fig3_row2_with_margin():
    P = psi(fig3(), WeightPolicy(WeightKind.UNIFORM_DEGREE, 1))
    exact = exact_psi(6, FIG3_EDGES, 3)
    assert exact[1] == [Fraction(1, 3), Fraction(2, 3), 0, 0, 0, 0]
    assert np.allclose(P, np.array(exact, dtype=float), atol=1e-15, rtol=0)


def test_psi_metropolis_requires_undirected():
    with pytest.raises(MetropolisOnDirected):
        psi(fig3(), METROPOLIS)


def test_psi_metropolis_line_graph():
    P = psi(fig1(), METROPOLIS)
    # degrees (1, 2, 2, 1): every edge touches a degree-2 node, weight 1/3
    expected = np.array([[2 / 3, 1 / 3, 0, 0], [1 / 3, 1 / 3, 1 / 3, 0], [0, 1 / 3, 1 / 3, 1 / 3], [0, 0, 1 / 3, 2 / 3]])
    assert np.allclose(P, expected, atol=1e-16)


def test_psi_is_read_only():
    with pytest.raises(ValueError):
        psi(fig1())[0, 0] = 5.0


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 10), st.integers(0, 3))
def test_psi_row_stochastic_any_digraph(seed, n, margin):
    t = random_digraph(np.random.default_rng(seed), n, 0.4)
    P = psi(t, WeightPolicy(WeightKind.UNIFORM_DEGREE, margin))
    assert (P >= 0).all()
    assert np.max(np.abs(P.sum(axis=1) - 1)) <= 1e-15


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 10), st.integers(0, 3))
def test_balanced_uniform_psi_doubly_stochastic(seed, n, margin):
    t = random_balanced(np.random.default_rng(seed), n, strongly_connected=False)
    assert is_balanced(t)
    P = psi(t, WeightPolicy(WeightKind.UNIFORM_DEGREE, margin))
    assert np.max(np.abs(P.sum(axis=0) - 1)) <= 1e-15


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 10))
def test_metropolis_symmetric_doubly_stochastic(seed, n):
    t = random_undirected(np.random.default_rng(seed), n, 0.4, connected=False)
    P = psi(t, METROPOLIS)
    assert (P >= 0).all()
    assert np.array_equal(P, P.T)
    assert np.max(np.abs(P.sum(axis=1) - 1)) <= 1e-15
    assert np.max(np.abs(P.sum(axis=0) - 1)) <= 1e-15


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 10))
def test_laplacian_rows_sum_to_zero_and_undirected_balanced(seed, n):
    rng = np.random.default_rng(seed)
    L = laplacian(random_digraph(rng, n, 0.4))
    assert L.dtype.kind == "i"
    assert not L.sum(axis=1).any()
    assert is_balanced(random_undirected(rng, n, 0.4, connected=False))
