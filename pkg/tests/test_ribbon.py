from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.errors import ContractViolation, InvalidPairingError
from artifact.propagator import PropagatorClass
from artifact.ribbon import (
    GraphInvariants,
    RibbonGraph,
    batch_component_counts,
    batch_face_counts,
    divergence_degree,
    enumerate_vacuum_graphs,
    faces,
    from_pairing,
    graph_from_perm,
    invariants,
    perm_from_graph,
    slot_label,
)
from artifact.wick import _all_perms


def test_adjacent_self_contraction():
    g = from_pairing(1, [(1, 2), (3, 4)])
    inv = invariants(g)
    assert (inv.V, inv.E, inv.F, inv.g) == (1, 2, 3, 0)


def test_label_clash_rejected():
    with pytest.raises(InvalidPairingError):
        from_pairing(1, [(1, 3), (2, 4)])


def test_slot_out_of_range():
    with pytest.raises(ContractViolation):
        from_pairing(1, [(1, 6), (3, 4)])


def test_unmatched_slot_rejected():
    with pytest.raises(ContractViolation):
        from_pairing(1, [(1, 2)])


def test_slot_labels_alternate():
    assert [slot_label(s) for s in range(1, 9)] == ["Phi", "Phi^dag"] * 4


def test_two_vertex_cross_edge_connected():
    g = from_pairing(2, [(1, 2), (3, 8), (5, 6), (7, 4)])
    assert invariants(g).connected


def test_order_one_vacuum_graphs_planar():
    graphs = list(enumerate_vacuum_graphs(1))
    assert len(graphs) == 2
    for g in graphs:
        inv = invariants(g)
        assert (inv.V, inv.E, inv.F, inv.g) == (1, 2, 3, 0)


def test_order_two_face_classes():
    conn = Counter()
    for g in enumerate_vacuum_graphs(2):
        inv = invariants(g)
        if inv.connected:
            conn[(inv.F, inv.g)] += 1
    assert set(conn) == {(4, 0), (2, 1)}
    assert sum(conn.values()) == 20


def test_external_legs():
    inv = invariants(from_pairing(1, [(1, 2)], external=[3, 4]))
    assert inv.ext == 2
    assert inv.B == 1


def test_serialisation_roundtrip():
    g = from_pairing(2, [(1, 2), (3, 8), (5, 6), (7, 4)])
    assert RibbonGraph.from_dict(g.to_dict()) == g


def _inv(ext, g, B):
    return GraphInvariants(V=1, E=1, F=1, g=g, B=B, connected=True, ext=ext)


def test_divergence_degree_examples():
    assert divergence_degree(_inv(4, 0, 1)).omega == 0
    assert divergence_degree(_inv(2, 0, 1)).omega == 2
    d = divergence_degree(_inv(4, 0, 2))
    assert d.omega == -4 and d.two_broken_four_point
    assert divergence_degree(_inv(6, 0, 3)).beyond_classified


def test_divergence_degree_other_classes():
    with pytest.raises(NotImplementedError, match="SelfDual"):
        divergence_degree(_inv(4, 0, 1), PropagatorClass.SELF_DUAL)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_euler_relation_exhaustive(n):
    for g in enumerate_vacuum_graphs(n):
        inv = invariants(g)  # raises on an Euler failure
        assert all(x >= 0 for x in inv.component_genera)
        if inv.connected:
            assert inv.V - inv.E + inv.F == 2 - 2 * inv.g


@st.composite
def ribbon_graphs(draw, max_n=5):
    n = draw(st.integers(1, max_n))
    perm = draw(st.permutations(range(2 * n)))
    return graph_from_perm(n, perm)


@settings(max_examples=200, deadline=None)
@given(ribbon_graphs())
def test_face_count_convention_independent(g):
    a = faces(g, "rotation_after_pairing")
    b = faces(g, "pairing_after_rotation")
    assert len(a) == len(b)
    assert sorted(s for c in a for s in c) == list(range(1, 4 * g.n_vertices + 1))


@settings(max_examples=100, deadline=None)
@given(ribbon_graphs())
def test_perm_roundtrip(g):
    assert graph_from_perm(g.n_vertices, perm_from_graph(g)) == g


@pytest.mark.parametrize("n", [1, 2, 3])
def test_batched_counters_match_traversal(n):
    perms = np.asarray(_all_perms(2 * n), dtype=np.int32)
    F = batch_face_counts(perms, n)
    C = batch_component_counts(perms, n)
    for k, p in enumerate(perms):
        inv = invariants(graph_from_perm(n, p.tolist()))
        assert (F[k], C[k]) == (inv.F, inv.components)
