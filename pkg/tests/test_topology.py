import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anneal_rbm.errors import InvalidParameterError
from anneal_rbm.topology import (apply_defects, build_chimera, build_custom,
                                 build_pegasus, graph_from_dict, graph_stats,
                                 graph_to_dict, pegasus_coords, pegasus_index,
                                 read_graph, write_graph)


def test_pegasus_node_counts():
    assert len(build_pegasus(2).nodes) == 48
    assert len(build_pegasus(16).nodes) == 5760


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=2, max_value=8))
def test_pegasus_node_count_formula(m):
    assert len(build_pegasus(m).nodes) == 24 * m * (m - 1)


def test_pegasus_rejects_small_m():
    with pytest.raises(InvalidParameterError):
        build_pegasus(1)


def test_pegasus_max_degree_is_15():
    stats = graph_stats(build_pegasus(16))
    assert stats.max_degree == 15


def test_pegasus_m16_with_133_dead_qubits_has_5627_active():
    g = build_pegasus(16)
    mask = sorted(g.nodes)[::43][:133]
    assert len(mask) == 133
    masked = apply_defects(g, mask)
    assert len(masked.active_nodes) == 5627


def test_pegasus_coordinate_round_trip():
    m = 4
    for node in (0, 7, 100, 287):
        u, w, k, z = pegasus_coords(m, node)
        assert pegasus_index(m, u, w, k, z) == node


def test_chimera_single_cell():
    g = build_chimera(1, 1, 4)
    s = graph_stats(g)
    assert (s.num_nodes, s.num_edges) == (8, 16)
    assert s.average_degree == 4.0


def test_chimera_two_cells_vertical():
    s = graph_stats(build_chimera(2, 1, 4))
    assert (s.num_nodes, s.num_edges) == (16, 36)


def test_chimera_k11():
    g = build_chimera(1, 1, 1)
    assert (len(g.nodes), len(g.edges)) == (2, 1)


def test_chimera_rejects_bad_params():
    with pytest.raises(InvalidParameterError):
        build_chimera(0, 1, 4)


def test_apply_defects_empty_mask_is_identity():
    g = build_pegasus(2)
    assert apply_defects(g) == g


def test_apply_defects_node_removes_incident_edges():
    g = build_pegasus(2)
    node = max(g.active_nodes, key=g.degree)
    d = g.degree(node)
    masked = apply_defects(g, [node])
    assert len(masked.active_edges) == len(g.active_edges) - d
    assert node not in masked.active_nodes


def test_apply_defects_idempotent():
    g = build_pegasus(2)
    once = apply_defects(g, [3, 5], [tuple(sorted(next(iter(g.edges))))])
    twice = apply_defects(once, [3, 5], [tuple(sorted(next(iter(g.edges))))])
    assert once == twice


def test_apply_defects_unknown_id_rejected():
    g = build_chimera(1, 1, 4)
    with pytest.raises(InvalidParameterError):
        apply_defects(g, [999])
    with pytest.raises(InvalidParameterError):
        apply_defects(g, [], [(0, 999)])


def test_defective_coupler_breaks_tiling_unit():
    from anneal_rbm.embedding import tile_qac
    star = build_custom(range(4), [(0, 1), (0, 2), (0, 3)])
    assert len(tile_qac(star).units) == 1
    broken = apply_defects(star, [], [(0, 2)])
    assert len(tile_qac(broken).units) == 0


def test_graph_stats_empty():
    s = graph_stats(build_custom([], []))
    assert (s.num_nodes, s.num_edges, s.average_degree) == (0, 0, 0.0)
    assert s.degree_histogram == {}


def test_edges_only_connect_active_nodes():
    g = apply_defects(build_pegasus(2), [10, 20])
    for a, b in g.active_edges:
        assert a in g.active_nodes and b in g.active_nodes


def test_serialization_round_trip_bit_exact(tmp_path):
    base = build_pegasus(2)
    g = apply_defects(base, [1, 2], [min(base.edges)])
    path = tmp_path / "g.json"
    write_graph(g, str(path))
    g2 = read_graph(str(path))
    assert g2 == g
    path2 = tmp_path / "g2.json"
    write_graph(g2, str(path2))
    assert path.read_bytes() == path2.read_bytes()


def test_graph_dict_schema():
    g = build_chimera(1, 1, 2)
    d = graph_to_dict(g)
    assert set(d) == {"family", "params", "nodes", "edges", "defects"}
    assert d["defects"] == {"nodes": [], "edges": []}
    assert graph_from_dict(json.loads(json.dumps(d))) == g
