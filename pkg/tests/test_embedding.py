import dataclasses

import pytest

from anneal_rbm.embedding import (combine_qac_rbm, combined_from_dict,
                                  combined_to_dict, encoding_from_dict,
                                  encoding_to_dict, logical_graph,
                                  partition_from_dict, partition_replicas,
                                  partition_to_dict, tile_qac,
                                  verify_partition)
from anneal_rbm.errors import EmbeddingInfeasibleError, InvalidParameterError
from anneal_rbm.topology import (apply_defects, build_chimera, build_custom,
                                 build_pegasus, canonical_edge, graph_stats)
from conftest import two_stars_graph


@pytest.fixture(scope="module")
def g4():
    return build_pegasus(4)


def test_partition_rejects_bad_k(g4):
    with pytest.raises(InvalidParameterError):
        partition_replicas(g4, 3)


def test_partition_rejects_non_pegasus():
    with pytest.raises(InvalidParameterError):
        partition_replicas(build_chimera(2, 2, 4), 2)


def test_partition_p2_k2_isomorphism_by_explicit_edge_check():
    g = build_pegasus(2)
    part = partition_replicas(g, 2)
    assert part.k == 2
    assert part.regions[0].isdisjoint(part.regions[1])
    # pull back each region's induced active edges; the sets must coincide
    pulled = []
    for iso in part.iso_maps:
        inv = {q: v for v, q in iso.items()}
        pulled.append({canonical_edge(inv[a], inv[b])
                       for a, b in g.active_edges if a in inv and b in inv})
    assert pulled[0] == pulled[1] == set(part.logical_edges)


@pytest.mark.parametrize("k", [2, 4, 8])
def test_partition_p4_verifies(g4, k):
    part = partition_replicas(g4, k)
    report = verify_partition(part, g4)
    assert report.ok, report.failures
    assert report.induced_symmetric
    assert len(set().union(*part.regions)) == sum(len(r) for r in part.regions)


def test_partition_union_within_active_nodes(g4):
    part = partition_replicas(g4, 2)
    for region in part.regions:
        assert region <= g4.active_nodes


def test_partition_defect_excised_from_all_regions(g4):
    clean = partition_replicas(g4, 4)
    victim = sorted(clean.regions[2])[5]
    defective = apply_defects(g4, [victim])
    part = partition_replicas(defective, 4)
    report = verify_partition(part, defective)
    assert report.ok, report.failures
    assert report.induced_symmetric
    assert part.n_logical == clean.n_logical - 1
    # the victim's image is gone from every region, not just region 2
    inv = {q: v for v, q in clean.iso_maps[2].items()}
    logical_victim = inv[victim]
    for r in range(4):
        assert clean.iso_maps[r][logical_victim] not in set().union(*part.regions)


def test_partition_infeasible_when_too_small():
    with pytest.raises(EmbeddingInfeasibleError):
        partition_replicas(build_pegasus(2), 8)


def test_verifier_detects_shared_qubit(g4):
    part = partition_replicas(g4, 2)
    shared = next(iter(part.regions[0]))
    regions = (part.regions[0], part.regions[1] | {shared})
    mutated = dataclasses.replace(part, regions=regions)
    report = verify_partition(mutated, g4)
    assert not report.ok and not report.disjoint
    assert any(str(shared) in f for f in report.failures)


def test_verifier_detects_missing_edge(g4):
    part = partition_replicas(g4, 2)
    a, b = min(part.logical_edges)
    dead = canonical_edge(part.iso_maps[1][a], part.iso_maps[1][b])
    broken = apply_defects(g4, [], [dead])
    report = verify_partition(part, broken)
    assert not report.ok and not report.edges_embedded
    assert any(f"({a},{b})" in f for f in report.failures)


def test_verifier_detects_removed_region(g4):
    part = partition_replicas(g4, 4)
    mutated = dataclasses.replace(part, regions=part.regions[:3],
                                  iso_maps=part.iso_maps[:3])
    report = verify_partition(mutated, g4)
    assert not report.ok


def test_tile_qac_chimera_cell_matches_template():
    enc = tile_qac(build_chimera(1, 1, 4))
    assert enc.n_logical == 2
    # one unit's problem triple per shore, penalty hubs on wire 3 of the other
    layouts = sorted((tuple(u.problem_qubits), u.penalty_qubit) for u in enc.units)
    assert layouts == [((0, 1, 2), 7), ((4, 5, 6), 3)]
    assert list(enc.logical_edges) == [(0, 1)]
    assert len(enc.logical_edges[(0, 1)]) == 9


def test_tile_qac_star_alone():
    enc = tile_qac(build_custom(range(4), [(0, 1), (0, 2), (0, 3)]))
    assert enc.n_logical == 1
    assert enc.logical_edges == {}


def test_tile_qac_two_joined_stars():
    enc = tile_qac(two_stars_graph())
    assert enc.n_logical == 2
    assert list(enc.logical_edges) == [(0, 1)]
    assert len(enc.logical_edges[(0, 1)]) == 1


def test_tile_qac_units_disjoint_and_hubs_adjacent(g4):
    enc = tile_qac(g4)
    seen = set()
    for unit in enc.units:
        qubits = set(unit.problem_qubits) | {unit.penalty_qubit}
        assert len(qubits) == 4
        assert not (qubits & seen)
        seen |= qubits
        for q in unit.problem_qubits:
            assert g4.has_edge(unit.penalty_qubit, q)


def test_logical_graph_empty_and_cell():
    from anneal_rbm.embedding import QacEncoding
    empty = QacEncoding(units=(), logical_edges={})
    lg = logical_graph(empty)
    assert len(lg.nodes) == 0 and len(lg.edges) == 0
    cell = logical_graph(tile_qac(build_chimera(1, 1, 4)))
    assert len(cell.nodes) == 2 and len(cell.edges) == 1


def test_combined_k1_reduces_to_whole_graph_tiling(g4):
    comb = combine_qac_rbm(g4, 1)
    whole = tile_qac(g4)
    assert comb.k == 1
    assert comb.encodings[0].n_logical == whole.n_logical


def test_combined_k4_structure(g4):
    comb = combine_qac_rbm(g4, 4)
    assert comb.k == 4 and len(comb.encodings) == 4
    report = verify_partition(comb.rbm_partition, g4)
    assert report.ok, report.failures
    # every instance edge is realizable in every encoding
    inst_edges = comb.rbm_partition.logical_edges
    for enc in comb.encodings:
        assert set(enc.logical_edges) == set(inst_edges)
        for e, couplers in enc.logical_edges.items():
            assert couplers
    # representatives are problem qubits of their unit
    for r, enc in enumerate(comb.encodings):
        iso = comb.rbm_partition.iso_maps[r]
        for u in range(enc.n_logical):
            assert iso[u] in enc.units[u].problem_qubits


def test_combined_logical_graphs_isomorphic_across_regions(g4):
    comb = combine_qac_rbm(g4, 4)
    shapes = set()
    for enc in comb.encodings:
        lg = logical_graph(enc)
        s = graph_stats(lg)
        shapes.add((s.num_nodes, s.num_edges))
    assert len(shapes) == 1


def test_partition_serialization_round_trip(g4):
    part = partition_replicas(g4, 2)
    again = partition_from_dict(partition_to_dict(part))
    assert again == part


def test_encoding_serialization_round_trip():
    enc = tile_qac(build_chimera(1, 2, 4))
    again = encoding_from_dict(encoding_to_dict(enc))
    assert again == enc


def test_combined_serialization_round_trip(g4):
    comb = combine_qac_rbm(g4, 4)
    again = combined_from_dict(combined_to_dict(comb))
    assert again == comb
