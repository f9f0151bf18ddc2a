import math

import numpy as np
import pytest

from src.codes import gf2
from src.codes.basecode import (
    BLOCK_DEGREE_ONE,
    BLOCK_GENERATORS,
    ComponentCode,
    make_block_tldpc_base,
    make_ldpc_base_from_degrees,
)
from src.codes.exceptions import StructuralError
from src.codes.graphgen import CodeInstance, build_random_ldpc, extract_parity_matrix
from src.codes.wt2graph import (
    average_degree,
    build_graph2,
    check_necessary_condition,
    cycle_to_codeword,
    dmin_upper_bound,
    find_clusters,
    girth,
    is_forest,
    min_weight_cycle,
    moore_bound,
    pair_table,
)
from tests.instances import seeds, small_block, small_ldpc
from tests.oracles import min_distance_by_weight


def triangle_ldpc():
    """Three degree-3 checks joined in a triangle by degree-2 nodes 0, 1, 2"""
    base = make_ldpc_base_from_degrees([3, 3, 3])
    return CodeInstance(n=4, base=base, position_node=np.array([0, 2, 3, 0, 1, 3, 1, 2, 3]))


def parallel_ldpc():
    """Two checks joined twice, by degree-2 nodes 0 and 1"""
    base = make_ldpc_base_from_degrees([3, 3])
    return CodeInstance(n=4, base=base, position_node=np.array([0, 1, 2, 0, 1, 3]))


def triangle_blocks():
    """Three TLDPC blocks in a triangle; every visit costs one degree-1 node"""
    base = make_block_tldpc_base(3)
    position_node = np.array([0, 2, 3, 9, 10, 4,
                              0, 1, 5, 9, 10, 6,
                              1, 2, 7, 9, 10, 8])
    return CodeInstance(n=11, base=base, position_node=position_node)


def test_block_pair_table():
    table = pair_table(ComponentCode(BLOCK_GENERATORS), BLOCK_DEGREE_ONE)
    weights = {pair: weight for pair, (weight, _) in table.items()}
    assert weights == {(0, 1): 1, (0, 3): 1, (0, 4): 2, (1, 3): 2, (1, 4): 1, (3, 4): 1}
    assert table[(0, 1)][1] == (2,)
    assert table[(0, 4)][1] == (2, 5)


def test_parity_pair_table_has_zero_weights():
    table = pair_table(ComponentCode.parity_check(4), ())
    assert len(table) == 6
    assert {w for w, _ in table.values()} == {0}


def test_partial_weight_one_is_rejected():
    with pytest.raises(StructuralError):
        pair_table(ComponentCode(['110']), (1,))


def test_generic_clusters_match_closed_forms():
    instance = small_block(0)
    auto = find_clusters(instance)
    generic = find_clusters(instance, method='generic')
    assert [c.tolist() for c in auto] == [sorted(c.tolist()) for c in generic]
    ldpc = small_ldpc(0)
    assert [c.tolist() for c in find_clusters(ldpc)] == \
        [sorted(c.tolist()) for c in find_clusters(ldpc, method='generic')]


def test_triangle_of_checks():
    instance = triangle_ldpc()
    G = build_graph2(instance)
    assert (G.num_clusters, len(G.edges)) == (3, 3)
    assert girth(G) == 3
    cycle = min_weight_cycle(G)
    assert cycle.weight == 3
    assert np.nonzero(cycle_to_codeword(G, cycle))[0].tolist() == [0, 1, 2]

    report = check_necessary_condition(instance, G)
    assert report.passed
    assert report.distance_bound.regime == 'critical'
    assert report.distance_bound.value == 3
    assert gf2.minimum_distance(extract_parity_matrix(instance)) == 3


def test_parallel_edges_form_a_two_cycle():
    instance = parallel_ldpc()
    G = build_graph2(instance)
    assert girth(G) == 2
    assert not is_forest(G)
    cycle = min_weight_cycle(G)
    assert cycle.weight == 2
    assert np.nonzero(cycle_to_codeword(G, cycle))[0].tolist() == [0, 1]
    assert gf2.minimum_distance(extract_parity_matrix(instance)) == 2


def test_to_networkx_keeps_parallel_edges():
    graph = build_graph2(parallel_ldpc()).to_networkx()
    assert graph.number_of_nodes() == 2
    assert graph.number_of_edges(0, 1) == 2
    assert sorted(d['node'] for _, _, d in graph.edges(data=True)) == [0, 1]
    assert graph.nodes[0]['size'] == 3


def test_triangle_of_blocks_counts_node_weights():
    instance = triangle_blocks()
    G = build_graph2(instance)
    assert G.node_weight_bound == 2
    cycle = min_weight_cycle(G)
    assert (cycle.girth, cycle.weight) == (3, 6)
    word = cycle_to_codeword(G, cycle)
    assert np.nonzero(word)[0].tolist() == [0, 1, 2, 3, 5, 7]

    report = check_necessary_condition(instance, G)
    assert report.passed
    assert report.distance_bound.regime == 'critical'
    assert report.distance_bound.value == 9


def test_self_join_is_structural_error():
    base = make_block_tldpc_base(1)
    instance = CodeInstance(n=5, base=base, position_node=np.array([2, 2, 0, 3, 4, 1]))
    with pytest.raises(StructuralError):
        build_graph2(instance)


def test_moore_bound():
    assert moore_bound(3, 14, 0) == pytest.approx(7.0)
    assert moore_bound(3, 14, 1) == pytest.approx(14.0)


def test_structured_instance_passes(structured_625):
    report = check_necessary_condition(structured_625)
    assert report.passed
    assert report.verdict == 'PASS'
    assert report.average_degree == pytest.approx(1.6)
    assert report.is_forest
    assert report.girth is None
    assert report.distance_bound.regime == 'unbounded'
    assert report.cluster_test['passed']
    assert report.cluster_test['tilde_lambda_2'] == pytest.approx(0.4)
    data = report.to_dict()
    assert data['verdict'] == 'PASS'
    assert data['distance_bound']['value'] is None


@pytest.mark.parametrize('seed', range(100))
def test_random_block_cycles_give_codewords(seed):
    instance = small_block(seed)
    G = build_graph2(instance)
    assert len(G.edges) > G.num_clusters
    assert average_degree(G) > 2
    cycle = min_weight_cycle(G)
    word = cycle_to_codeword(G, cycle)
    H = extract_parity_matrix(instance).toarray()
    assert not ((H.astype(int) @ word.astype(int)) % 2).any()
    assert min_distance_by_weight(H, cycle.weight) <= cycle.weight

    report = check_necessary_condition(instance, G)
    assert report.verdict == 'FAIL'
    bound = dmin_upper_bound(G, instance.n)
    assert bound.regime in ('moore', 'girth')
    assert math.isfinite(bound.value)


@pytest.mark.parametrize('seed', range(100))
def test_ldpc_cycles_bound_dmin(seed):
    instance = small_ldpc(seed)
    G = build_graph2(instance)
    cycle = min_weight_cycle(G)
    assert cycle.weight == cycle.girth
    cycle_to_codeword(G, cycle)
    assert gf2.minimum_distance(extract_parity_matrix(instance)) <= cycle.weight


@pytest.mark.parametrize('seed', seeds(3, 100))
def test_ldpc_closed_form_agrees(ldpc_ensemble, seed):
    instance = build_random_ldpc(ldpc_ensemble.distribution, ldpc_ensemble.rho, 1000, seed=seed)
    report = check_necessary_condition(instance)
    assert report.passed == report.ldpc_test['passed']
    assert report.ldpc_test['lambda_2_rho'] == pytest.approx(report.average_degree)
    assert report.passed
