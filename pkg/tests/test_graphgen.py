from fractions import Fraction

import numpy as np
import pytest

from src.codes import gf2
from src.codes.basecode import is_codeword, make_block_tldpc_base
from src.codes.ensemble import DegreeDistribution
from src.codes.exceptions import ConstructionError
from src.codes.graphgen import (
    CodeInstance,
    build_random_ldpc,
    build_structured,
    expected_cluster_fractions,
    extract_parity_matrix,
    identity_instance,
    load_instance,
    plan_arrangement,
    realized_rate,
    round_exact_edges,
    save_instance,
    save_parity_alist,
)
from tests.instances import small_block, small_ldpc


def test_expected_cluster_fractions():
    a = expected_cluster_fractions(Fraction(2, 5), 4)
    assert [f * 625 for f in a] == [81, 216, 216, 96, 16]
    assert sum(a) == 1


def test_plan_arrangement_625():
    plan = plan_arrangement(625, expected_cluster_fractions(Fraction(2, 5), 4))
    assert (plan.stars, plan.twigs, plan.chains, plan.isolated) == (16, 16, 12, 81)
    assert plan.chain_lengths == [18] * 12
    assert plan.total_edges == 500
    assert plan.consumption['stars'] == {'degree1': 128, 'degree3': 64, 'degree4': 16}


def test_plan_arrangement_needs_integer_counts():
    with pytest.raises(ConstructionError):
        plan_arrangement(100, expected_cluster_fractions(Fraction(2, 5), 4))


def test_plan_arrangement_negative_entry():
    with pytest.raises(ConstructionError):
        plan_arrangement(4, [0, Fraction(1, 2), 0, Fraction(1, 4), Fraction(1, 4)])


def test_structured_instance_shape(structured_625):
    instance = structured_625
    assert instance.m == 3750
    assert instance.n == 2083
    assert instance.nominal_rate == pytest.approx(1 - 1875 / 2083)
    assert instance.degree_histogram() == {1: 1250, 2: 500, 3: 220, 5: 45, 9: 65, 10: 3}
    assert instance.degree_one_consistent()


def test_structured_instance_clusters(structured_625):
    instance = structured_625
    clusters = instance.cluster_index[~instance.base.degree_one_mask]
    assert np.bincount(clusters).tolist() == [4] * 625
    # every variable node touches a component at most once
    pairs = instance.position_node * 625 + instance.base.component_of
    assert np.unique(pairs).size == pairs.size


@pytest.mark.parametrize('seed', range(5))
def test_structured_is_deterministic(tldpc_ensemble, seed):
    first = build_structured(tldpc_ensemble, 625, seed=seed)
    second = build_structured(tldpc_ensemble, 625, seed=seed)
    assert np.array_equal(first.position_node, second.position_node)
    assert first.n == 2083


@pytest.mark.slow
@pytest.mark.parametrize('seed', range(100))
def test_structured_many_seeds(tldpc_ensemble, seed):
    instance = build_structured(tldpc_ensemble, 625, seed=seed)
    assert instance.degree_histogram()[2] == 500


def test_structured_needs_block_base(ldpc_ensemble):
    with pytest.raises(ConstructionError):
        build_structured(ldpc_ensemble, 625, seed=0)


def test_random_ldpc_has_no_repeated_edges(ldpc_ensemble):
    instance = build_random_ldpc(ldpc_ensemble.distribution, ldpc_ensemble.rho, 1000, seed=3)
    assert instance.n == 1000
    pairs = instance.position_node * instance.base.num_components + instance.base.component_of
    assert np.unique(pairs).size == pairs.size
    assert instance.m == sum(d * c for d, c in instance.degree_histogram().items())


def test_random_ldpc_rejects_degree_one():
    with pytest.raises(ConstructionError):
        build_random_ldpc(DegreeDistribution({1: '1/2', 3: '1/2'}), {4: 1}, 20, seed=0)


def test_small_ldpc_degrees():
    instance = small_ldpc(0)
    assert instance.degree_histogram() == {2: 12, 3: 8}
    assert instance.base.num_components == 12


def test_random_block_instance():
    instance = small_block(1)
    assert instance.n == 15
    assert instance.degree_histogram() == {1: 8, 2: 5, 3: 2}
    assert instance.degree_one_consistent()


def test_identity_instance_keeps_base():
    base = make_block_tldpc_base(2)
    instance = identity_instance(base)
    H = extract_parity_matrix(instance).toarray().astype(int)
    for word in gf2.span(gf2.nullspace(H)):
        assert is_codeword(base, word)
    assert realized_rate(instance) == pytest.approx(0.5)


def test_parity_matrix_annihilates_lifted_codewords():
    instance = small_block(2)
    H = extract_parity_matrix(instance)
    assert H.shape == (3 * 4, instance.n)
    for word in gf2.span(gf2.nullspace(H)):
        assert is_codeword(instance.base, word[instance.position_node])


def test_realized_rate_not_below_nominal():
    instance = small_ldpc(5)
    assert realized_rate(instance) >= instance.nominal_rate - 1e-12


def test_instance_validation():
    base = make_block_tldpc_base(1)
    with pytest.raises(ConstructionError):
        CodeInstance(n=6, base=base, position_node=np.arange(5))
    with pytest.raises(ConstructionError):
        CodeInstance(n=7, base=base, position_node=np.arange(6))
    with pytest.raises(ConstructionError):
        CodeInstance(n=6, base=base, position_node=np.array([0, 1, 2, 3, 4, 6]))


def test_save_and_load(tmp_path, structured_625):
    path = tmp_path / 'code.json'
    save_instance(structured_625, str(path))
    loaded = load_instance(str(path))
    assert loaded.n == structured_625.n
    assert loaded.seed == 42
    assert np.array_equal(loaded.position_node, structured_625.position_node)
    assert np.array_equal(loaded.cluster_index, structured_625.cluster_index)


def test_alist_export(tmp_path):
    instance = small_ldpc(1)
    path = tmp_path / 'code.alist'
    save_parity_alist(instance, str(path))
    restored = gf2.read_alist(str(path)).toarray()
    assert np.array_equal(restored, extract_parity_matrix(instance).toarray())


def test_round_exact_edges_floor_ceil():
    assert round_exact_edges({2: 3.0, 3: 2.5}, 15) == {2: 3, 3: 3}


def test_round_exact_edges_repair():
    assert round_exact_edges({2: 4.0, 3: 8 / 3}, 16) == {2: 5, 3: 2}


def test_round_exact_edges_impossible():
    with pytest.raises(ConstructionError):
        round_exact_edges({}, 4)
