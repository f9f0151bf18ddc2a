from fractions import Fraction

import numpy as np
import pytest

from src.codes.basecode import (
    BLOCK_DEGREE_ONE,
    BLOCK_GENERATORS,
    ComponentCode,
    base_from_dict,
    base_to_dict,
    base_transfer_polynomial,
    check_degree_counts,
    enumerate_codewords,
    extrinsic_erasure,
    extrinsic_llr,
    has_information_set_property,
    is_codeword,
    make_block_tldpc_base,
    make_ldpc_base,
    make_ldpc_base_from_degrees,
    make_user_base,
    parity_check_matrix,
)
from src.codes.ensemble import BaseKind
from src.codes.exceptions import ConstructionError, EnumerationBudgetError, InputValueError
from tests.oracles import all_codewords, map_extrinsic, undetermined_probability

BLOCK_CODEWORDS = {'000000', '111000', '100101', '101011', '011101', '010011', '001110', '110110'}


def _word(text):
    return np.array([int(b) for b in text], dtype=np.uint8)


def test_block_codewords():
    code = ComponentCode(BLOCK_GENERATORS)
    words = {''.join(str(b) for b in w) for w in code.codewords}
    assert words == BLOCK_CODEWORDS
    assert code.contains(_word('111000')).all()
    assert not code.contains(_word('110000')).any()


def test_block_base_layout():
    base = make_block_tldpc_base(3)
    assert base.m == 18
    assert base.rate == Fraction(1, 2)
    assert base.degree_one_fraction == Fraction(1, 3)
    assert np.nonzero(base.degree_one_mask)[0].tolist() == [2, 5, 8, 11, 14, 17]
    assert len(base.groups) == 1
    assert base.groups[0].positions.shape == (3, 6)
    assert base.groups[0].high_positions == (0, 1, 3, 4)


def test_is_codeword_per_block():
    base = make_block_tldpc_base(2)
    assert is_codeword(base, _word('111000' '010011'))
    assert not is_codeword(base, _word('111000' '110000'))
    with pytest.raises(InputValueError):
        is_codeword(base, np.zeros(6))


def test_enumerate_codewords_matches_juxtaposition():
    base = make_block_tldpc_base(2)
    words = enumerate_codewords(base)
    assert words.shape == (64, 12)
    assert all(is_codeword(base, w) for w in words)
    with pytest.raises(EnumerationBudgetError):
        enumerate_codewords(make_block_tldpc_base(9))


def test_parity_check_matrix_annihilates_codewords():
    base = make_block_tldpc_base(2)
    H = parity_check_matrix(base).toarray().astype(int)
    assert H.shape == (6, 12)
    assert not ((enumerate_codewords(base).astype(int) @ H.T) % 2).any()


def test_map_extrinsic_matches_enumeration():
    rng = np.random.default_rng(2024)
    base = make_block_tldpc_base(1)
    words = all_codewords(BLOCK_GENERATORS)
    for llrs in rng.normal(0.0, 3.0, (1000, 6)):
        assert np.allclose(extrinsic_llr(base, llrs), map_extrinsic(words, llrs), rtol=0.0, atol=1e-12)


def test_map_extrinsic_keeps_tiny_values():
    base = make_user_base(ComponentCode(['111']), (), 1)
    llrs = np.array([0.0, 1e-10, 0.0])
    out = extrinsic_llr(base, llrs)
    assert out == pytest.approx([1e-10, 0.0, 1e-10], abs=1e-15)
    assert np.allclose(out, map_extrinsic(all_codewords(['111']), llrs), rtol=0.0, atol=1e-12)


def test_tanh_rule_matches_enumeration(rng):
    base = make_ldpc_base_from_degrees([4, 3])
    llrs = rng.normal(0.5, 2.0, 7)
    out = extrinsic_llr(base, llrs)
    spc4 = all_codewords(ComponentCode.parity_check(4).generators)
    spc3 = all_codewords(ComponentCode.parity_check(3).generators)
    assert np.allclose(out[:4], map_extrinsic(spc4, llrs[:4]), atol=1e-9)
    assert np.allclose(out[4:], map_extrinsic(spc3, llrs[4:]), atol=1e-9)


def test_extrinsic_llr_sign_symmetry(rng):
    base = make_block_tldpc_base(1)
    llrs = rng.normal(1.0, 2.0, 6)
    support = _word('111000').astype(bool)
    flipped = np.where(support, -llrs, llrs)
    assert np.allclose(extrinsic_llr(base, flipped), np.where(support, -1, 1) * extrinsic_llr(base, llrs))


def test_extrinsic_llr_propagates_known_bits():
    # word 110110 with positions 0, 2 and 5 erased
    base = make_block_tldpc_base(1)
    out = extrinsic_llr(base, np.array([0.0, -np.inf, 0.0, -np.inf, -np.inf, 0.0]))
    assert out.tolist() == [-np.inf, 0.0, np.inf, 0.0, 0.0, np.inf]


def test_extrinsic_llr_without_consistent_codeword():
    base = make_block_tldpc_base(1)
    out = extrinsic_llr(base, np.array([np.inf, np.inf, 0.0, -np.inf, np.inf, np.inf]))
    assert out.tolist() == [0.0, 0.0, 0.0, np.inf, -np.inf, 0.0]


def test_parity_extrinsic_with_infinite_inputs():
    base = make_ldpc_base_from_degrees([3])
    out = extrinsic_llr(base, np.array([np.inf, -np.inf, 0.0]))
    assert out.tolist() == [0.0, 0.0, -np.inf]
    assert np.isfinite(extrinsic_llr(base, np.array([np.inf, 50.0, 1.0]))).all()


def test_extrinsic_llr_rejects_nan():
    with pytest.raises(InputValueError):
        extrinsic_llr(make_block_tldpc_base(1), np.array([0, 0, np.nan, 0, 0, 0]))


@pytest.mark.parametrize('seed', range(4))
def test_extrinsic_erasure_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    base = make_block_tldpc_base(1)
    erasure = rng.random(6)
    expected = undetermined_probability(all_codewords(BLOCK_GENERATORS), erasure)
    assert np.allclose(extrinsic_erasure(base, erasure), expected, atol=1e-12)


def test_parity_erasure_closed_form():
    base = make_ldpc_base_from_degrees([3])
    out = extrinsic_erasure(base, np.array([0.5, 0.2, 0.1]))
    assert np.allclose(out, [1 - 0.8 * 0.9, 1 - 0.5 * 0.9, 1 - 0.5 * 0.8])


def test_extrinsic_erasure_extremes():
    base = make_block_tldpc_base(2)
    assert np.allclose(extrinsic_erasure(base, np.zeros(12)), 0.0)
    assert np.allclose(extrinsic_erasure(base, np.ones(12)), 1.0)
    with pytest.raises(InputValueError):
        extrinsic_erasure(base, np.full(12, 1.5))


def test_base_transfer_endpoints():
    code = ComponentCode(BLOCK_GENERATORS)
    for p in (0.3, 0.9):
        f = base_transfer_polynomial(code, BLOCK_DEGREE_ONE, p)
        assert f(1.0) == pytest.approx(1.0)
    # with noiseless degree-1 inputs nothing stays erased at x = 0
    assert base_transfer_polynomial(code, BLOCK_DEGREE_ONE, 0.0)(0.0) == pytest.approx(0.0)


def test_information_set_property():
    assert has_information_set_property(make_block_tldpc_base(2))
    # positions 0 and 1 of the juxtaposed repetition pair are always equal
    code = ComponentCode(['1100', '0011'])
    assert not has_information_set_property(make_user_base(code, (0, 1), 2))
    assert has_information_set_property(make_user_base(code, (0, 2), 2))


def test_check_degree_counts_repairs_edges():
    assert check_degree_counts({2: 0.1, 3: 0.5, 4: 0.4}, num_edges=30) == {2: 2, 3: 6, 4: 2}
    assert check_degree_counts({3: 1}, num_edges=2000) == {2: 1, 3: 666}


def test_check_degree_counts_by_checks():
    counts = check_degree_counts({3: '1/2', 6: '1/2'}, num_checks=30)
    assert sum(counts.values()) == 30
    assert counts == {3: 20, 6: 10}


def test_check_degree_counts_needs_one_target():
    with pytest.raises(ConstructionError):
        check_degree_counts({3: 1})


def test_ldpc_base_edges():
    base = make_ldpc_base({2: '1/10', 3: '1/2', 4: '2/5'}, num_edges=300)
    assert base.m == 300
    assert base.kind == BaseKind.LDPC
    assert not base.degree_one_mask.any()
    assert sum(code.length for code, _ in base.components) == 300


def test_user_base_and_dict_roundtrip():
    code = ComponentCode(['1100', '0011'], name='rep2x2')
    base = make_user_base(code, (0, 2), 3)
    assert base.m == 12
    assert base.degree_one_fraction == Fraction(1, 2)
    restored = base_from_dict(base_to_dict(base))
    assert restored.kind == BaseKind.USER_DEFINED
    assert np.array_equal(restored.degree_one_mask, base.degree_one_mask)

    block = base_from_dict(base_to_dict(make_block_tldpc_base(4)))
    assert block.m == 24
    ldpc = base_from_dict(base_to_dict(make_ldpc_base_from_degrees([3, 4])))
    assert ldpc.m == 7
    assert base_to_dict(ldpc)['check_degrees'] == [3, 4]


@pytest.mark.parametrize('generators', [['110', '110'], ['11', '101'], []])
def test_invalid_components(generators):
    with pytest.raises(ConstructionError):
        ComponentCode(generators)


def test_component_length_budget():
    with pytest.raises(EnumerationBudgetError):
        ComponentCode(['1' * 25])


def test_parity_check_degree_two_minimum():
    with pytest.raises(ConstructionError):
        ComponentCode.parity_check(1)
