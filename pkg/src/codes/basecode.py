"""
Base codes: juxtapositions of small component codes over m base positions

A base code is stored as a list of (component code, position indices) pairs
plus a mask of the positions that will carry degree-1 variable nodes.
Components that share a code object and a degree-1 pattern are grouped so the
extrinsic computations run vectorized over every copy at once.
"""

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import Polynomial
from scipy.special import logsumexp

from src.codes import gf2
from src.codes.ensemble import BaseKind, ldpc_base_rate, parse_degree_map
from src.codes.exceptions import (
    ConstructionError,
    EnumerationBudgetError,
    InputValueError,
)
from src.config.settings import BASECODE

logger = logging.getLogger(__name__)

# Rate-1/2 block of the reference low-rate base code: every third position has degree 1
BLOCK_GENERATORS = ('111000', '100101', '101011')
BLOCK_DEGREE_ONE = (2, 5)

_ALMOST_ONE = np.nextafter(1.0, 0.0)
# relative rounding of logsumexp; a MAP extrinsic inside it is exactly zero
_ROUNDING = 8 * np.finfo(float).eps


def _bits(word) -> np.ndarray:
    if isinstance(word, str):
        if set(word) - {'0', '1'}:
            raise InputValueError(f"Generator {word!r} is not a binary string")
        return np.array([int(ch) for ch in word], dtype=np.uint8)
    return np.asarray(word, dtype=np.uint8) % 2


def _masks(words: np.ndarray) -> np.ndarray:
    """Bit j of the mask is position j of the word"""
    weights = np.left_shift(1, np.arange(words.shape[1], dtype=np.int64))
    return words.astype(np.int64) @ weights


class ComponentCode:
    """Small binary linear code with lazily derived tables"""

    def __init__(self, generators, length: Optional[int] = None, name: str = '',
                 single_parity: bool = False):
        rows = [_bits(g) for g in generators]
        if not rows:
            raise ConstructionError("Component code needs at least one generator")
        self.length = int(length if length is not None else rows[0].size)
        if any(r.size != self.length for r in rows):
            raise ConstructionError(f"Generators must all have length {self.length}")
        self.generators = np.vstack(rows).astype(np.uint8)
        self.single_parity = single_parity
        self.name = name or f"({self.length},{len(rows)})"

        if not single_parity and self.length > BASECODE['max_component_length']:
            raise EnumerationBudgetError(
                f"Component length {self.length} exceeds {BASECODE['max_component_length']}")
        if gf2.rank(self.generators) != self.generators.shape[0]:
            raise ConstructionError(f"Generators of {self.name} are linearly dependent")

    @classmethod
    def parity_check(cls, degree: int) -> 'ComponentCode':
        """Even-weight code of the given length"""
        if degree < 2:
            raise ConstructionError(f"Parity checks need degree >= 2, got {degree}")
        generators = np.zeros((degree - 1, degree), dtype=np.uint8)
        generators[:, 0] = 1
        generators[np.arange(degree - 1), np.arange(1, degree)] = 1
        return cls(generators, name=f"spc{degree}", single_parity=True)

    @property
    def dimension(self) -> int:
        return self.generators.shape[0]

    @cached_property
    def parity_checks(self) -> np.ndarray:
        """Dual basis, one check per row"""
        if self.single_parity:
            return np.ones((1, self.length), dtype=np.uint8)
        return gf2.nullspace(self.generators)

    @cached_property
    def codewords(self) -> np.ndarray:
        if self.dimension > BASECODE['max_enumeration_dim']:
            raise EnumerationBudgetError(f"{self.name}: 2^{self.dimension} codewords is too many")
        return gf2.span(self.generators)

    @cached_property
    def recovery_table(self) -> np.ndarray:
        """For erased set U (bitmask) and position i in U: a dual word recovering i, or -1

        Entry [U, i] is only meaningful when bit i of U is set.
        """
        length = self.length
        if length > BASECODE['max_erasure_enumeration_length']:
            raise EnumerationBudgetError(
                f"{self.name}: erasure enumeration over 2^{length} patterns is too large")
        full = (1 << length) - 1
        duals = _masks(gf2.span(self.parity_checks))
        index = np.arange(1 << length, dtype=np.int64)
        table = np.full((1 << length, length), -1, dtype=np.int64)
        for i in range(length):
            bit = 1 << i
            column = table[:, i]
            for h in duals[(duals & bit) != 0]:
                column[(~h | bit) & full] = h
            # any subset of a recoverable erasure set stays recoverable
            for b in range(length):
                lower = index[((index >> b) & 1) == 0]
                upper = lower | (1 << b)
                column[lower] = np.where(column[lower] < 0, column[upper], column[lower])
        return table

    @cached_property
    def undetermined(self) -> np.ndarray:
        """[U, i] true when position i cannot be recovered from the positions outside U"""
        index = np.arange(1 << self.length, dtype=np.int64)
        positions = np.arange(self.length)
        rows = index[:, None] | np.left_shift(1, positions)[None, :]
        return self.recovery_table[rows, positions[None, :]] < 0

    def contains(self, words: np.ndarray) -> np.ndarray:
        words = np.atleast_2d(words).astype(np.int64)
        return ~((words @ self.parity_checks.T.astype(np.int64)) % 2).any(axis=1)

    def to_dict(self, degree_one: Sequence[int] = ()) -> Dict:
        return {
            'length': self.length,
            'generators': [''.join(str(b) for b in row) for row in self.generators],
            'degree_one': [int(i) for i in degree_one],
        }

    def __repr__(self):
        return f"ComponentCode({self.name}, n={self.length}, k={self.dimension})"


@dataclass(frozen=True)
class ComponentGroup:
    """All copies of one component code with one degree-1 pattern"""
    code: ComponentCode
    degree_one: Tuple[int, ...]
    positions: np.ndarray        # (copies, length) base positions
    component_ids: np.ndarray

    @property
    def high_positions(self) -> Tuple[int, ...]:
        return tuple(i for i in range(self.code.length) if i not in self.degree_one)


class BaseCodeSpec:
    """Base code of length m built from component codes"""

    def __init__(self, components: List[Tuple[ComponentCode, Sequence[int]]],
                 degree_one_mask: np.ndarray, kind: BaseKind, description: Optional[Dict] = None):
        self.logger = logging.getLogger(__name__)
        self.components = [(code, np.asarray(pos, dtype=np.int64)) for code, pos in components]
        self.degree_one_mask = np.asarray(degree_one_mask, dtype=bool)
        self.m = int(self.degree_one_mask.size)
        self.kind = BaseKind(kind)
        self.description = description or {}

        self.component_of = np.full(self.m, -1, dtype=np.int64)
        self.local_index = np.full(self.m, -1, dtype=np.int64)
        for c, (code, pos) in enumerate(self.components):
            if pos.size != code.length:
                raise ConstructionError(f"Component {c} has {pos.size} positions for length {code.length}")
            if (self.component_of[pos] >= 0).any():
                raise ConstructionError(f"Component {c} overlaps another component")
            self.component_of[pos] = c
            self.local_index[pos] = np.arange(code.length)
        if (self.component_of < 0).any():
            raise ConstructionError("Components do not cover every base position")

    @property
    def dimension(self) -> int:
        return sum(code.dimension for code, _ in self.components)

    @property
    def rate(self) -> Fraction:
        return Fraction(self.dimension, self.m)

    @property
    def num_components(self) -> int:
        return len(self.components)

    @property
    def degree_one_fraction(self) -> Fraction:
        return Fraction(int(self.degree_one_mask.sum()), self.m)

    @cached_property
    def groups(self) -> List[ComponentGroup]:
        buckets: Dict[Tuple[int, Tuple[int, ...]], List[int]] = {}
        codes = {}
        for c, (code, pos) in enumerate(self.components):
            pattern = tuple(int(i) for i in np.nonzero(self.degree_one_mask[pos])[0])
            key = (id(code), pattern)
            codes[key] = code
            buckets.setdefault(key, []).append(c)
        groups = []
        for key, ids in buckets.items():
            positions = np.vstack([self.components[c][1] for c in ids])
            groups.append(ComponentGroup(codes[key], key[1], positions, np.asarray(ids)))
        return groups

    def __repr__(self):
        return f"BaseCodeSpec(kind={self.kind.value}, m={self.m}, components={self.num_components})"


def make_block_tldpc_base(num_blocks: int) -> BaseCodeSpec:
    """Juxtaposition of num_blocks rate-1/2 six-bit blocks"""
    if num_blocks < 1:
        raise ConstructionError(f"num_blocks must be >= 1, got {num_blocks}")
    block = ComponentCode(BLOCK_GENERATORS, name='tldpc-block')
    components = [(block, range(6 * b, 6 * b + 6)) for b in range(num_blocks)]
    mask = np.zeros(6 * num_blocks, dtype=bool)
    for offset in BLOCK_DEGREE_ONE:
        mask[offset::6] = True
    return BaseCodeSpec(components, mask, BaseKind.BLOCK_TLDPC, {'num_blocks': num_blocks})


def make_user_base(component: ComponentCode, degree_one: Sequence[int], num_blocks: int) -> BaseCodeSpec:
    """Juxtaposition of num_blocks copies of a user-supplied component code"""
    if num_blocks < 1:
        raise ConstructionError(f"num_blocks must be >= 1, got {num_blocks}")
    length = component.length
    if any(not 0 <= i < length for i in degree_one):
        raise ConstructionError(f"Degree-1 positions {list(degree_one)} outside 0..{length - 1}")
    components = [(component, range(length * b, length * (b + 1))) for b in range(num_blocks)]
    mask = np.zeros(length * num_blocks, dtype=bool)
    for offset in degree_one:
        mask[offset::length] = True
    description = {'num_blocks': num_blocks, 'component': component.to_dict(degree_one)}
    return BaseCodeSpec(components, mask, BaseKind.USER_DEFINED, description)


def check_degree_counts(rho: Dict[int, Fraction], num_edges: Optional[int] = None,
                        num_checks: Optional[int] = None) -> Dict[int, int]:
    """Integer check counts per degree for an edge distribution rho

    Largest remainder on the check counts; with num_edges given, the edge total
    is then restored exactly by moving the highest-degree checks.
    """
    rho = parse_degree_map(rho)
    ldpc_base_rate(rho)
    degrees = sorted(rho)

    if (num_edges is None) == (num_checks is None):
        raise ConstructionError("Give exactly one of num_edges and num_checks")
    if num_edges is not None:
        ideal = {j: Fraction(num_edges) * rho[j] / j for j in degrees}
    else:
        per_check = sum((rho[j] / j for j in degrees), Fraction(0))
        ideal = {j: num_checks * (rho[j] / j) / per_check for j in degrees}

    total = int(np.floor(float(sum(ideal.values())) + 0.5))
    counts = {j: int(np.floor(float(ideal[j]))) for j in degrees}
    remainders = sorted(degrees, key=lambda j: (-(ideal[j] - counts[j]), j))
    for j in remainders[:max(0, total - sum(counts.values()))]:
        counts[j] += 1

    if num_edges is not None:
        delta = num_edges - sum(j * c for j, c in counts.items())
        while delta != 0:
            present = [j for j, c in counts.items() if c > 0]
            if not present:
                raise ConstructionError(f"Cannot realize {num_edges} check edges")
            top = max(present)
            new = max(2, top + delta)
            if new == top:
                raise ConstructionError(f"Cannot realize {num_edges} check edges with degrees >= 2")
            counts[top] -= 1
            counts[new] = counts.get(new, 0) + 1
            delta -= new - top
    counts = {j: c for j, c in sorted(counts.items()) if c > 0}
    if not counts:
        raise ConstructionError("Rounding produced no checks")
    return counts


def make_ldpc_base(check_distribution: Dict, num_checks: Optional[int] = None,
                   num_edges: Optional[int] = None) -> BaseCodeSpec:
    """Juxtaposition of single parity checks drawn from rho"""
    counts = check_degree_counts(check_distribution, num_edges=num_edges, num_checks=num_checks)
    return make_ldpc_base_from_degrees([j for j, c in counts.items() for _ in range(c)])


def make_ldpc_base_from_degrees(check_degrees: Sequence[int]) -> BaseCodeSpec:
    codes: Dict[int, ComponentCode] = {}
    components = []
    start = 0
    for degree in check_degrees:
        code = codes.setdefault(int(degree), ComponentCode.parity_check(int(degree)))
        components.append((code, range(start, start + degree)))
        start += degree
    logger.debug(f"LDPC base: {len(components)} checks over {start} positions")
    return BaseCodeSpec(components, np.zeros(start, dtype=bool), BaseKind.LDPC,
                        {'check_degrees': [int(d) for d in check_degrees]})


def component_from_dict(data: Dict) -> Tuple[ComponentCode, Tuple[int, ...]]:
    """Component code and its degree-1 positions from the component JSON format"""
    try:
        generators = data['generators']
        length = int(data.get('length', len(generators[0])))
    except (KeyError, IndexError, TypeError) as e:
        raise ConstructionError(f"Malformed component description: {e}")
    code = ComponentCode(generators, length=length, name=data.get('name', ''))
    return code, tuple(int(i) for i in data.get('degree_one', ()))


def load_component(path: str) -> Tuple[ComponentCode, Tuple[int, ...]]:
    with open(path, 'r') as f:
        data = json.load(f)
    code, degree_one = component_from_dict(data)
    logger.info(f"Loaded component {code} with degree-1 positions {list(degree_one)} from {path}")
    return code, degree_one


def base_to_dict(spec: BaseCodeSpec) -> Dict:
    return {'kind': spec.kind.value, **spec.description}


def base_from_dict(data: Dict) -> BaseCodeSpec:
    kind = BaseKind(data['kind'])
    if kind == BaseKind.BLOCK_TLDPC:
        return make_block_tldpc_base(int(data['num_blocks']))
    if kind == BaseKind.LDPC:
        return make_ldpc_base_from_degrees(data['check_degrees'])
    code, degree_one = component_from_dict(data['component'])
    return make_user_base(code, degree_one, int(data['num_blocks']))


def _check_length(spec: BaseCodeSpec, vector: np.ndarray):
    if vector.shape[-1] != spec.m:
        raise InputValueError(f"Vector length {vector.shape[-1]} != base length {spec.m}")


def is_codeword(spec: BaseCodeSpec, assignment) -> bool:
    """True iff every component's restriction is a component codeword"""
    assignment = np.asarray(assignment, dtype=np.int64) % 2
    _check_length(spec, assignment)
    for group in spec.groups:
        if not group.code.contains(assignment[group.positions]).all():
            return False
    return True


def _exclusive_products(values: np.ndarray) -> np.ndarray:
    """Row-wise product of every entry except the one in each column"""
    ones = np.ones((values.shape[0], 1))
    left = np.cumprod(np.hstack([ones, values[:, :-1]]), axis=1)
    right = np.cumprod(np.hstack([ones, values[:, :0:-1]]), axis=1)[:, ::-1]
    return left * right


def _parity_llr(llrs: np.ndarray) -> np.ndarray:
    product = _exclusive_products(np.tanh(llrs / 2.0))
    out = 2.0 * np.arctanh(np.clip(product, -_ALMOST_ONE, _ALMOST_ONE))
    # every other input known exactly
    determined = _exclusive_products(np.isinf(llrs).astype(float)) == 1.0
    out[determined] = np.sign(product[determined]) * np.inf
    return out


def _map_llr(code: ComponentCode, llrs: np.ndarray) -> np.ndarray:
    """Exact extrinsic LLRs by enumeration of the codeword table

    Infinite intrinsics pin their bit: a codeword that disagrees with a pinned
    bit at another position carries no weight, so positions fixed by the
    pinned bits come out as exact +-inf and positions with no consistent
    codeword at all come out as 0.
    """
    known = np.isinf(llrs)
    finite = np.where(known, 0.0, llrs)
    words = code.codewords.astype(float)
    scores = -finite @ words.T
    # drop each position's own intrinsic from the codeword metric
    excluded = scores[:, :, None] + words[None, :, :] * finite[:, None, :]

    hard = (llrs < 0).astype(np.uint8)
    mismatch = (known[:, None, :] & (code.codewords[None, :, :] != hard[:, None, :])).astype(np.int64)
    others = mismatch.sum(axis=2, keepdims=True) - mismatch
    excluded = np.where(others > 0, -np.inf, excluded)

    zero = (code.codewords == 0)[None, :, :]
    with np.errstate(invalid='ignore', divide='ignore'):
        num = logsumexp(np.where(zero, excluded, -np.inf), axis=1)
        den = logsumexp(np.where(~zero, excluded, -np.inf), axis=1)
        out = num - den
    out[np.isnan(out)] = 0.0
    both = np.isfinite(num) & np.isfinite(den)
    noise = both & (np.abs(out) <= _ROUNDING * (np.abs(num) + np.abs(den) + len(words)))
    out[noise] = 0.0
    return out


def extrinsic_llr(spec: BaseCodeSpec, intrinsic, clip: Optional[float] = None) -> np.ndarray:
    """Exact a-posteriori extrinsic LLRs (natural log, positive favours 0) per position

    Args:
        spec: base code
        intrinsic: length-m LLRs, finite or +-inf
        clip: saturation of finite values before exponentiation (BASECODE default)

    Returns:
        length-m extrinsic LLRs excluding each position's own intrinsic;
        +-inf where the infinite intrinsics of the other positions fix the bit
    """
    intrinsic = np.asarray(intrinsic, dtype=float)
    _check_length(spec, intrinsic)
    if np.isnan(intrinsic).any():
        raise InputValueError("NaN in intrinsic LLRs")
    clip = BASECODE['llr_saturation'] if clip is None else clip
    saturated = np.where(np.isinf(intrinsic), intrinsic, np.clip(intrinsic, -clip, clip))

    out = np.empty(spec.m)
    for group in spec.groups:
        block = saturated[group.positions]
        if group.code.single_parity:
            out[group.positions] = _parity_llr(block)
        else:
            out[group.positions] = _map_llr(group.code, block)
    return out


def _pattern_probabilities(erasure: np.ndarray) -> np.ndarray:
    """P(erased set = U) for every bitmask U, one row per component copy"""
    length = erasure.shape[1]
    index = np.arange(1 << length)
    bits = ((index[:, None] >> np.arange(length)) & 1).astype(bool)
    return np.prod(np.where(bits[None, :, :], erasure[:, None, :], 1.0 - erasure[:, None, :]), axis=2)


def extrinsic_erasure(spec: BaseCodeSpec, input_erasure) -> np.ndarray:
    """Exact extrinsic erasure probabilities under independent input erasures"""
    x = np.asarray(input_erasure, dtype=float)
    _check_length(spec, x)
    if np.isnan(x).any() or (x < 0).any() or (x > 1).any():
        raise InputValueError("Erasure probabilities must lie in [0, 1]")

    out = np.empty(spec.m)
    for group in spec.groups:
        block = x[group.positions]
        if group.code.single_parity:
            out[group.positions] = 1.0 - _exclusive_products(1.0 - block)
        else:
            probabilities = _pattern_probabilities(block)
            out[group.positions] = probabilities @ group.code.undetermined.astype(float)
    return out


def enumerate_codewords(spec: BaseCodeSpec, max_dim: Optional[int] = None) -> np.ndarray:
    """All 2^dim base codewords in lexicographic order"""
    max_dim = BASECODE['max_enumeration_dim'] if max_dim is None else max_dim
    if spec.dimension > min(max_dim, BASECODE['max_enumeration_dim']):
        raise EnumerationBudgetError(f"Base dimension {spec.dimension} exceeds budget {max_dim}")
    generator = np.zeros((spec.dimension, spec.m), dtype=np.uint8)
    row = 0
    for code, pos in spec.components:
        generator[row:row + code.dimension][:, pos] = code.generators
        row += code.dimension
    return gf2.span(generator)


def parity_check_matrix(spec: BaseCodeSpec) -> sp.csr_matrix:
    """Union of the component dual bases as rows over the m base positions"""
    rows, cols = [], []
    r = 0
    for code, pos in spec.components:
        for check in code.parity_checks:
            support = pos[np.nonzero(check)[0]]
            rows.extend([r] * support.size)
            cols.extend(support.tolist())
            r += 1
    data = np.ones(len(rows), dtype=np.uint8)
    return sp.csr_matrix((data, (rows, cols)), shape=(r, spec.m), dtype=np.uint8)


def has_information_set_property(spec: BaseCodeSpec) -> bool:
    """Degree-1 positions of every component extend to an information set"""
    for group in spec.groups:
        if not group.degree_one:
            continue
        columns = group.code.generators[:, list(group.degree_one)]
        if gf2.rank(columns) != len(group.degree_one):
            logger.info(f"{group.code.name}: degree-1 positions {group.degree_one} fail the rank test")
            return False
    return True


def base_transfer_polynomial(code: ComponentCode, degree_one: Sequence[int], p: float) -> Polynomial:
    """Mean extrinsic erasure over the degree->1 positions of one component

    Degree->1 inputs are erased with probability x (the polynomial variable),
    degree-1 inputs with probability p.
    """
    degree_one = tuple(sorted(degree_one))
    high = [i for i in range(code.length) if i not in degree_one]
    if not high:
        return Polynomial([0.0])
    if code.single_parity and not degree_one:
        return 1 - Polynomial([1.0, -1.0]) ** (code.length - 1)

    undetermined = code.undetermined[:, high].mean(axis=1)
    index = np.arange(1 << code.length)
    bits = (index[:, None] >> np.arange(code.length)) & 1
    erased_high = bits[:, high].sum(axis=1)
    erased_low = bits[:, list(degree_one)].sum(axis=1)

    coefficients: Dict[int, float] = {}
    for a, c, value in zip(erased_high, erased_low, undetermined):
        if value == 0.0:
            continue
        weight = value * p ** c * (1.0 - p) ** (len(degree_one) - c)
        coefficients[int(a)] = coefficients.get(int(a), 0.0) + weight

    x = Polynomial([0.0, 1.0])
    result = Polynomial([0.0])
    for a, weight in coefficients.items():
        result = result + weight * x ** a * (1 - x) ** (len(high) - a)
    return result


def spec_transfer_polynomial(spec: BaseCodeSpec, p: float) -> Polynomial:
    """Base EXIT function of a whole base code: transfer averaged over degree->1 positions"""
    total = 0
    result = Polynomial([0.0])
    for group in spec.groups:
        high = len(group.high_positions) * group.positions.shape[0]
        if high == 0:
            continue
        result = result + high * base_transfer_polynomial(group.code, group.degree_one, p)
        total += high
    if total == 0:
        raise ConstructionError("Base code has no positions of degree > 1")
    return result / total
