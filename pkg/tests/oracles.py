"""
Brute-force reference implementations used by the tests

Written from the definitions only, without the tables and closed forms of the
package under test.
"""

import itertools
import math
from typing import List

import numpy as np


def all_codewords(generators) -> np.ndarray:
    """Every XOR combination of the generator rows"""
    rows = [np.array([int(b) for b in g], dtype=np.uint8) if isinstance(g, str) else np.asarray(g, dtype=np.uint8)
            for g in generators]
    words = set()
    for coefficients in itertools.product((0, 1), repeat=len(rows)):
        word = np.zeros(rows[0].size, dtype=np.uint8)
        for c, row in zip(coefficients, rows):
            if c:
                word ^= row
        words.add(tuple(int(b) for b in word))
    return np.array(sorted(words), dtype=np.uint8)


def map_extrinsic(words: np.ndarray, llrs: np.ndarray) -> np.ndarray:
    """log P(c_i = 0 | others) / P(c_i = 1 | others) by summing over codewords"""
    length = words.shape[1]
    out = np.empty(length)
    for i in range(length):
        num = den = 0.0
        for w in words:
            metric = math.exp(-sum(float(llrs[j]) for j in range(length) if j != i and w[j]))
            if w[i]:
                den += metric
            else:
                num += metric
        out[i] = math.log(num / den)
    return out


def undetermined_probability(words: np.ndarray, erasure: np.ndarray) -> np.ndarray:
    """P(position i is not determined by the unerased other positions)"""
    length = words.shape[1]
    out = np.zeros(length)
    for pattern in itertools.product((False, True), repeat=length):
        erased = np.array(pattern)
        prob = float(np.prod(np.where(erased, erasure, 1.0 - erasure)))
        for i in range(length):
            known = ~erased
            known[i] = False
            # i is free iff some codeword vanishes on the known positions but not at i
            if any(w[i] and not w[known].any() for w in words):
                out[i] += prob
    return out


def parity_rows(instance) -> List[np.ndarray]:
    """Variable-node sets of every single parity check of an LDPC instance"""
    return [instance.position_node[positions] for _, positions in instance.base.components]


def peeling_decode(instance, erased: np.ndarray, values: np.ndarray):
    """Classic peeling: a check with one unknown node resolves it

    Returns:
        (resolved mask, values with unresolved nodes set to 0)
    """
    known = ~np.asarray(erased, dtype=bool)
    values = np.where(known, values, 0).astype(np.uint8)
    rows = parity_rows(instance)
    progress = True
    while progress:
        progress = False
        for nodes in rows:
            unknown = nodes[~known[nodes]]
            if unknown.size == 1:
                v = unknown[0]
                values[v] = int(values[nodes[known[nodes]]].sum() % 2)
                known[v] = True
                progress = True
    return known, values


def component_closure(instance, erased: np.ndarray) -> np.ndarray:
    """Residual erasures after iterating exact component-wise recovery to a fixed point"""
    known = ~np.asarray(erased, dtype=bool)
    tables = {}
    progress = True
    while progress:
        progress = False
        for code, positions in instance.base.components:
            key = id(code)
            if key not in tables:
                tables[key] = all_codewords(code.generators)
            words = tables[key]
            nodes = instance.position_node[positions]
            for i, node in enumerate(nodes):
                if known[node]:
                    continue
                mask = known[nodes]
                if not any(w[i] and not w[mask].any() for w in words):
                    known[node] = True
                    progress = True
    return ~known


def min_distance_by_weight(H: np.ndarray, max_weight: int) -> int:
    """Smallest number of columns of H summing to zero, or max_weight + 1"""
    H = np.asarray(H, dtype=np.int64) % 2
    n = H.shape[1]
    for w in range(1, max_weight + 1):
        for columns in itertools.combinations(range(n), w):
            if not (H[:, list(columns)].sum(axis=1) % 2).any():
                return w
    return max_weight + 1
