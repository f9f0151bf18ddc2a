"""
GF(2) linear algebra helpers

Dense 0/1 numpy arrays (uint8) throughout; scipy sparse matrices are accepted
wherever a matrix is read and are densified first.
"""

import logging
from typing import List, Tuple

import numpy as np
import scipy.sparse as sp

from src.codes.exceptions import EnumerationBudgetError, InputValueError

logger = logging.getLogger(__name__)


def _dense(matrix) -> np.ndarray:
    if sp.issparse(matrix):
        matrix = matrix.toarray()
    return (np.atleast_2d(np.asarray(matrix)) % 2).astype(np.uint8)


def row_reduce(matrix) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form over GF(2)

    Returns:
        (nonzero rows of the reduced matrix, pivot column of each row)
    """
    work = _dense(matrix).copy()
    rows, cols = work.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        candidates = np.nonzero(work[r:, c])[0]
        if candidates.size == 0:
            continue
        p = r + int(candidates[0])
        if p != r:
            work[[r, p]] = work[[p, r]]
        mask = work[:, c].astype(bool)
        mask[r] = False
        work[mask] ^= work[r]
        pivots.append(c)
        r += 1
    return work[:r], pivots


def rank(matrix) -> int:
    """Rank over GF(2)"""
    return len(row_reduce(matrix)[1])


def nullspace(matrix) -> np.ndarray:
    """Basis of {x : M x = 0} over GF(2), one basis vector per row"""
    dense = _dense(matrix)
    cols = dense.shape[1]
    reduced, pivots = row_reduce(dense)
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for i, pc in enumerate(pivots):
            basis[k, pc] = reduced[i, f]
    return basis


def span(basis: np.ndarray) -> np.ndarray:
    """All 2^k combinations of the rows of basis, in lexicographic order"""
    basis = _dense(basis)
    k = basis.shape[0]
    coefficients = ((np.arange(2 ** k)[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)
    words = (coefficients.astype(np.int64) @ basis) % 2
    words = words.astype(np.uint8)
    # lexicographic on the word itself, first position most significant
    order = np.lexsort(words.T[::-1])
    return words[order]


def minimum_distance(parity_check, max_dim: int = 24, chunk_log2: int = 16) -> int:
    """Exhaustive minimum distance of the code with parity-check matrix H

    Returns 0 for the zero code.
    """
    basis = nullspace(parity_check)
    k = basis.shape[0]
    if k == 0:
        return 0
    if k > max_dim:
        raise EnumerationBudgetError(f"Code dimension {k} exceeds exhaustive budget {max_dim}")

    best = basis.shape[1] + 1
    basis64 = basis.astype(np.int64)
    shifts = np.arange(k)
    chunk = 2 ** min(k, chunk_log2)
    for start in range(1, 2 ** k, chunk):
        ids = np.arange(start, min(start + chunk, 2 ** k))
        coefficients = (ids[:, None] >> shifts) & 1
        weights = ((coefficients @ basis64) % 2).sum(axis=1)
        best = min(best, int(weights.min()))
    logger.debug(f"Exhaustive d_min over 2^{k} words: {best}")
    return best


class SystematicEncoder:
    """Encoder derived from a parity-check matrix by Gaussian elimination"""

    def __init__(self, parity_check):
        self.logger = logging.getLogger(__name__)
        basis = nullspace(parity_check)
        self.generator, self.information_positions = row_reduce(basis)
        self.n = basis.shape[1]
        self.k = self.generator.shape[0]
        self.logger.info(f"Systematic encoder ready: n={self.n}, k={self.k}")

    def encode(self, message) -> np.ndarray:
        """Codeword whose information positions carry message"""
        message = np.asarray(message, dtype=np.int64)
        if message.shape[-1] != self.k:
            raise InputValueError(f"Message length {message.shape[-1]} != k={self.k}")
        return ((message @ self.generator.astype(np.int64)) % 2).astype(np.uint8)


def write_alist(matrix, path: str) -> None:
    """Write a binary matrix in MacKay's alist format (1-indexed, zero padded)"""
    csc = sp.csc_matrix(_dense(matrix))
    csr = csc.tocsr()
    rows, cols = csr.shape
    col_lists = [sorted(csc.indices[csc.indptr[j]:csc.indptr[j + 1]].tolist()) for j in range(cols)]
    row_lists = [sorted(csr.indices[csr.indptr[i]:csr.indptr[i + 1]].tolist()) for i in range(rows)]
    max_col = max((len(c) for c in col_lists), default=0)
    max_row = max((len(r) for r in row_lists), default=0)

    def padded(entries, width):
        values = [e + 1 for e in entries] + [0] * (width - len(entries))
        return ' '.join(str(v) for v in values)

    with open(path, 'w') as f:
        f.write(f"{cols} {rows}\n")
        f.write(f"{max_col} {max_row}\n")
        f.write(' '.join(str(len(c)) for c in col_lists) + '\n')
        f.write(' '.join(str(len(r)) for r in row_lists) + '\n')
        for c in col_lists:
            f.write(padded(c, max_col) + '\n')
        for r in row_lists:
            f.write(padded(r, max_row) + '\n')


def read_alist(path: str) -> sp.csr_matrix:
    """Read an alist file written by write_alist (or any full alist file)"""
    with open(path, 'r') as f:
        lines = [list(map(int, line.split())) for line in f if line.strip()]
    cols, rows = lines[0]
    entries_r, entries_c = [], []
    for j, nonzeros in enumerate(lines[4:4 + cols]):
        for i in nonzeros:
            if i != 0:
                entries_r.append(i - 1)
                entries_c.append(j)
    data = np.ones(len(entries_r), dtype=np.uint8)
    return sp.csr_matrix((data, (entries_r, entries_c)), shape=(rows, cols), dtype=np.uint8)
