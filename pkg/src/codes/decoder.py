"""
Iterative decoder for sparse-graph codes

Flooding schedule: every iteration sends one message along each edge toward the
base code, computes exact component-wise extrinsics, and combines them at the
variable nodes. LLRs are natural-log ratios log P(0)/P(1).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from src.codes.basecode import extrinsic_llr
from src.codes.exceptions import ContradictionError, InputValueError
from src.codes.graphgen import CodeInstance, extract_parity_matrix
from src.config.settings import DECODER


@dataclass
class DecoderConfig:
    max_iterations: int = field(default_factory=lambda: DECODER['max_iterations'])
    stop_on_valid: bool = field(default_factory=lambda: DECODER['stop_on_valid'])
    llr_clip: float = field(default_factory=lambda: DECODER['llr_clip'])
    erasure_tolerance: float = field(default_factory=lambda: DECODER['erasure_tolerance'])

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InputValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass
class DecodeOutcome:
    hard_decisions: np.ndarray
    iterations_used: int
    converged: bool
    residual_erasures: int = 0
    erased: Optional[np.ndarray] = None

    def to_dict(self) -> Dict:
        return {
            'hard_decisions': ''.join(str(int(b)) for b in self.hard_decisions),
            'iterations_used': self.iterations_used,
            'converged': self.converged,
            'residual_erasures': self.residual_erasures,
        }


def _popcount_parity(values: np.ndarray, width: int) -> np.ndarray:
    return ((values[..., None] >> np.arange(width)) & 1).sum(axis=-1) % 2


class IterativeDecoder:
    """Decoder bound to one instance; safe to share between threads"""

    def __init__(self, instance: CodeInstance, cfg: Optional[DecoderConfig] = None):
        self.logger = logging.getLogger(__name__)
        self.instance = instance
        self.cfg = cfg or DecoderConfig()
        self.base = instance.base
        self.position_node = instance.position_node
        self.n = instance.n
        self.parity = extract_parity_matrix(instance).astype(np.int64)

    def _node_sum(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.position_node, weights=values, minlength=self.n)

    def is_valid(self, word: np.ndarray) -> bool:
        return not ((self.parity @ word.astype(np.int64)) % 2).any()

    def decode(self, channel_llrs) -> DecodeOutcome:
        """Belief propagation from channel LLRs (erasures as 0)

        Args:
            channel_llrs: length-n natural-log LLRs, positive favours 0

        Returns:
            DecodeOutcome; erased marks nodes whose posterior stays inside erasure_tolerance
        """
        llrs = np.asarray(channel_llrs, dtype=float)
        if llrs.shape != (self.n,):
            raise InputValueError(f"Expected {self.n} channel LLRs, got shape {llrs.shape}")
        if np.isnan(llrs).any():
            raise InputValueError("NaN in channel LLRs")

        clip = self.cfg.llr_clip
        channel = np.clip(llrs, -clip, clip)
        extrinsic = np.zeros(self.base.m)
        hard = np.zeros(self.n, dtype=np.uint8)
        erased = np.ones(self.n, dtype=bool)
        converged = False

        for iteration in range(1, self.cfg.max_iterations + 1):
            # variable to base: node total minus the message coming back on the same edge
            totals = channel + self._node_sum(extrinsic)
            to_base = np.clip(totals[self.position_node] - extrinsic, -clip, clip)
            extrinsic = np.clip(extrinsic_llr(self.base, to_base, clip), -clip, clip)

            posterior = channel + self._node_sum(extrinsic)
            erased = np.abs(posterior) < self.cfg.erasure_tolerance
            hard = ((posterior < 0) & ~erased).astype(np.uint8)
            converged = not erased.any() and self.is_valid(hard)
            if converged and self.cfg.stop_on_valid:
                return DecodeOutcome(hard, iteration, True, 0, erased)

        return DecodeOutcome(hard, self.cfg.max_iterations, converged, int(erased.sum()), erased)

    def _base_erasure_step(self, known: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Positions whose value the base code determines from the other known positions"""
        out_known = np.zeros(self.base.m, dtype=bool)
        out_values = np.zeros(self.base.m, dtype=np.uint8)
        for group in self.base.groups:
            k = known[group.positions]
            v = values[group.positions] & k
            length = group.code.length
            if group.code.single_parity:
                unknown_others = (~k).sum(axis=1)[:, None] - (~k)
                out_known[group.positions] = unknown_others == 0
                out_values[group.positions] = (v.sum(axis=1)[:, None] - v) % 2
                continue
            weights = np.left_shift(1, np.arange(length, dtype=np.int64))
            erased_mask = (~k).astype(np.int64) @ weights
            value_mask = v.astype(np.int64) @ weights
            rows = erased_mask[:, None] | weights[None, :]
            recovery = group.code.recovery_table[rows, np.arange(length)[None, :]]
            determined = recovery >= 0
            support = np.where(determined, recovery & ~weights[None, :], 0)
            out_known[group.positions] = determined
            out_values[group.positions] = _popcount_parity(support & value_mask[:, None], length)
        return out_known, out_values

    def decode_erasures(self, erasure_pattern, values=None) -> DecodeOutcome:
        """Exact BEC decoding by symbolic propagation on the flooding schedule

        Args:
            erasure_pattern: length-n mask, True where the channel erased the bit
            values: transmitted bits; only the unerased entries are read

        Returns:
            DecodeOutcome whose erased mask is the residual (stopping) set

        Raises:
            ContradictionError: the known values match no codeword
        """
        erased = np.asarray(erasure_pattern, dtype=bool)
        if erased.shape != (self.n,):
            raise InputValueError(f"Expected an erasure pattern of length {self.n}")
        values = np.zeros(self.n, dtype=np.uint8) if values is None else np.asarray(values, dtype=np.uint8) % 2
        channel_known = ~erased
        pn = self.position_node

        ext_known = np.zeros(self.base.m, dtype=bool)
        ext_values = np.zeros(self.base.m, dtype=np.uint8)
        resolved = channel_known.copy()
        node_values = np.where(channel_known, values, 0).astype(np.uint8)

        for iteration in range(1, self.cfg.max_iterations + 1):
            # an edge is known if the channel or another edge of its node knows the bit
            support = self._node_sum(ext_known.astype(float)).astype(np.int64)
            to_base_known = channel_known[pn] | (support[pn] - ext_known > 0)
            new_known, new_values = self._base_erasure_step(to_base_known, node_values[pn])

            ones = self._node_sum((new_known & (new_values == 1)).astype(float)) > 0
            zeros = self._node_sum((new_known & (new_values == 0)).astype(float)) > 0
            if (ones & zeros).any() or (channel_known & ((values == 1) & zeros | (values == 0) & ones)).any():
                self.logger.error("Known values contradict the base code")
                raise ContradictionError("Known values are inconsistent with every codeword")

            # no new base position resolved
            stalled = np.array_equal(new_known, ext_known)
            ext_known, ext_values = new_known, new_values
            resolved = channel_known | ones | zeros
            node_values = np.where(channel_known, values, ones).astype(np.uint8)

            if resolved.all() and self.cfg.stop_on_valid:
                return DecodeOutcome(node_values, iteration, self.is_valid(node_values), 0, ~resolved)
            if stalled:
                break

        hard = np.where(resolved, node_values, 0).astype(np.uint8)
        residual = int((~resolved).sum())
        converged = residual == 0 and self.is_valid(hard)
        return DecodeOutcome(hard, self.cfg.max_iterations, converged, residual, ~resolved)


def decode(instance: CodeInstance, channel_llrs, cfg: Optional[DecoderConfig] = None) -> DecodeOutcome:
    return IterativeDecoder(instance, cfg).decode(channel_llrs)


def decode_erasures(instance: CodeInstance, erasure_pattern, values=None,
                    cfg: Optional[DecoderConfig] = None) -> DecodeOutcome:
    return IterativeDecoder(instance, cfg).decode_erasures(erasure_pattern, values)
