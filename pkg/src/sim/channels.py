"""
Channel models and capacities

Binary erasure channel and binary-input AWGN channel with BPSK mapping 0 -> +1.
LLRs follow the decoder convention log P(0)/P(1).
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.optimize import bisect

from src.codes.exceptions import InputValueError
from src.config.settings import CAPACITY, DECODER

logger = logging.getLogger(__name__)

BEC = 'bec'
AWGN = 'awgn'


def noise_sigma(ebn0_db: float, rate: float) -> float:
    """Noise standard deviation for unit-energy BPSK: sigma^2 = 1 / (2 R Eb/N0)"""
    if not 0 < rate <= 1:
        raise InputValueError(f"Code rate must lie in (0, 1], got {rate}")
    return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0)))


@dataclass(frozen=True)
class ChannelPoint:
    kind: str
    parameter: float
    rate: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (BEC, AWGN):
            raise InputValueError(f"Unknown channel kind: {self.kind}")
        if math.isnan(self.parameter):
            raise InputValueError("Channel parameter is NaN")
        if self.kind == BEC and not 0.0 <= self.parameter <= 1.0:
            raise InputValueError(f"Erasure probability {self.parameter} outside [0, 1]")
        if self.kind == AWGN and self.rate is None:
            raise InputValueError("An AWGN point needs the code rate to map Eb/N0 to sigma")

    @property
    def sigma(self) -> float:
        if self.kind != AWGN:
            raise InputValueError("sigma is only defined for AWGN points")
        return noise_sigma(self.parameter, self.rate)

    @property
    def ebn0_db(self) -> Optional[float]:
        return self.parameter if self.kind == AWGN else None

    @property
    def erasure_probability(self) -> Optional[float]:
        return self.parameter if self.kind == BEC else None

    def capacity(self) -> float:
        if self.kind == BEC:
            return bec_capacity(self.parameter)
        return biawgn_capacity(self.parameter, self.rate)

    def transmit(self, codeword: np.ndarray, rng: np.random.Generator,
                 clip: Optional[float] = None) -> np.ndarray:
        """Channel LLRs for one transmitted codeword"""
        clip = DECODER['llr_clip'] if clip is None else clip
        signs = 1.0 - 2.0 * np.asarray(codeword, dtype=float)
        if self.kind == BEC:
            erased = self.erasures(codeword.shape[0], rng)
            return np.where(erased, 0.0, clip * signs)
        sigma = self.sigma
        received = signs + sigma * rng.standard_normal(signs.shape[0])
        return 2.0 * received / sigma ** 2

    def erasures(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random(n) < self.parameter

    def __str__(self):
        if self.kind == BEC:
            return f"BEC(p={self.parameter:g})"
        return f"BiAWGN(Eb/N0={self.parameter:g} dB, R={self.rate:g})"


def bec_capacity(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise InputValueError(f"Erasure probability {p} outside [0, 1]")
    return 1.0 - p


def biawgn_capacity(ebn0_db: float, rate: float, nodes: Optional[int] = None) -> float:
    """Capacity in bits per use of the BPSK-input AWGN channel

    With L = 2y/sigma^2 given x = +1, C = 1 - E[log2(1 + exp(-L))], the expectation
    taken by Gauss-Hermite quadrature.

    Args:
        ebn0_db: Eb/N0 in dB
        rate: Code rate used to map Eb/N0 to the noise level
        nodes: Quadrature nodes (default CAPACITY['hermite_nodes'])
    """
    sigma = noise_sigma(ebn0_db, rate)
    t, w = hermgauss(nodes or CAPACITY['hermite_nodes'])
    received = 1.0 + math.sqrt(2.0) * sigma * t
    llr = 2.0 * received / sigma ** 2
    penalty = np.logaddexp(0.0, -llr) / math.log(2.0)
    return float(1.0 - (w @ penalty) / math.sqrt(math.pi))


def shannon_limit_ebn0(rate: float, tolerance_db: Optional[float] = None) -> float:
    """Eb/N0 (dB) at which the BiAWGN capacity equals the code rate"""
    if not 0 < rate < 1:
        raise InputValueError(f"Shannon limit needs a rate in (0, 1), got {rate}")
    low, high = CAPACITY['search_range_db']
    tolerance = tolerance_db or CAPACITY['tolerance_db']
    limit = bisect(lambda e: biawgn_capacity(e, rate) - rate, low, high, xtol=tolerance)
    logger.debug(f"Shannon limit for R={rate}: {limit:.4f} dB")
    return float(limit)


def parse_sweep(text: str) -> List[float]:
    """Values from 'start:step:stop' (inclusive) or a comma-separated list"""
    text = text.strip()
    if ':' in text:
        try:
            start, step, stop = (float(v) for v in text.split(':'))
        except ValueError:
            raise InputValueError(f"Sweep must read start:step:stop, got {text!r}")
        if step == 0 or (stop - start) / step < 0:
            raise InputValueError(f"Empty or unbounded sweep {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise InputValueError(f"Could not parse channel values {text!r}")


def make_points(kind: str, values: List[float], rate: Optional[float] = None) -> List[ChannelPoint]:
    return [ChannelPoint(kind, v, rate if kind == AWGN else None) for v in values]
