"""
Monte Carlo word/bit error rate harness

Frames are grouped in fixed-size batches. Every frame draws from its own Philox
stream keyed by (seed, point index, frame index), and batches are folded in
order, so a result depends only on the seed and the configuration, never on
the number of worker threads.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from src.codes.decoder import DecoderConfig, IterativeDecoder
from src.codes.exceptions import InputValueError
from src.codes.gf2 import SystematicEncoder
from src.codes.graphgen import CodeInstance, extract_parity_matrix
from src.config.settings import SIMULATION
from src.sim.channels import BEC, ChannelPoint

RESULT_HEADERS = ['ebn0_db', 'p', 'frames', 'frame_errors', 'bit_errors',
                  'wer', 'ber', 'avg_iters', 'ci_wer', 'ci_ber']

Z_95 = 1.959963984540054


@dataclass
class StopRule:
    min_frame_errors: int = field(default_factory=lambda: SIMULATION['min_frame_errors'])
    max_frames: int = field(default_factory=lambda: SIMULATION['max_frames'])

    def __post_init__(self):
        if self.min_frame_errors < 1 or self.max_frames < 1:
            raise InputValueError("Stop rule needs positive frame-error and frame limits")

    def satisfied(self, frames: int, frame_errors: int) -> bool:
        return frame_errors >= self.min_frame_errors or frames >= self.max_frames


@dataclass
class PointResult:
    point: ChannelPoint
    n: int
    frames: int = 0
    frame_errors: int = 0
    bit_errors: int = 0
    iterations: int = 0

    @property
    def wer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.n) if self.frames else 0.0

    @property
    def avg_iters(self) -> float:
        return self.iterations / self.frames if self.frames else 0.0

    @property
    def ci_wer(self) -> float:
        """95% normal-approximation half-width of the WER"""
        if not self.frames:
            return 0.0
        return Z_95 * math.sqrt(self.wer * (1.0 - self.wer) / self.frames)

    @property
    def ci_ber(self) -> float:
        if not self.frames:
            return 0.0
        return Z_95 * math.sqrt(self.ber * (1.0 - self.ber) / (self.frames * self.n))

    def add(self, frame_error: bool, bit_errors: int, iterations: int):
        self.frames += 1
        self.frame_errors += int(frame_error)
        self.bit_errors += bit_errors
        self.iterations += iterations

    def to_row(self) -> Dict:
        return {
            'ebn0_db': '' if self.point.ebn0_db is None else self.point.ebn0_db,
            'p': '' if self.point.erasure_probability is None else self.point.erasure_probability,
            'frames': self.frames,
            'frame_errors': self.frame_errors,
            'bit_errors': self.bit_errors,
            'wer': self.wer,
            'ber': self.ber,
            'avg_iters': self.avg_iters,
            'ci_wer': self.ci_wer,
            'ci_ber': self.ci_ber,
        }


@dataclass
class SimResult:
    points: List[PointResult]
    seed: int
    wall_time: float
    transmit: str = 'zero'

    def to_rows(self) -> List[Dict]:
        return [p.to_row() for p in self.points]

    def to_dict(self) -> Dict:
        return {
            'seed': self.seed,
            'wall_time': self.wall_time,
            'transmit': self.transmit,
            'points': [dict(p.to_row(), channel=str(p.point)) for p in self.points],
        }


class MonteCarloSimulator:
    """Error-rate estimation for one code instance"""

    def __init__(self, instance: CodeInstance, cfg: Optional[DecoderConfig] = None,
                 seed: int = 0, transmit: str = 'zero', threads: Optional[int] = None,
                 batch_frames: Optional[int] = None):
        self.logger = logging.getLogger(__name__)
        if seed < 0:
            raise InputValueError(f"Seed must be non-negative, got {seed}")
        if transmit not in ('zero', 'random'):
            raise InputValueError(f"Unknown transmit mode: {transmit}")
        self.instance = instance
        self.decoder = IterativeDecoder(instance, cfg)
        self.seed = seed
        self.transmit = transmit
        self.threads = max(1, threads or SIMULATION['threads'])
        self.batch_frames = batch_frames or SIMULATION['batch_frames']
        self.encoder = None
        if transmit == 'random':
            if instance.n > SIMULATION['max_encoder_length']:
                raise InputValueError(
                    f"Random codewords need n <= {SIMULATION['max_encoder_length']}, got {instance.n}")
            self.encoder = SystematicEncoder(extract_parity_matrix(instance))

    def _frame_rng(self, point_index: int, frame_index: int) -> np.random.Generator:
        sequence = np.random.SeedSequence([self.seed, point_index, frame_index])
        return np.random.Generator(np.random.Philox(sequence))

    def run_frame(self, point: ChannelPoint, point_index: int, frame_index: int):
        """Transmit, decode and score one frame

        Returns:
            (frame error, bit errors, iterations used)
        """
        rng = self._frame_rng(point_index, frame_index)
        n = self.instance.n
        if self.encoder is not None:
            codeword = self.encoder.encode(rng.integers(0, 2, self.encoder.k))
        else:
            codeword = np.zeros(n, dtype=np.uint8)

        if point.kind == BEC:
            outcome = self.decoder.decode_erasures(point.erasures(n, rng), codeword)
        else:
            outcome = self.decoder.decode(point.transmit(codeword, rng))

        wrong = outcome.hard_decisions != codeword
        if outcome.erased is not None:
            wrong |= outcome.erased
        bit_errors = int(wrong.sum())
        frame_error = bit_errors > 0 or not outcome.converged
        return frame_error, bit_errors, outcome.iterations_used

    def _run_batch(self, point: ChannelPoint, point_index: int, first: int, count: int):
        return [self.run_frame(point, point_index, first + i) for i in range(count)]

    def run_point(self, point: ChannelPoint, point_index: int, stop: StopRule,
                  pool: Optional[ThreadPoolExecutor] = None) -> PointResult:
        result = PointResult(point, self.instance.n)
        next_frame = 0
        while not stop.satisfied(result.frames, result.frame_errors):
            wave = []
            for _ in range(self.threads):
                if next_frame >= stop.max_frames:
                    break
                count = min(self.batch_frames, stop.max_frames - next_frame)
                wave.append((next_frame, count))
                next_frame += count
            if pool is None:
                batches = [self._run_batch(point, point_index, first, count) for first, count in wave]
            else:
                futures = [pool.submit(self._run_batch, point, point_index, first, count)
                           for first, count in wave]
                batches = [f.result() for f in futures]

            for batch in batches:
                if stop.satisfied(result.frames, result.frame_errors):
                    break
                for frame_error, bit_errors, iterations in batch:
                    result.add(frame_error, bit_errors, iterations)
            self.logger.debug(f"{point}: {result.frames} frames, {result.frame_errors} frame errors")

        self.logger.info(f"{point}: WER={result.wer:.3e} BER={result.ber:.3e} "
                         f"avg_iters={result.avg_iters:.1f} over {result.frames} frames")
        return result

    def run(self, points: List[ChannelPoint], stop: Optional[StopRule] = None) -> SimResult:
        stop = stop or StopRule()
        start = time.time()
        self.logger.info(f"Simulating {len(points)} point(s) on n={self.instance.n}, seed={self.seed}, "
                         f"threads={self.threads}")
        if self.threads == 1:
            results = [self.run_point(p, i, stop) for i, p in enumerate(points)]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = [self.run_point(p, i, stop, pool) for i, p in enumerate(points)]
        return SimResult(results, self.seed, time.time() - start, self.transmit)


def simulate(instance: CodeInstance, points: List[ChannelPoint], stop: Optional[StopRule] = None,
             cfg: Optional[DecoderConfig] = None, seed: int = 0, **kwargs) -> SimResult:
    return MonteCarloSimulator(instance, cfg, seed, **kwargs).run(points, stop)
