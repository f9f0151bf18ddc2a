"""
Degree-distribution algebra and rate arithmetic for sparse-graph ensembles

Distributions are edge-perspective: lambda_i is the fraction of edges incident
to variable nodes of degree i. Arithmetic is exact (fractions.Fraction); floats
appear only when a polynomial is evaluated.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, Optional, Union

import numpy as np
from numpy.polynomial import Polynomial

from src.codes.exceptions import (
    AllDegreeOneError,
    DegenerateRateError,
    InvalidDistributionError,
)
from src.config.settings import REFERENCE_ENSEMBLES

logger = logging.getLogger(__name__)

SUM_TOLERANCE = Fraction(1, 10 ** 12)

Number = Union[Fraction, int, float, str]


class BaseKind(str, Enum):
    """Base-code family of an ensemble"""
    LDPC = 'ldpc'
    BLOCK_TLDPC = 'block-tldpc'
    USER_DEFINED = 'user-defined'


def parse_fraction(value: Number) -> Fraction:
    """Exact rational from "p/q", decimal strings, ints or floats

    Floats go through their shortest decimal representation, so 0.486 becomes
    243/500 rather than the nearest binary fraction.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidDistributionError(f"Not a fraction: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise InvalidDistributionError(f"Non-finite fraction: {value!r}")
        return Fraction(repr(value))
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise InvalidDistributionError(f"Cannot parse fraction {value!r}: {e}")


def parse_degree_map(raw: Dict) -> Dict[int, Fraction]:
    parsed = {}
    for key, value in raw.items():
        try:
            degree = int(key)
        except (TypeError, ValueError):
            raise InvalidDistributionError(f"Degree key {key!r} is not an integer")
        if degree < 1:
            raise InvalidDistributionError(f"Degree {degree} is not allowed (degrees start at 1)")
        fraction = parse_fraction(value)
        if fraction != 0:
            parsed[degree] = parsed.get(degree, Fraction(0)) + fraction
    return parsed


def _polynomial(coefficients: Dict[int, Fraction]) -> Polynomial:
    """sum_i c_i x^(i-1) as a float polynomial"""
    top = max(coefficients) if coefficients else 1
    coef = np.zeros(top)
    for degree, value in coefficients.items():
        coef[degree - 1] = float(value)
    return Polynomial(coef)


@dataclass(frozen=True)
class DegreeDistribution:
    """Edge-perspective variable degree distribution"""
    lambdas: Dict[int, Fraction]

    def __post_init__(self):
        cleaned = parse_degree_map(self.lambdas)
        if any(v < 0 for v in cleaned.values()):
            raise InvalidDistributionError("Negative edge fraction in distribution")
        total = sum(cleaned.values(), Fraction(0))
        if total <= 0:
            raise InvalidDistributionError("Edge fractions sum to zero")
        if abs(total - 1) > SUM_TOLERANCE:
            raise InvalidDistributionError(f"Edge fractions sum to {float(total):.12f}, expected 1")
        object.__setattr__(self, 'lambdas', dict(sorted(cleaned.items())))

    @classmethod
    def from_mapping(cls, raw: Dict) -> 'DegreeDistribution':
        return cls(parse_degree_map(raw))

    @property
    def max_degree(self) -> int:
        return max(self.lambdas)

    @property
    def lambda_1(self) -> Fraction:
        return self.lambdas.get(1, Fraction(0))

    @property
    def lambda_2(self) -> Fraction:
        return self.lambdas.get(2, Fraction(0))

    def fraction(self, degree: int) -> Fraction:
        return self.lambdas.get(degree, Fraction(0))

    def polynomial(self) -> Polynomial:
        """Lambda(x) = sum_i lambda_i x^(i-1)"""
        return _polynomial(self.lambdas)

    def to_dict(self) -> Dict[str, str]:
        return {str(d): str(v) for d, v in self.lambdas.items()}


@dataclass(frozen=True)
class NormalizedDistribution:
    """Distribution of the edges of degree > 1 (tilde lambda)"""
    tilde_lambda: Dict[int, Fraction]

    def __post_init__(self):
        cleaned = parse_degree_map(self.tilde_lambda)
        if 1 in cleaned:
            raise InvalidDistributionError("Renormalized distribution cannot carry degree 1")
        if any(v < 0 for v in cleaned.values()):
            raise InvalidDistributionError("Negative edge fraction in distribution")
        total = sum(cleaned.values(), Fraction(0))
        if abs(total - 1) > SUM_TOLERANCE:
            raise InvalidDistributionError(f"Renormalized fractions sum to {float(total):.12f}, expected 1")
        object.__setattr__(self, 'tilde_lambda', dict(sorted(cleaned.items())))

    @property
    def tilde_lambda_bar(self) -> Fraction:
        return 1 / sum((v / d for d, v in self.tilde_lambda.items()), Fraction(0))

    @property
    def tilde_lambda_2(self) -> Fraction:
        return self.tilde_lambda.get(2, Fraction(0))

    @property
    def max_degree(self) -> int:
        return max(self.tilde_lambda)

    def polynomial(self) -> Polynomial:
        """tilde Lambda(x) = sum_{i>1} tilde lambda_i x^(i-1)"""
        return _polynomial(self.tilde_lambda)

    def denormalize(self, lambda_1: Number) -> DegreeDistribution:
        lambda_1 = parse_fraction(lambda_1)
        if not 0 <= lambda_1 < 1:
            raise InvalidDistributionError(f"lambda_1={lambda_1} outside [0, 1)")
        lambdas = {d: v * (1 - lambda_1) for d, v in self.tilde_lambda.items()}
        if lambda_1 > 0:
            lambdas[1] = lambda_1
        return DegreeDistribution(lambdas)

    def to_dict(self) -> Dict[str, str]:
        return {str(d): str(v) for d, v in self.tilde_lambda.items()}


def average_left_degree(d: DegreeDistribution) -> Fraction:
    """lambda bar = 1 / sum_i lambda_i / i, equal to m/n for any instance"""
    inverse = sum((v / i for i, v in d.lambdas.items()), Fraction(0))
    if inverse <= 0:
        raise InvalidDistributionError("Distribution has no positive mass")
    return 1 / inverse


def normalize_over_degree_one(d: DegreeDistribution) -> NormalizedDistribution:
    lambda_1 = d.lambda_1
    if lambda_1 >= 1:
        raise AllDegreeOneError("All edges have degree 1; nothing to renormalize")
    return NormalizedDistribution({i: v / (1 - lambda_1) for i, v in d.lambdas.items() if i > 1})


def node_perspective(d: DegreeDistribution) -> Dict[int, Fraction]:
    """Fraction of variable nodes of each degree"""
    lambda_bar = average_left_degree(d)
    return {i: lambda_bar * v / i for i, v in d.lambdas.items()}


def ldpc_base_rate(rho: Dict[int, Fraction]) -> Fraction:
    """Rate of a juxtaposition of parity checks with edge distribution rho"""
    rho = parse_degree_map(rho)
    total = sum(rho.values(), Fraction(0))
    if abs(total - 1) > SUM_TOLERANCE:
        raise InvalidDistributionError(f"Check fractions sum to {float(total):.12f}, expected 1")
    if 1 in rho:
        raise InvalidDistributionError("Degree-1 parity checks are not allowed")
    return 1 - sum((v / j for j, v in rho.items()), Fraction(0))


@dataclass(frozen=True)
class EnsembleSpec:
    """Variable degree distribution plus base-code family"""
    distribution: DegreeDistribution
    base_rate: Fraction
    base_kind: BaseKind
    rho: Optional[Dict[int, Fraction]] = None
    component: Optional[Dict] = None
    reference_threshold: Optional[float] = None
    name: str = field(default='custom')

    @property
    def design_rate(self) -> Fraction:
        return design_rate(self)

    @property
    def normalized(self) -> NormalizedDistribution:
        return normalize_over_degree_one(self.distribution)


def design_rate(spec: EnsembleSpec) -> Fraction:
    """R = 1 - (1 - R_b) * lambda bar"""
    base_rate = spec.base_rate
    if spec.base_kind == BaseKind.LDPC and spec.rho is not None:
        base_rate = ldpc_base_rate(spec.rho)
    rate = 1 - (1 - base_rate) * average_left_degree(spec.distribution)
    if rate <= 0:
        raise DegenerateRateError(f"Design rate {float(rate):.6f} is not positive")
    return rate


def ensemble_from_dict(data: Dict, name: str = 'custom') -> EnsembleSpec:
    """Build an EnsembleSpec from the JSON ensemble format"""
    if 'lambda' in data:
        distribution = DegreeDistribution.from_mapping(data['lambda'])
    elif 'tilde_lambda' in data:
        distribution = NormalizedDistribution(parse_degree_map(data['tilde_lambda'])).denormalize(
            data.get('lambda_1', 0))
    else:
        raise InvalidDistributionError("Ensemble needs a 'lambda' or 'tilde_lambda' map")

    base = data.get('base', {})
    try:
        kind = BaseKind(base.get('kind', BaseKind.BLOCK_TLDPC.value))
    except ValueError:
        raise InvalidDistributionError(f"Unknown base kind {base.get('kind')!r}")

    rho = None
    component = None
    if kind == BaseKind.LDPC:
        if 'rho' not in base:
            raise InvalidDistributionError("LDPC base needs a 'rho' check distribution")
        rho = parse_degree_map(base['rho'])
        base_rate = ldpc_base_rate(rho)
    elif kind == BaseKind.BLOCK_TLDPC:
        base_rate = Fraction(1, 2)
    else:
        component = base.get('component')
        if component is None:
            raise InvalidDistributionError("User-defined base needs a 'component' description")
        # local import: basecode depends on this module
        from src.codes.basecode import component_from_dict
        code, _ = component_from_dict(component)
        base_rate = Fraction(code.dimension, code.length)

    reference = data.get('reference_threshold')
    return EnsembleSpec(distribution=distribution, base_rate=base_rate, base_kind=kind, rho=rho,
                        component=component,
                        reference_threshold=float(reference) if reference is not None else None,
                        name=name)


def ensemble_to_dict(spec: EnsembleSpec) -> Dict:
    base = {'kind': spec.base_kind.value}
    if spec.rho is not None:
        base['rho'] = {str(j): str(v) for j, v in spec.rho.items()}
    if spec.component is not None:
        base['component'] = spec.component
    data = {'lambda': spec.distribution.to_dict(), 'base': base}
    if spec.reference_threshold is not None:
        data['reference_threshold'] = spec.reference_threshold
    return data


def load_ensemble(source: str) -> EnsembleSpec:
    """Ensemble from a JSON file path or a reference-ensemble name"""
    if source in REFERENCE_ENSEMBLES and not os.path.exists(source):
        logger.debug(f"Using reference ensemble {source}")
        return ensemble_from_dict(REFERENCE_ENSEMBLES[source], name=source)

    with open(source, 'r') as f:
        data = json.load(f)
    spec = ensemble_from_dict(data, name=os.path.splitext(os.path.basename(source))[0])
    logger.info(f"Loaded ensemble {spec.name} from {source} (kind={spec.base_kind.value})")
    return spec


def save_ensemble(spec: EnsembleSpec, path: str) -> None:
    with open(path, 'w') as f:
        json.dump(ensemble_to_dict(spec), f, indent=2)
