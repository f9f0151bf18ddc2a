"""
EXIT charts on the binary erasure channel

Horizontal axis: erasure probability entering the base code (leaving the
variable nodes). Vertical axis: erasure probability leaving the base code.
The variable-node curve is {(p * tildeLambda(y), y)}; the base curve is
{(x, f(x; p))}. Iterative decoding succeeds when the base curve lies below
the variable-node curve, i.e. p * tildeLambda(f(x; p)) < x on (0, 1].
"""

import csv
import logging
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import trapezoid
from scipy.optimize import linprog

from src.codes.basecode import (
    BLOCK_DEGREE_ONE,
    BLOCK_GENERATORS,
    BaseCodeSpec,
    ComponentCode,
    base_transfer_polynomial,
    component_from_dict,
    spec_transfer_polynomial,
)
from src.codes.ensemble import (
    BaseKind,
    DegreeDistribution,
    EnsembleSpec,
    NormalizedDistribution,
    average_left_degree,
    ldpc_base_rate,
    parse_degree_map,
)
from src.codes.exceptions import AllDegreeOneError, InputValueError, NoDistributionError
from src.config.settings import EXIT_ANALYSIS

logger = logging.getLogger(__name__)

VARIABLE_NODES = 'variable-nodes'
BASE_CODE = 'base-code'


@dataclass
class ExitCurve:
    """Sampled transfer curve, one (horizontal, vertical) pair per row"""
    points: np.ndarray
    role: str
    p: float

    @property
    def horizontal(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def vertical(self) -> np.ndarray:
        return self.points[:, 1]

    def area(self) -> float:
        """Area below the curve inside the unit square"""
        if self.role == VARIABLE_NODES:
            return 1.0 - float(trapezoid(self.horizontal, self.vertical))
        return float(trapezoid(self.vertical, self.horizontal))


class BaseTransfer:
    """Base EXIT function f(x; p) with polynomials cached per channel parameter"""

    def __init__(self, polynomial_at: Callable[[float], Polynomial], rate: Fraction,
                 lambda_1: Fraction, name: str = 'base'):
        self._polynomial_at = polynomial_at
        self._cache: Dict[float, Polynomial] = {}
        self.rate = Fraction(rate)
        self.lambda_1 = Fraction(lambda_1)
        self.name = name

    def polynomial(self, p: float) -> Polynomial:
        key = float(p)
        if key not in self._cache:
            self._cache[key] = self._polynomial_at(key)
        return self._cache[key]

    def __call__(self, x, p: float):
        return np.clip(self.polynomial(p)(x), 0.0, 1.0)

    @classmethod
    def from_rho(cls, rho: Dict) -> 'BaseTransfer':
        """sum_j rho_j (1 - (1 - x)^(j-1)), independent of p"""
        rho = parse_degree_map(rho)
        one_minus = Polynomial([1.0, -1.0])
        poly = sum((float(v) * (1 - one_minus ** (j - 1)) for j, v in rho.items()), Polynomial([0.0]))
        return cls(lambda p: poly, ldpc_base_rate(rho), Fraction(0), name='ldpc')

    @classmethod
    def from_component(cls, code: ComponentCode, degree_one) -> 'BaseTransfer':
        degree_one = tuple(degree_one)
        return cls(lambda p: base_transfer_polynomial(code, degree_one, p),
                   Fraction(code.dimension, code.length), Fraction(len(degree_one), code.length),
                   name=code.name)

    @classmethod
    def from_spec(cls, spec: BaseCodeSpec) -> 'BaseTransfer':
        return cls(lambda p: spec_transfer_polynomial(spec, p), spec.rate, spec.degree_one_fraction,
                   name=spec.kind.value)


def ensemble_base_transfer(ensemble: EnsembleSpec) -> BaseTransfer:
    """Base EXIT function of an ensemble's base family"""
    if ensemble.base_kind == BaseKind.LDPC:
        return BaseTransfer.from_rho(ensemble.rho)
    if ensemble.base_kind == BaseKind.BLOCK_TLDPC:
        return BaseTransfer.from_component(ComponentCode(BLOCK_GENERATORS, name='tldpc-block'),
                                           BLOCK_DEGREE_ONE)
    code, degree_one = component_from_dict(ensemble.component)
    return BaseTransfer.from_component(code, degree_one)


def _as_transfer(base: Union[BaseCodeSpec, BaseTransfer]) -> BaseTransfer:
    return base if isinstance(base, BaseTransfer) else BaseTransfer.from_spec(base)


def _check_p(p: float):
    if not 0.0 <= p <= 1.0 or np.isnan(p):
        raise InputValueError(f"Channel erasure probability {p} outside [0, 1]")


def _samples(samples: Optional[int]) -> int:
    return EXIT_ANALYSIS['samples'] if samples is None else int(samples)


def variable_curve(nd: NormalizedDistribution, p: float, samples: Optional[int] = None) -> ExitCurve:
    """Points (p * tildeLambda(y), y) on a uniform y grid"""
    _check_p(p)
    y = np.linspace(0.0, 1.0, _samples(samples))
    return ExitCurve(np.column_stack([p * nd.polynomial()(y), y]), VARIABLE_NODES, p)


def base_curve(base: Union[BaseCodeSpec, BaseTransfer], p: float, samples: Optional[int] = None) -> ExitCurve:
    """Points (x, f(x; p)) on a uniform x grid"""
    _check_p(p)
    x = np.linspace(0.0, 1.0, _samples(samples))
    return ExitCurve(np.column_stack([x, _as_transfer(base)(x, p)]), BASE_CODE, p)


def area_variable_closed(d: DegreeDistribution, p: float) -> float:
    """1 - p (1/lambda_bar - lambda_1) / (1 - lambda_1)"""
    lambda_1 = d.lambda_1
    if lambda_1 >= 1:
        raise AllDegreeOneError("Variable-node curve undefined when every edge has degree 1")
    return 1.0 - p * float((1 / average_left_degree(d) - lambda_1) / (1 - lambda_1))


def area_base_closed(rate_base, lambda_1, p: float) -> float:
    """(R_b - (1 - p) lambda_1) / (1 - lambda_1), for bases whose degree-1 positions extend to an information set"""
    rate_base, lambda_1 = float(rate_base), float(lambda_1)
    return (rate_base - (1.0 - p) * lambda_1) / (1.0 - lambda_1)


def delta_area(capacity: float, rate: float, lambda_bar: float, lambda_1: float) -> float:
    """(C(p) - R) / (lambda_bar (1 - lambda_1))"""
    return (float(capacity) - float(rate)) / (float(lambda_bar) * (1.0 - float(lambda_1)))


def curve_shift_areas(lambda_1, tilde_lambda_bar, delta_p: float) -> Tuple[float, float]:
    """Areas swept by the base curve and by the variable-node curve when p moves by delta_p"""
    lambda_1 = float(lambda_1)
    return lambda_1 / (1.0 - lambda_1) * delta_p, delta_p / float(tilde_lambda_bar)


@dataclass
class AreaReport:
    p: float
    rate: float
    lambda_bar: float
    lambda_1: float
    area_variable: float
    area_base: float
    delta_area: float
    closed_area_variable: float
    closed_area_base: float
    closed_form_delta: float

    def to_dict(self) -> Dict:
        return asdict(self)


def area_report(ensemble: EnsembleSpec, p: float, samples: Optional[int] = None) -> AreaReport:
    """Numerically integrated areas next to their closed forms"""
    transfer = ensemble_base_transfer(ensemble)
    nd = ensemble.normalized
    d = ensemble.distribution
    lambda_bar = average_left_degree(d)
    rate = ensemble.design_rate
    area_var = variable_curve(nd, p, samples).area()
    area_base = base_curve(transfer, p, samples).area()
    return AreaReport(
        p=p, rate=float(rate), lambda_bar=float(lambda_bar), lambda_1=float(d.lambda_1),
        area_variable=area_var, area_base=area_base, delta_area=area_var - area_base,
        closed_area_variable=area_variable_closed(d, p),
        closed_area_base=area_base_closed(ensemble.base_rate, d.lambda_1, p),
        closed_form_delta=delta_area(1.0 - p, rate, lambda_bar, d.lambda_1),
    )


def _horner(coefficients: List[float], x: float) -> float:
    value = 0.0
    for c in reversed(coefficients):
        value = value * x + c
    return value


def de_converges(nd: NormalizedDistribution, transfer: BaseTransfer, p: float,
                 max_iterations: Optional[int] = None) -> Tuple[bool, int, float]:
    """Density evolution x <- p * tildeLambda(f(x; p)) from x = 1

    Returns:
        (converged, iterations, final erasure fraction)
    """
    max_iterations = EXIT_ANALYSIS['de_max_iterations'] if max_iterations is None else max_iterations
    target = EXIT_ANALYSIS['de_convergence']
    stagnation = EXIT_ANALYSIS['de_stagnation']
    outer = [float(c) for c in nd.polynomial().coef]
    inner = [float(c) for c in transfer.polynomial(p).coef]

    x = 1.0
    for iteration in range(1, max_iterations + 1):
        y = min(1.0, max(0.0, _horner(inner, x)))
        updated = p * _horner(outer, y)
        if updated < target:
            return True, iteration, updated
        if x - updated < stagnation:
            return False, iteration, updated
        x = updated
    return False, max_iterations, x


def de_threshold(nd: NormalizedDistribution, transfer: BaseTransfer, tolerance: Optional[float] = None) -> float:
    """Largest p (to within tolerance) for which density evolution converges"""
    tolerance = EXIT_ANALYSIS['threshold_tolerance'] if tolerance is None else tolerance
    lo, hi = 0.0, 1.0
    if de_converges(nd, transfer, hi)[0]:
        return hi
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if de_converges(nd, transfer, mid)[0]:
            lo = mid
        else:
            hi = mid
    return lo


def bec_threshold(spec: EnsembleSpec, tolerance: Optional[float] = None) -> float:
    """BEC density-evolution threshold of an ensemble"""
    threshold = de_threshold(spec.normalized, ensemble_base_transfer(spec), tolerance)
    logger.info(f"BEC threshold of {spec.name}: {threshold:.4f}")
    return threshold


def _to_distribution(degrees: List[int], values: np.ndarray) -> NormalizedDistribution:
    values = np.where(values > 1e-9, values, 0.0)
    values = values / values.sum()
    rounded = {d: Fraction(round(v * 10 ** 9), 10 ** 9) for d, v in zip(degrees, values) if v > 0}
    top = max(rounded, key=rounded.get)
    rounded[top] += 1 - sum(rounded.values())
    return NormalizedDistribution({d: v for d, v in rounded.items() if v > 0})


def optimize_degrees(base: Union[BaseCodeSpec, BaseTransfer], p_target: float, max_degree: int,
                     lambda2_cap: float, min_rate: Optional[float] = None, lambda_1=None,
                     samples: Optional[int] = None) -> NormalizedDistribution:
    """Rate-maximizing tildeLambda whose EXIT curve clears the base curve at p_target

    Linear program over tilde lambda_2..tilde lambda_max_degree maximizing
    sum_i tilde lambda_i / i subject to p * tildeLambda(f(x_j)) <= x_j (1 - margin)
    on a uniform grid, tilde lambda_2 <= lambda2_cap and, optionally, a design
    rate of at least min_rate. The margin doubles whenever the solution's
    density-evolution threshold misses p_target - 1e-3.

    Raises:
        NoDistributionError: the program is infeasible or verification keeps failing
    """
    _check_p(p_target)
    if max_degree < 2:
        raise InputValueError(f"max_degree must be >= 2, got {max_degree}")
    transfer = _as_transfer(base)
    lambda_1 = transfer.lambda_1 if lambda_1 is None else Fraction(lambda_1)
    degrees = list(range(2, max_degree + 1))
    powers = np.array([i - 1 for i in degrees])

    x = np.linspace(0.0, 1.0, _samples(samples))[1:]
    f = transfer(x, p_target)
    objective = -1.0 / np.array(degrees, dtype=float)
    bounds = [(0.0, float(lambda2_cap))] + [(0.0, 1.0)] * (len(degrees) - 1)

    margin = EXIT_ANALYSIS['lp_margin']
    for attempt in range(EXIT_ANALYSIS['lp_retightening_rounds'] + 1):
        A_ub = p_target * f[:, None] ** powers[None, :]
        b_ub = x * (1.0 - margin)
        if min_rate is not None:
            required = (1 - transfer.rate) / (1 - Fraction(min_rate).limit_denominator(10 ** 9))
            rate_row = -float(1 - lambda_1) / np.array(degrees, dtype=float)
            A_ub = np.vstack([A_ub, rate_row])
            b_ub = np.append(b_ub, float(lambda_1 - required))

        result = linprog(objective, A_ub=A_ub, b_ub=b_ub, A_eq=np.ones((1, len(degrees))), b_eq=[1.0],
                         bounds=bounds, method='highs')
        if not result.success:
            logger.error(f"Degree optimization infeasible at p={p_target}: {result.message}")
            raise NoDistributionError(f"No degree distribution clears the base curve at p={p_target}")

        nd = _to_distribution(degrees, result.x)
        threshold = de_threshold(nd, transfer)
        if threshold >= p_target - 1e-3:
            logger.info(f"Optimized distribution for p={p_target}: threshold {threshold:.4f}, "
                        f"sum tilde_lambda_i/i = {float(1 / nd.tilde_lambda_bar):.6f}")
            return nd
        logger.warning(f"Optimized distribution reaches only {threshold:.4f} < {p_target}; "
                       f"re-solving with margin {2 * margin:g}")
        margin *= 2
    raise NoDistributionError(f"Optimized distributions keep missing p={p_target} after re-tightening")


def write_curves_csv(path: str, variable: ExitCurve, base: ExitCurve) -> None:
    """CSV x,variable_y,base_y on the base curve's horizontal grid"""
    x = base.horizontal
    h, y = variable.horizontal, variable.vertical
    variable_y = np.where(x > h[-1], 1.0, np.interp(x, h, y))
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['x', 'variable_y', 'base_y'])
        for row in zip(x, variable_y, base.vertical):
            writer.writerow([f"{v:.10g}" for v in row])
    logger.info(f"Wrote {len(x)} EXIT chart rows to {path}")
