from fractions import Fraction

import numpy as np
import pytest

from src.codes.basecode import make_block_tldpc_base
from src.codes.ensemble import NormalizedDistribution, average_left_degree
from src.codes.exceptions import InputValueError, NoDistributionError
from src.codes.exit_chart import (
    BaseTransfer,
    area_base_closed,
    area_report,
    area_variable_closed,
    base_curve,
    bec_threshold,
    curve_shift_areas,
    de_converges,
    de_threshold,
    delta_area,
    ensemble_base_transfer,
    optimize_degrees,
    variable_curve,
    write_curves_csv,
)


def test_straight_variable_curve():
    curve = variable_curve(NormalizedDistribution({2: 1}), 0.5, samples=11)
    assert np.allclose(curve.horizontal, 0.5 * curve.vertical)
    assert tuple(curve.points[0]) == (0.0, 0.0)


def test_variable_curve_endpoints(tldpc_ensemble):
    curve = variable_curve(tldpc_ensemble.normalized, 0.896)
    assert curve.points[-1] == pytest.approx([0.896, 1.0])
    assert np.all(np.diff(curve.horizontal) >= 0)
    flat = variable_curve(tldpc_ensemble.normalized, 0.0, samples=5)
    assert np.allclose(flat.horizontal, 0.0)


def test_variable_curve_rejects_bad_p(tldpc_ensemble):
    with pytest.raises(InputValueError):
        variable_curve(tldpc_ensemble.normalized, 1.2)


def test_right_regular_base_curve():
    curve = base_curve(BaseTransfer.from_rho({4: 1}), 0.3, samples=3)
    assert curve.vertical[1] == pytest.approx(0.875)


def test_block_base_curve_endpoints():
    transfer = BaseTransfer.from_spec(make_block_tldpc_base(2))
    assert base_curve(transfer, 0.0, samples=5).vertical[0] == pytest.approx(0.0)
    assert base_curve(transfer, 0.7).points[-1] == pytest.approx([1.0, 1.0])


def test_block_base_curve_grows_with_p(tldpc_ensemble):
    transfer = ensemble_base_transfer(tldpc_ensemble)
    low = base_curve(transfer, 0.8, samples=101).vertical
    high = base_curve(transfer, 0.9, samples=101).vertical
    assert np.all(low[1:-1] < high[1:-1])


def test_closed_form_areas():
    assert area_variable_closed(NormalizedDistribution({2: 1}).denormalize(0), 0.0) == 1.0
    assert area_variable_closed(NormalizedDistribution({2: 1}).denormalize(0), 0.3) == pytest.approx(0.85)
    assert area_base_closed(Fraction(1, 2), 0, 0.4) == pytest.approx(0.5)
    assert area_base_closed(Fraction(1, 2), Fraction(1, 3), 0.896) == pytest.approx(0.698)
    assert area_base_closed(Fraction(1, 2), Fraction(1, 3), 1.0) == pytest.approx(0.75)


def test_tldpc_closed_forms(tldpc_ensemble):
    d = tldpc_ensemble.distribution
    assert area_variable_closed(d, 0.896) == pytest.approx(0.7013, abs=1e-4)
    lambda_bar = average_left_degree(d)
    delta = delta_area(1 - 0.896, tldpc_ensemble.design_rate, lambda_bar, d.lambda_1)
    assert delta == pytest.approx(0.0033, abs=1e-4)
    assert delta_area(0.1, 0.1, 2.0, 0.0) == 0.0


def test_delta_area_slope(tldpc_ensemble):
    d = tldpc_ensemble.distribution
    lambda_bar = float(average_left_degree(d))
    rate = float(tldpc_ensemble.design_rate)
    h = 1e-6
    slope = (delta_area(1 - 0.8 - h, rate, lambda_bar, d.lambda_1)
             - delta_area(1 - 0.8, rate, lambda_bar, d.lambda_1)) / h
    assert slope == pytest.approx(-1.0 / (lambda_bar * (1 - float(d.lambda_1))), rel=1e-6)


def test_curve_shift_areas():
    assert curve_shift_areas(0, 2, 0.07)[0] == 0.0
    a1, a2 = curve_shift_areas(Fraction(1, 3), 2, 0.07)
    assert a1 == pytest.approx(0.035)
    assert a2 == pytest.approx(0.035)


@pytest.mark.parametrize('p', np.linspace(0.05, 0.95, 10))
def test_area_identity_ldpc(ldpc_ensemble, p):
    report = area_report(ldpc_ensemble, float(p))
    assert report.area_variable == pytest.approx(report.closed_area_variable, abs=1e-3)
    assert report.area_base == pytest.approx(report.closed_area_base, abs=2e-3)
    assert report.delta_area == pytest.approx(report.closed_form_delta, abs=2e-3)


@pytest.mark.parametrize('p', np.linspace(0.05, 0.95, 10))
def test_area_identity_tldpc(tldpc_ensemble, p):
    report = area_report(tldpc_ensemble, float(p))
    assert report.area_variable == pytest.approx(report.closed_area_variable, abs=1e-3)
    assert report.area_base == pytest.approx(report.closed_area_base, abs=2e-3)
    assert report.delta_area == pytest.approx(report.closed_form_delta, abs=2e-3)


def test_ldpc_threshold(ldpc_ensemble):
    assert bec_threshold(ldpc_ensemble) == pytest.approx(0.8933, abs=3e-3)


def test_tldpc_threshold(tldpc_ensemble):
    threshold = bec_threshold(tldpc_ensemble)
    assert 0.85 <= threshold <= 0.91


def test_cycle_code_threshold():
    threshold = de_threshold(NormalizedDistribution({2: 1}), BaseTransfer.from_rho({3: 1}))
    assert threshold == pytest.approx(0.5, abs=2e-3)


def test_de_converges(tldpc_ensemble):
    nd = tldpc_ensemble.normalized
    transfer = ensemble_base_transfer(tldpc_ensemble)
    converged, iterations, final = de_converges(nd, transfer, 0.8)
    assert converged and final < 1e-10 and iterations > 1
    assert not de_converges(nd, transfer, 0.95)[0]


def test_optimize_block_base(tldpc_ensemble):
    transfer = ensemble_base_transfer(tldpc_ensemble)
    nd = optimize_degrees(transfer, 0.88, max_degree=10, lambda2_cap=0.5)
    assert sum(nd.tilde_lambda.values()) == 1
    assert nd.tilde_lambda_2 <= Fraction(1, 2) + Fraction(1, 10 ** 8)
    assert nd.max_degree <= 10
    assert de_threshold(nd, transfer) >= 0.879


def test_optimize_infeasible():
    with pytest.raises(NoDistributionError):
        optimize_degrees(BaseTransfer.from_rho({4: 1}), 0.95, max_degree=12, lambda2_cap=0.5, min_rate=0.1)


def test_optimize_rejects_small_max_degree():
    with pytest.raises(InputValueError):
        optimize_degrees(BaseTransfer.from_rho({4: 1}), 0.3, max_degree=1, lambda2_cap=0.5)


def test_curves_csv(tmp_path, tldpc_ensemble):
    path = tmp_path / 'curves.csv'
    variable = variable_curve(tldpc_ensemble.normalized, 0.85, samples=64)
    base = base_curve(ensemble_base_transfer(tldpc_ensemble), 0.85, samples=64)
    write_curves_csv(str(path), variable, base)
    lines = path.read_text().splitlines()
    assert lines[0] == 'x,variable_y,base_y'
    assert len(lines) == 65
    last = [float(v) for v in lines[-1].split(',')]
    assert last == pytest.approx([1.0, 1.0, 1.0])
