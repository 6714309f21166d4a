import math

import numpy as np
import pytest

from analysis.quadrature import (
    CumulativeIntegral,
    adaptive_integrate,
    gauss_rule,
    initial_edges,
    nested_integral,
    tail_edges,
)
from utils.errors import NumericalError, QuadratureToleranceError, ValidationError


def test_gauss_rule_is_cached_and_normalised():
    nodes, weights = gauss_rule(10)
    assert gauss_rule(10)[0] is nodes
    assert weights.sum() == pytest.approx(2.0)


def test_polynomial_is_exact():
    result = adaptive_integrate(lambda x: x ** 5, 0.0, 1.0)
    assert result.value == pytest.approx(1.0 / 6.0, rel=1e-14)
    assert result.abs_error < 1e-14


def test_graded_panels_resolve_end_point_singularity():
    result = adaptive_integrate(lambda x: x ** -0.5, 0.0, 1.0, abs_tol=1e-12, rel_tol=1e-11, grade_left=True)
    assert result.value == pytest.approx(2.0, rel=1e-9)


def test_power_singularity_of_small_exponent():
    exponent = 0.605
    result = adaptive_integrate(lambda x: x ** (exponent - 1.0), 0.0, 0.3, 1e-14, 1e-11, grade_left=True)
    assert result.value == pytest.approx(0.3 ** exponent / exponent, rel=1e-8)


def test_long_range_with_log_panels():
    upper = 60.0
    result = adaptive_integrate(lambda x: x ** 3 * np.exp(-x), 0.5, upper, breakpoints=tail_edges(0.5, upper))
    expected = math.exp(-0.5) * (0.5 ** 3 + 3 * 0.25 + 6 * 0.5 + 6) - math.exp(-upper) * (
        upper ** 3 + 3 * upper ** 2 + 6 * upper + 6)
    assert result.value == pytest.approx(expected, rel=1e-10)


def test_result_panels_cover_the_range():
    result = adaptive_integrate(np.cos, 0.0, 3.0)
    assert result.edges[0, 0] == 0.0 and result.edges[-1, 1] == 3.0
    assert np.all(result.edges[1:, 0] == result.edges[:-1, 1])
    assert result.panel_values.sum() == pytest.approx(result.value)
    assert result.evaluations > 0


def test_cumulative_integral():
    cumulative = CumulativeIntegral(np.cos, 0.0, 4.0)
    x = np.array([0.0, 0.3, 1.7, 2.9, 4.0])
    assert cumulative(x) == pytest.approx(np.sin(x), abs=1e-11)
    assert cumulative(1.0) == pytest.approx(math.sin(1.0), abs=1e-11)
    assert cumulative.total == pytest.approx(math.sin(4.0), abs=1e-11)


def test_nested_integral():
    # ∫_0^1 e^x ∫_0^x y dy dx = ∫_0^1 e^x x²/2 dx = (e − 2)/2
    value, error = nested_integral(np.exp, lambda y: y, 0.0, 1.0)
    assert value == pytest.approx((math.e - 2.0) / 2.0, rel=1e-11)
    assert error < 1e-9


def test_nested_integral_with_inner_start():
    # ∫_1^2 ∫_0^x 1 dy dx = 1.5
    value, _ = nested_integral(np.ones_like, np.ones_like, 1.0, 2.0, inner_start=0.0)
    assert value == pytest.approx(1.5, rel=1e-12)


def test_tolerance_failure_carries_best_value():
    with pytest.raises(QuadratureToleranceError) as caught:
        adaptive_integrate(lambda x: np.sin(1.0 / x), 1e-6, 1.0, abs_tol=1e-15, rel_tol=1e-15, max_depth=2)
    assert math.isfinite(caught.value.best_value)
    assert caught.value.abs_error > 0


def test_invalid_ranges_and_integrands():
    with pytest.raises(ValidationError):
        adaptive_integrate(np.cos, 1.0, 1.0)
    with pytest.raises(NumericalError):
        adaptive_integrate(lambda x: np.full_like(x, np.nan), 0.0, 1.0)


def test_edges():
    graded = initial_edges(0.0, 1.0, grade_left=True)
    assert graded[0] == 0.0 and graded[-1] == 1.0
    assert graded[1] == pytest.approx(2.0 ** -60)
    assert np.all(np.diff(graded) > 0)
    with_breaks = initial_edges(0.0, 1.0, breakpoints=[0.123, 5.0])
    assert 0.123 in with_breaks and 5.0 not in with_breaks
    tail = tail_edges(0.0, 100.0)
    assert tail[0] == 0.0 and tail[-1] == pytest.approx(100.0)
