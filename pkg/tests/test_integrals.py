import math

import numpy as np
import pytest
from scipy import integrate, special

from analysis.integrals import Approx, FsoIntegrals, SeriesPolicy, approx_sum, g0, g1, g2, g3, sum_series
from channel.fso import FsoLinkParams, derive_fso, fso_pdf
from utils.errors import SeriesNotConvergedError, ValidationError

THRESHOLD = math.expm1(0.5)


@pytest.fixture(scope="module", params=[1, 2], ids=["hd", "imdd"])
def fso(request):
    return derive_fso(FsoLinkParams(2.902, 2.51, 1.1, request.param, 5.0))


@pytest.fixture(scope="module")
def integrals(fso):
    return FsoIntegrals(fso, THRESHOLD)


def quad(fn, a, b):
    value, _ = integrate.quad(fn, a, b, epsabs=1e-13, epsrel=1e-11, limit=400)
    return value


def quad_tail(fn, a):
    """∫_a^∞ split at decades; the FSO tail is negligible beyond 1e7."""
    edges = [a] + [10.0 ** k for k in range(1, 8) if 10.0 ** k > a]
    return sum(quad(fn, lo, hi) for lo, hi in zip(edges[:-1], edges[1:]))


def upsilon(alpha, x):
    return special.gammainc(alpha, x) * special.gamma(alpha)


@pytest.mark.parametrize("z1, z2", [(0.0, 0.0), (1.0, 0.4), (2.0, 1.2), (0.0, 6.0), (3.0, 9.0)])
def test_g1_against_quadrature(fso, integrals, z1, z2):
    # z2·(Θ−1) straddles the switch between the two series
    expected = quad(lambda x: x ** z1 * math.exp(-z2 * x) * fso_pdf(fso, x) / fso.A, 0.0, THRESHOLD)
    result = integrals.g1(z1, z2)
    assert result.value == pytest.approx(expected, rel=1e-8)
    assert result.error < 1e-6 * abs(expected)


@pytest.mark.parametrize("alpha, beta", [(1, 0.3), (3, 0.8), (2, 6.0), (6, 4.0)])
def test_g0_against_quadrature(fso, integrals, alpha, beta):
    expected = quad(lambda x: upsilon(alpha, beta * x) * fso_pdf(fso, x), 0.0, THRESHOLD)
    assert integrals.g0(alpha, beta).value == pytest.approx(expected, rel=1e-8, abs=1e-15)


@pytest.mark.parametrize("alpha, beta", [(1, 0.3), (2, 1.2), (3, 4.0), (6, 9.0)])
def test_g2_against_quadrature(fso, integrals, alpha, beta):
    expected = quad_tail(lambda x: upsilon(alpha, beta * x) * fso_pdf(fso, x), THRESHOLD)
    assert integrals.g2(alpha, beta).value == pytest.approx(expected, rel=1e-7)


@pytest.mark.parametrize("alpha, beta", [(0.0, 0.5), (2.0, 1.0), (1.0, 5.0), (4.0, 12.0)])
def test_g3_against_quadrature(fso, integrals, alpha, beta):
    expected = quad_tail(lambda y: y ** (alpha + 1.0) * math.exp(-beta * y) * fso_pdf(fso, y), THRESHOLD)
    assert integrals.g3(alpha, beta).value == pytest.approx(expected, rel=1e-7)


@pytest.mark.parametrize("alpha, beta", [(1, 0.5), (4, 2.0)])
def test_split_adds_to_full_range(integrals, alpha, beta):
    full = integrals.upsilon_transform(alpha, beta)
    total = integrals.g0(alpha, beta) + integrals.g2(alpha, beta)
    assert total.value == pytest.approx(full.value, rel=1e-8)


def test_g2_excess_and_prefactor(integrals):
    alpha, beta = 3, 4.0
    floor = upsilon(alpha, beta * THRESHOLD) * integrals.survival_at_threshold().value
    excess = integrals.g2_excess(alpha, beta, log_prefactor=2.0)
    assert excess.value == pytest.approx((integrals.g2(alpha, beta).value - floor) * math.exp(2.0), rel=1e-7)
    g3_scaled = integrals.g3(1.0, 5.0, log_prefactor=-1.5)
    assert g3_scaled.value == pytest.approx(integrals.g3(1.0, 5.0).value * math.exp(-1.5), rel=1e-12)


def test_tail_rule_and_closed_form_agree(fso):
    eager = FsoIntegrals(fso, THRESHOLD, SeriesPolicy(tail_switch=1e-6))
    lazy = FsoIntegrals(fso, THRESHOLD, SeriesPolicy(tail_switch=1e6))
    assert eager.g3(1.0, 0.9).value == pytest.approx(lazy.g3(1.0, 0.9).value, rel=1e-8)
    assert eager.g2(2, 0.9).value == pytest.approx(lazy.g2(2, 0.9).value, rel=1e-8)


def test_taylor_and_reflected_g1_agree(fso):
    taylor = FsoIntegrals(fso, THRESHOLD, SeriesPolicy(taylor_switch=1e6))
    reflected = FsoIntegrals(fso, THRESHOLD, SeriesPolicy(taylor_switch=1e-6))
    assert taylor.g1(1.0, 0.8).value == pytest.approx(reflected.g1(1.0, 0.8).value, rel=1e-9)


def test_g1_cache_and_term_count(fso):
    integrals = FsoIntegrals(fso, THRESHOLD)
    first = integrals.g1(1.0, 0.4)
    assert integrals.g1(1.0, 0.4) is first
    assert integrals.cached_terms == first.terms > 0


def test_zero_threshold_collapses(fso):
    integrals = FsoIntegrals(fso, 0.0)
    assert integrals.g1(1.0, 1.0).value == 0.0
    assert integrals.g0(2, 1.0).value == 0.0
    assert integrals.cdf_at_threshold().value == 0.0
    assert integrals.g2(2, 1.0).value == pytest.approx(integrals.upsilon_transform(2, 1.0).value)


def test_module_wrappers(fso):
    assert g1(1.0, 0.4, fso, THRESHOLD).value == pytest.approx(FsoIntegrals(fso, THRESHOLD).g1(1.0, 0.4).value)
    assert g0(2, 0.5, fso, THRESHOLD).value > 0
    assert g2(2, 0.5, fso, THRESHOLD).value > 0
    assert g3(1.0, 0.5, fso, THRESHOLD).value > 0


@pytest.mark.parametrize("call", [
    lambda i: i.g0(1.5, 1.0),
    lambda i: i.g0(0, 1.0),
    lambda i: i.g0(2, -1.0),
    lambda i: i.g1(-1.0, 1.0),
    lambda i: i.g2(2, 0.0),
    lambda i: i.g3(1.0, 0.0),
    lambda i: i.tail_moment("cdf", 1, 2.0),
])
def test_invalid_arguments(integrals, call):
    with pytest.raises(ValidationError):
        call(integrals)


def test_negative_threshold_rejected(fso):
    with pytest.raises(ValidationError):
        FsoIntegrals(fso, -0.1)


# Series machinery ------------------------------------------------------------
def geometric_block(ratio):
    def block(active, start, length):
        k = np.arange(start, start + length)
        terms = np.tile(ratio ** k, (len(active), 1))
        return terms, np.zeros_like(terms)
    return block


def test_sum_series_geometric():
    (total,) = sum_series(geometric_block(0.5), 1, SeriesPolicy(), "geometric")
    assert total.value == pytest.approx(2.0, rel=1e-11)
    assert 30 < total.terms < 60


def test_sum_series_reports_exhaustion():
    with pytest.raises(SeriesNotConvergedError) as caught:
        sum_series(geometric_block(0.99), 1, SeriesPolicy(max_terms=20, chunk=8), "slow")
    assert caught.value.terms == 20
    assert caught.value.series == "slow"


def test_divergence_guard_only_for_alternating_series():
    policy = SeriesPolicy(divergence_guard=10.0, max_terms=40)
    with pytest.raises(SeriesNotConvergedError, match="divergence guard"):
        sum_series(geometric_block(-1.5), 1, policy, "alternating", alternating=True)
    with pytest.raises(SeriesNotConvergedError, match="did not settle"):
        sum_series(geometric_block(1.5), 1, policy, "positive")


@pytest.mark.parametrize("kwargs", [{"max_terms": 5}, {"rel_term_tol": 0.0}, {"divergence_guard": 1.0},
                                    {"quiet_terms": 0}, {"taylor_switch": 0.0}])
def test_series_policy_validation(kwargs):
    with pytest.raises(ValidationError):
        SeriesPolicy(**kwargs)


def test_approx_arithmetic():
    x = Approx(2.0, 0.1, 3)
    y = Approx(0.5, 0.01, 2)
    total = x + y
    assert (total.value, total.terms) == (2.5, 5)
    assert total.error == pytest.approx(0.11)
    assert (x - y).error == pytest.approx(0.11)
    assert (x * y).error == pytest.approx(2.0 * 0.01 + 0.5 * 0.1)
    assert (1.0 - x).value == -1.0
    assert (x * 3.0).error == pytest.approx(0.3)
    assert (x / 4.0).value == 0.5
    assert approx_sum([x, y, 1.0]).value == 3.5
    assert float(-x) == -2.0
