import math

import pytest

from analysis import oracle_quadrature
from analysis.exact_sop import TERM_NAMES, ExactSop
from analysis.integrals import FsoIntegrals
from analysis.oracle_quadrature import (
    G_FUNCTIONS,
    QuadPolicy,
    QuadratureOracle,
    asymptotic_laws,
    bessel_kernel_check,
    exact_laws,
    oracle_g,
    oracle_h_term,
    oracle_sop,
    oracle_varrho,
)
from conftest import make_scenario
from utils.errors import QuadratureToleranceError, ValidationError
from utils.math_utils import db_to_linear


@pytest.fixture(scope="module")
def wide_scenario():
    return make_scenario(rs=0.5)


@pytest.fixture(scope="module")
def oracle(wide_scenario):
    return QuadratureOracle(wide_scenario)


@pytest.mark.parametrize("policy", [
    {"abs_tol": 0.0},
    {"rel_tol": -1.0},
    {"max_depth": 10},
    {"tail_cutoff": 1.0},
])
def test_policy_validation(policy):
    with pytest.raises(ValidationError):
        QuadPolicy(**policy)


def test_halved_policy():
    halved = QuadPolicy().halved()
    assert halved.abs_tol == QuadPolicy().abs_tol / 2
    assert halved.max_depth == QuadPolicy().max_depth


def test_exact_laws_cutoffs(wide_scenario):
    laws = exact_laws(wide_scenario)
    assert not laws.asymptotic
    assert 1.0 - laws.sr_cdf(laws.sr_cutoff) < QuadPolicy().tail_cutoff
    assert 1.0 - laws.re_cdf(laws.re_cutoff) == pytest.approx(QuadPolicy().tail_cutoff, rel=1e-3)


@pytest.mark.parametrize("name, args", [
    ("G0", (2, 0.6)), ("G0", (3, 6.0)),
    ("G1", (1.0, 0.4)), ("G1", (2.0, 5.0)),
    ("G2", (2, 0.6)), ("G2", (3, 6.0)),
    ("G3", (0.0, 0.8)), ("G3", (1.0, 6.0)),
])
def test_helper_integrals_match_series(wide_scenario, oracle, name, args):
    integrals = FsoIntegrals(wide_scenario.fso_derived, wide_scenario.threshold)
    series = getattr(integrals, name.lower())(*args).value
    value, error = oracle.g(name, *args)
    assert value == pytest.approx(series, rel=1e-7)
    assert error < 1e-6 * abs(value) + 1e-9


def test_helper_integrals_run_on_scipy_quad(monkeypatch, wide_scenario):
    calls = []
    real_quad = oracle_quadrature.integrate.quad

    def counting_quad(*args, **kwargs):
        calls.append(kwargs.get("points"))
        return real_quad(*args, **kwargs)

    monkeypatch.setattr(oracle_quadrature.integrate, "quad", counting_quad)
    value, _ = QuadratureOracle(wide_scenario).g("G3", 1.0, 6.0)
    series = FsoIntegrals(wide_scenario.fso_derived, wide_scenario.threshold).g3(1.0, 6.0).value
    assert value == pytest.approx(series, rel=1e-7)
    assert len(calls) == 1 and len(calls[0]) > 0


def test_helper_integral_reports_unmet_tolerance(monkeypatch, wide_scenario):
    def stalled_quad(fn, a, b, **kwargs):
        return 0.25, 0.1, {"neval": 21}, "The maximum number of subdivisions (400) has been achieved."

    monkeypatch.setattr(oracle_quadrature.integrate, "quad", stalled_quad)
    with pytest.raises(QuadratureToleranceError) as caught:
        QuadratureOracle(wide_scenario).g("psi2", 1.0, 2.0)
    assert caught.value.best_value == 0.25
    assert caught.value.abs_error == 0.1


@pytest.mark.parametrize("term", ["h13", "h23"])
def test_nested_and_reordered_forms_agree(oracle, term):
    nested, _ = oracle.h_term(term, "nested")
    reordered, _ = oracle.h_term(term, "reordered")
    assert nested == pytest.approx(reordered, abs=1e-9)


def test_varrho_forms_agree(oracle):
    assert oracle.varrho("min_law")[0] == pytest.approx(oracle.varrho("expansion")[0], abs=1e-10)


def test_term_values_match_closed_forms(wide_scenario, oracle):
    closed = ExactSop(wide_scenario)
    for term in TERM_NAMES:
        assert oracle.h_term(term)[0] == pytest.approx(getattr(closed, term)().value, abs=1e-6)


def test_oracle_sop_breakdown():
    scenario = make_scenario(rs=0.1)
    breakdown = oracle_sop(scenario)
    assert breakdown.engine == "oracle"
    assert breakdown.sop == pytest.approx(breakdown.h1 + breakdown.h2 + 1.0 - breakdown.varrho, abs=1e-15)
    assert oracle_varrho(scenario) == pytest.approx(breakdown.varrho, abs=1e-12)
    assert oracle_h_term("h11", scenario) == pytest.approx(breakdown.h11, abs=1e-12)


def test_zero_rate_terms_vanish():
    scenario = make_scenario().with_rs(0.0)
    assert all(oracle_h_term(term, scenario) == 0.0 for term in TERM_NAMES)


def test_invalid_requests(oracle, wide_scenario):
    with pytest.raises(ValidationError):
        oracle.h_term("h31")
    with pytest.raises(ValidationError):
        oracle.h_term("h13", "sideways")
    with pytest.raises(ValidationError):
        oracle.varrho("guess")
    with pytest.raises(ValidationError):
        oracle.g("G5", 1.0, 1.0)
    with pytest.raises(ValidationError):
        oracle.g("G1", 1.0)
    with pytest.raises(ValidationError):
        oracle_g("G2", (2, -1.0), wide_scenario)


def test_power_laws_restrict_forms():
    scenario = make_scenario(omega_re_db=3.0)
    omega_rd = db_to_linear(40.0)
    power_oracle = QuadratureOracle(scenario, laws=asymptotic_laws(scenario, omega_rd))
    assert power_oracle.laws.asymptotic
    assert math.isinf(power_oracle.laws.sr_cutoff)
    with pytest.raises(ValidationError):
        power_oracle.h_term("h13", "nested")
    with pytest.raises(ValidationError):
        power_oracle.varrho("expansion")
    for name in G_FUNCTIONS[:4]:
        with pytest.raises(ValidationError):
            power_oracle.g(name, 1, 1.0)


def test_bessel_kernel_check():
    assert bessel_kernel_check(make_scenario(r=1), [0.05, 1.0, 20.0, 300.0]) < 1e-8
    with pytest.raises(ValidationError):
        bessel_kernel_check(make_scenario(r=2), [1.0])
