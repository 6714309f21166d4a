import numpy as np
import pytest

import config
from utils.errors import (
    DomainError,
    NumericalError,
    PrecisionNotReachedError,
    QuadratureToleranceError,
    SecrecyLabError,
    SeriesNotConvergedError,
    ValidationError,
    prefix_error,
)
from utils.math_utils import (
    db_to_linear,
    dbm_to_linear,
    delta_expansion,
    linear_to_db,
    log_spaced,
    quiet_run_end,
    slope_loglog,
)


@pytest.mark.parametrize("value_db, expected", [(0.0, 1.0), (10.0, 10.0), (-10.0, 0.1), (30.0, 1000.0)])
def test_db_to_linear(value_db, expected):
    assert db_to_linear(value_db) == pytest.approx(expected, rel=1e-14)


def test_linear_to_db_inverts_db_to_linear():
    for value_db in (-17.5, 0.0, 3.0, 42.0):
        assert linear_to_db(db_to_linear(value_db)) == pytest.approx(value_db, abs=1e-12)


def test_dbm_to_linear_references():
    assert dbm_to_linear(30.0) == pytest.approx(1000.0)
    assert dbm_to_linear(30.0, "W") == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        dbm_to_linear(30.0, "kW")


def test_delta_expansion():
    assert delta_expansion(1, 2.5) == (2.5,)
    assert delta_expansion(2, 1.0) == pytest.approx((0.5, 1.0))
    with pytest.raises(ValidationError):
        delta_expansion(0, 1.0)


def test_quiet_run_end():
    magnitudes = np.array([1.0, 1e-20, 1.0, 1e-20, 1e-20, 1e-20, 1.0])
    assert quiet_run_end(magnitudes, 1e-10, 3) == 6
    assert quiet_run_end(magnitudes, 1e-10, 4) == -1


def test_log_spaced_end_points():
    grid = log_spaced(1e-3, 1e3, 7)
    assert grid[0] == pytest.approx(1e-3)
    assert grid[-1] == pytest.approx(1e3)
    assert np.allclose(np.diff(np.log10(grid)), 1.0)


def test_slope_loglog_power_law():
    x = np.array([1.0, 10.0, 100.0])
    assert slope_loglog(x, 3.0 * x ** -1.21) == pytest.approx(-1.21)
    with pytest.raises(ValidationError):
        slope_loglog([1.0], [1.0])
    with pytest.raises(ValidationError):
        slope_loglog([1.0, 2.0], [0.0, 1.0])


def test_exit_codes():
    assert ValidationError("x").exit_code == config.EXIT_VALIDATION
    assert DomainError("x").exit_code == config.EXIT_VALIDATION
    assert NumericalError("x").exit_code == config.EXIT_NUMERICAL
    assert isinstance(ValidationError("x"), ValueError)
    assert isinstance(NumericalError("x"), ArithmeticError)
    assert issubclass(QuadratureToleranceError, SecrecyLabError)


def test_prefix_error_keeps_payload():
    error = prefix_error(SeriesNotConvergedError("stalled", 0.25, 400, "g1"), "h13")
    assert str(error).startswith("h13: ")
    assert (error.partial_value, error.terms, error.series) == (0.25, 400, "g1")

    error = prefix_error(PrecisionNotReachedError("noisy", 1.5, 1e-3), "varrho")
    assert error.best_estimate == 1.5 and error.abs_error == 1e-3

    error = prefix_error(QuadratureToleranceError("depth", 0.1, 1e-4), "h21")
    assert isinstance(error, QuadratureToleranceError) and error.best_value == 0.1

    error = prefix_error(ValidationError("bad"), "h11")
    assert isinstance(error, ValidationError) and "h11" in str(error)
