import math

import numpy as np
import pytest

from specfun.gamma_functions import (
    bessel_k,
    gamma,
    lower_incomplete_gamma,
    regularized_lower_gamma,
    regularized_upper_gamma,
    upper_incomplete_gamma,
)
from utils.errors import DomainError


@pytest.mark.parametrize("x, expected", [(1.0, 1.0), (5.0, 24.0), (0.5, math.sqrt(math.pi))])
def test_gamma_values(x, expected):
    assert gamma(x) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("a", [0.3, 1.0, 2.5, 7.0])
@pytest.mark.parametrize("x", [0.0, 0.01, 1.0, 12.0])
def test_incomplete_gamma_split(a, x):
    total = lower_incomplete_gamma(a, x) + upper_incomplete_gamma(a, x)
    assert total == pytest.approx(math.gamma(a), rel=1e-12)
    assert regularized_lower_gamma(a, x) + regularized_upper_gamma(a, x) == pytest.approx(1.0, rel=1e-12)


def test_lower_incomplete_gamma_integer_closed_form():
    # Υ(3, x) = 2 − e^{−x}(x² + 2x + 2)
    x = 1.7
    assert lower_incomplete_gamma(3, x) == pytest.approx(2.0 - math.exp(-x) * (x * x + 2 * x + 2), rel=1e-13)


def test_array_shape_is_preserved():
    values = upper_incomplete_gamma(2.0, np.array([0.5, 1.0, 2.0]))
    assert values.shape == (3,)
    assert values == pytest.approx(np.exp(-np.array([0.5, 1.0, 2.0])) * (1 + np.array([0.5, 1.0, 2.0])))


def test_bessel_k_half_order():
    x = 2.3
    assert bessel_k(0.5, x) == pytest.approx(math.sqrt(math.pi / (2 * x)) * math.exp(-x), rel=1e-13)


@pytest.mark.parametrize("call", [
    lambda: gamma(0.0),
    lambda: gamma(-1.5),
    lambda: lower_incomplete_gamma(0.0, 1.0),
    lambda: upper_incomplete_gamma(1.0, -0.5),
    lambda: bessel_k(1.0, 0.0),
])
def test_domain_errors(call):
    with pytest.raises(DomainError):
        call()
