"""
Gamma-family special functions used by the closed forms.
Thin, domain-checked wrappers over scipy.special that accept scalars or
arrays and return the same shape.
"""

import numpy as np
from scipy import special

from utils.errors import DomainError


def _as_float(value):
    array = np.asarray(value, dtype=float)
    return array.item() if array.ndim == 0 else array


def gamma(x):
    """Γ(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("gamma is only defined here for x > 0")
    return _as_float(special.gamma(x))


def lower_incomplete_gamma(a, x):
    """Υ(a, x) = ∫_0^x t^{a-1} e^{-t} dt."""
    a, x = _check_incomplete(a, x)
    return _as_float(special.gammainc(a, x) * special.gamma(a))


def upper_incomplete_gamma(a, x):
    """Γ(a, x) = ∫_x^∞ t^{a-1} e^{-t} dt."""
    a, x = _check_incomplete(a, x)
    return _as_float(special.gammaincc(a, x) * special.gamma(a))


def regularized_lower_gamma(a, x):
    """P(a, x) = Υ(a, x) / Γ(a)."""
    a, x = _check_incomplete(a, x)
    return _as_float(special.gammainc(a, x))


def regularized_upper_gamma(a, x):
    """Q(a, x) = Γ(a, x) / Γ(a)."""
    a, x = _check_incomplete(a, x)
    return _as_float(special.gammaincc(a, x))


def bessel_k(nu, x):
    """Modified Bessel function of the second kind K_ν(x), x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("bessel_k needs x > 0")
    return _as_float(special.kv(nu, x))


def _check_incomplete(a, x):
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(~(a > 0)):
        raise DomainError("incomplete gamma needs a > 0")
    if np.any(~(x >= 0)):
        raise DomainError("incomplete gamma needs x >= 0")
    return a, x
