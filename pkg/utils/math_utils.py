"""
Mathematical utilities for the secrecy outage laboratory.
Unit conversions, parameter expansions and small Numba kernels shared by
the channel, analysis and simulation packages.
"""

import math

import numpy as np
from numba import jit

from utils.errors import ValidationError


# Unit conversions
@jit(nopython=True)
def db_to_linear(value_db):
    """Convert a power ratio in dB to linear scale."""
    return 10.0 ** (value_db / 10.0)


@jit(nopython=True)
def linear_to_db(value):
    """Convert a positive linear power ratio to dB."""
    return 10.0 * math.log10(value)


def dbm_to_linear(power_dbm, reference="mW"):
    """Convert a transmit power in dBm to the linear unit named by `reference`."""
    if reference == "mW":
        return 10.0 ** (power_dbm / 10.0)
    if reference == "W":
        return 10.0 ** ((power_dbm - 30.0) / 10.0)
    raise ValidationError(f"unknown power reference {reference!r} (expected 'mW' or 'W')")


# Parameter expansions
def delta_expansion(k, x):
    """Return Δ(k, x) = (x/k, (x+1)/k, ..., (x+k-1)/k)."""
    if k < 1:
        raise ValidationError(f"Δ-expansion needs k >= 1, got {k}")
    return tuple((x + j) / k for j in range(k))


@jit(nopython=True)
def quiet_run_end(magnitudes, threshold, run):
    """Index just past the first run of `run` entries below `threshold`, or -1."""
    count = 0
    for i in range(magnitudes.shape[0]):
        if magnitudes[i] < threshold:
            count += 1
            if count >= run:
                return i + 1
        else:
            count = 0
    return -1


def log_spaced(lower, upper, count):
    """Log-spaced grid including both end points."""
    return np.exp(np.linspace(math.log(lower), math.log(upper), count))


def slope_loglog(abscissa, values):
    """Least-squares slope of log10(values) against log10(abscissa)."""
    abscissa = np.asarray(abscissa, dtype=float)
    values = np.asarray(values, dtype=float)
    if abscissa.size < 2 or np.any(abscissa <= 0) or np.any(values <= 0):
        raise ValidationError("log-log slope needs at least two positive points")
    slope, _ = np.polyfit(np.log10(abscissa), np.log10(values), 1)
    return float(slope)
