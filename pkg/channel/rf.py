"""
Nakagami-m SWIPT hops (relay to destination, relay to eavesdropper).
With N-antenna MRC and power splitting the received SNR is Gamma
distributed with integer shape τ = mN and rate λ.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from utils.errors import ValidationError


@dataclass(frozen=True)
class RfLinkParams:
    """Fading, antennas, power splitting and link budget of one RF hop."""

    m: int
    n_antennas: int
    alpha: float
    d: float
    eta: float
    lc: float
    pt: float
    n0: float
    sigma2: float
    omega: float

    def __post_init__(self):
        for name in ("m", "n_antennas"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value}")
            object.__setattr__(self, name, int(value))
        if not (0.0 < self.alpha <= 1.0):
            raise ValidationError(f"power-splitting ratio alpha must lie in (0, 1], got {self.alpha}")
        if not (self.eta >= 0 and math.isfinite(self.eta)):
            raise ValidationError(f"path-loss exponent eta must be >= 0, got {self.eta}")
        for name in ("d", "lc", "pt", "n0", "sigma2", "omega"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValidationError(f"RF parameter {name} must be positive, got {value}")


@dataclass(frozen=True)
class RfDerived:
    params: RfLinkParams
    lam: float
    tau: int
    phi: float


def derive_rf(params):
    """λ = m d^η (αN0 + σ²) / (Ω α Pt Lc), τ = mN and φ = λΩ."""
    phi = params.m * params.d ** params.eta * (params.alpha * params.n0 + params.sigma2) / (
        params.alpha * params.pt * params.lc
    )
    lam = phi / params.omega
    if not (lam > 0 and math.isfinite(lam)):
        raise ValidationError(f"RF rate parameter is not positive and finite: {lam}")
    return RfDerived(params, lam, params.m * params.n_antennas, phi)


def _out(values, like):
    return float(values) if np.ndim(like) == 0 else values


def rf_pdf(derived, gamma):
    g = np.asarray(gamma, dtype=float)
    lam, tau = derived.lam, derived.tau
    with np.errstate(divide="ignore"):
        log_density = tau * math.log(lam) + (tau - 1) * np.log(g) - lam * g - special.gammaln(tau)
    density = np.where(g > 0, np.exp(log_density), lam if tau == 1 else 0.0)
    return _out(np.where(g < 0, 0.0, density), gamma)


def rf_cdf(derived, gamma):
    """P(τ, λγ), the Erlang distribution 1 − e^{-λγ} Σ_{p<τ} (λγ)^p/p!."""
    g = np.maximum(np.asarray(gamma, dtype=float), 0.0)
    return _out(special.gammainc(derived.tau, derived.lam * g), gamma)


def rf_survival(derived, gamma):
    g = np.maximum(np.asarray(gamma, dtype=float), 0.0)
    return _out(special.gammaincc(derived.tau, derived.lam * g), gamma)


def rf_quantile(derived, u):
    return _out(special.gammaincinv(derived.tau, np.asarray(u, dtype=float)) / derived.lam, u)


def sample_rf(derived, rng, size=None):
    """Gamma(shape τ, rate λ) draws."""
    return rng.gamma(derived.tau, 1.0 / derived.lam, size)
