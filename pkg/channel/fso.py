"""
Unified Gamma-Gamma FSO hop with pointing errors (source to relay).
Holds the link parameters, the constants derived from them, the SNR
density and distribution, and the samplers used by the simulator.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special
from scipy.interpolate import PchipInterpolator

import config
from specfun.gamma_functions import bessel_k
from specfun.meijer import meijer_g_values
from utils.errors import NumericalError, ValidationError
from utils.math_utils import delta_expansion, log_spaced

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FsoLinkParams:
    """Gamma-Gamma turbulence (a, b), pointing error ξ, detection r and Ω_SR."""

    a: float
    b: float
    xi: float
    r: int
    omega_sr: float

    def __post_init__(self):
        for name in ("a", "b", "xi", "omega_sr"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValidationError(f"FSO parameter {name} must be positive, got {value}")
        if self.r not in (1, 2):
            raise ValidationError(f"detection type r must be 1 (HD) or 2 (IM/DD), got {self.r}")
        object.__setattr__(self, "r", int(self.r))


@dataclass(frozen=True)
class FsoDerived:
    params: FsoLinkParams
    A: float
    B: float
    I: float
    rho: float
    h: float
    Xi: float
    K1: tuple
    K2: tuple

    @property
    def r(self):
        return self.params.r

    @property
    def omega_sr(self):
        return self.params.omega_sr

    def pdf_rows(self):
        """Parameter rows of the G^{3,0}_{1,3} density kernel."""
        xi2 = self.params.xi ** 2
        return (xi2 + 1.0,), (xi2, self.params.a, self.params.b)

    def cdf_rows(self):
        """Parameter rows of the G^{3r,1}_{r+1,3r+1} distribution function."""
        return (1.0,) + self.K1, self.K2 + (0.0,)


def derive_fso(params):
    """Compute every constant of the FSO hop from its parameters."""
    a, b, r = params.a, params.b, params.r
    xi2 = params.xi ** 2
    h = xi2 / (xi2 + 1.0)
    gamma_ab = special.gamma(a) * special.gamma(b)
    A = xi2 / (r * gamma_ab)
    B = h * a * b / params.omega_sr ** (1.0 / r)
    Xi = r ** (a + b - 1.0) / (2.0 * math.pi) ** (r - 1)
    I = xi2 * r ** (a + b - 2.0) / ((2.0 * math.pi) ** (r - 1) * gamma_ab)
    rho = (h * a * b) ** r / (params.omega_sr * r ** (2 * r))
    K1 = delta_expansion(r, xi2 + 1.0)
    K2 = delta_expansion(r, xi2) + delta_expansion(r, a) + delta_expansion(r, b)
    derived = FsoDerived(params, A, B, I, rho, h, Xi, K1, K2)
    if not all(math.isfinite(v) for v in (A, B, I, rho, Xi) + K1 + K2):
        raise ValidationError(f"non-finite FSO constants for {params}")
    return derived


def _scalar_or_array(values, like):
    return float(values[0]) if np.ndim(like) == 0 else values.reshape(np.shape(like))


def fso_pdf(derived, gamma):
    """Density A·γ⁻¹·G^{3,0}_{1,3}[Bγ^{1/r} | ξ²+1; ξ², a, b] for γ > 0."""
    values = np.asarray(gamma, dtype=float).reshape(-1)
    if np.any(~(values > 0)):
        raise ValidationError("fso_pdf needs γ > 0")
    a_row, b_row = derived.pdf_rows()
    kernel, _ = meijer_g_values(3, 0, a_row, b_row, derived.B * values ** (1.0 / derived.r))
    density = np.maximum(derived.A * kernel / values, 0.0)
    return _scalar_or_array(density, gamma)


def fso_cdf(derived, gamma):
    """Distribution I·G^{3r,1}_{r+1,3r+1}[ργ | 1, K1; K2, 0] for γ ≥ 0."""
    values = np.asarray(gamma, dtype=float).reshape(-1)
    if np.any(~(values >= 0)):
        raise ValidationError("fso_cdf needs γ >= 0")
    result = np.zeros_like(values)
    positive = values > 0
    if np.any(positive):
        a_row, b_row = derived.cdf_rows()
        g, _ = meijer_g_values(3 * derived.r, 1, a_row, b_row, derived.rho * values[positive])
        result[positive] = derived.I * g
    return _scalar_or_array(np.clip(result, 0.0, 1.0), gamma)


def fso_survival(derived, gamma):
    return 1.0 - fso_cdf(derived, gamma)


def sample_fso(derived, rng, size=None):
    """Inverse-transform draws with Brent's method on the exact CDF."""
    count = 1 if size is None else int(np.prod(size))
    uniforms = rng.random(count)
    draws = np.array([_invert_cdf(derived, u) for u in uniforms])
    return float(draws[0]) if size is None else draws.reshape(size)


def _invert_cdf(derived, u):
    upper = derived.omega_sr
    for _ in range(200):
        if fso_cdf(derived, upper) > u:
            break
        upper *= 2.0
    else:
        raise NumericalError(f"could not bracket the FSO quantile of u = {u}")
    return optimize.brentq(
        lambda g: fso_cdf(derived, g) - u, 0.0, upper, xtol=1e-300, rtol=config.FSO_ROOT_XTOL
    )


def sample_fso_compositional(derived, rng, size=None):
    """Physical generator γ = Ω·(X·Y·V^{1/ξ²}/h)^r.

    X ~ Gamma(a, 1/a) and Y ~ Gamma(b, 1/b) are the turbulence factors and
    V^{1/ξ²} with V uniform is the pointing-error attenuation.
    """
    p = derived.params
    large_scale = rng.gamma(p.a, 1.0 / p.a, size)
    small_scale = rng.gamma(p.b, 1.0 / p.b, size)
    pointing = rng.random(size) ** (1.0 / p.xi ** 2)
    return p.omega_sr * (large_scale * small_scale * pointing / derived.h) ** p.r


class FsoInverseTable:
    def __init__(self, derived, knots=config.FSO_TABLE_KNOTS):
        """Initialize the monotone quantile table of γ_SR."""
        self.derived = derived
        lower, upper = self._support()
        for doubling in range(config.FSO_TABLE_MAX_DOUBLINGS + 1):
            self._build(lower, upper, knots)
            if self.max_error <= config.FSO_TABLE_TOL:
                break
            if doubling < config.FSO_TABLE_MAX_DOUBLINGS:
                knots *= 2
        else:
            logger.warning(
                "FSO quantile table stopped at %d knots with u-error %.3g", knots, self.max_error
            )
        self.knots = knots
        logger.debug(
            "FSO quantile table: %d knots on [%.3g, %.3g], u-error %.3g",
            knots, lower, upper, self.max_error,
        )

    def _support(self):
        lower = upper = self.derived.omega_sr
        while fso_cdf(self.derived, lower) > config.FSO_TABLE_LOWER_CDF:
            lower /= 10.0
            if lower < 1e-300:
                raise NumericalError("FSO distribution has no lower tail below 1e-300")
        while 1.0 - fso_cdf(self.derived, upper) > config.FSO_TABLE_UPPER_COMPLEMENT:
            upper *= 10.0
            if upper > 1e300:
                raise NumericalError("FSO distribution has no upper tail below 1e300")
        return lower, upper

    def _build(self, lower, upper, knots):
        grid = log_spaced(lower, upper, 2 * knots - 1)
        cdf = fso_cdf(self.derived, grid)
        log_grid = np.log(grid)
        with np.errstate(divide="ignore"):
            logit = special.logit(cdf)
        # keep a strictly increasing, finite subsequence
        valid = np.isfinite(logit)
        log_grid, logit, cdf = log_grid[valid], logit[valid], cdf[valid]
        running = np.maximum.accumulate(logit)
        keep = np.concatenate(([True], logit[1:] > running[:-1]))
        log_grid, logit, cdf = log_grid[keep], logit[keep], cdf[keep]
        nodes = slice(0, None, 2)
        checks = slice(1, None, 2)
        self.quantile = PchipInterpolator(logit[nodes], log_grid[nodes], extrapolate=False)
        self.logit_range = (float(logit[nodes][0]), float(logit[nodes][-1]))

        # error in u at the interleaved check points
        predicted = self.quantile(logit[checks])
        slope = np.gradient(logit, log_grid)[checks]
        u = cdf[checks]
        error = np.abs(predicted - log_grid[checks]) * np.abs(slope) * u * (1.0 - u)
        self.max_error = float(np.nanmax(error)) if error.size else math.inf

    def __call__(self, uniforms):
        """Map uniforms in (0, 1) to γ_SR draws."""
        with np.errstate(divide="ignore"):
            logit = special.logit(np.asarray(uniforms, dtype=float))
        logit = np.clip(logit, *self.logit_range)
        return np.exp(self.quantile(logit))


def gamma_gamma_kernel_bessel(xi, a, b, u):
    """G^{3,0}_{1,3}[u | ξ²+1; ξ², a, b] through the Bessel-K kernel (HD only).

    Uses G^{2,0}_{0,2}[t | a, b] = 2 t^{(a+b)/2} K_{a-b}(2√t) and
    G^{3,0}_{1,3}[u | ...] = u^{ξ²} ∫_u^∞ t^{-ξ²-1} G^{2,0}_{0,2}[t | a, b] dt.
    """
    if not u > 0:
        raise ValidationError("kernel argument must be positive")
    xi2 = xi ** 2

    def integrand(t):
        return t ** (-xi2 - 1.0) * 2.0 * t ** (0.5 * (a + b)) * bessel_k(a - b, 2.0 * math.sqrt(t))

    value, error = integrate.quad(integrand, u, np.inf, epsabs=0.0, epsrel=1e-11, limit=200)
    if error > 1e-8 * abs(value):
        raise NumericalError(f"Bessel-K kernel quadrature error {error:.3g} at u = {u}")
    return u ** xi2 * value
