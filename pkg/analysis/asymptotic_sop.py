"""
High-SNR asymptotics: Ω_RD → ∞ with Ω_SR = φ·Ω_RD.

The FSO and R-D distributions are replaced by their leading power laws,
the eavesdropper hop stays exact. The secrecy diversity order is the
smallest exponent among them.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

import config
from analysis.exact_sop import TERM_NAMES, assemble_breakdown
from specfun.meijer import meijer_g_values
from utils.errors import (
    NonGenericExponentsError,
    OutsideAsymptoticRegimeError,
    ProbabilityRangeError,
    SecrecyLabError,
    ValidationError,
    prefix_error,
)
from utils.math_utils import db_to_linear, slope_loglog

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AsymptoticConstants:
    chi: tuple
    exponents: tuple
    intensity: float
    phi_d: float
    tau_d: int
    varphi: float


def asymptotic_constants(scenario):
    """χ_k for every exponent K_{2,k} of the FSO distribution near zero."""
    fso, rf_d, _ = scenario.deriveds()
    exponents = np.asarray(fso.K2)
    for i in range(exponents.size):
        for j in range(i + 1, exponents.size):
            gap = exponents[i] - exponents[j]
            if abs(gap - round(gap)) < config.EXPONENT_GAP_GUARD:
                raise NonGenericExponentsError(
                    f"exponents {exponents[i]:.9g} and {exponents[j]:.9g} differ by an integer; "
                    "the power-law expansion needs logarithmic terms here"
                )
    p = fso.params
    base = (fso.h * p.a * p.b) ** p.r / (p.r ** (2 * p.r) * scenario.varphi)
    chi = []
    for k, exponent in enumerate(exponents):
        others = np.delete(exponents, k)
        log_mag = exponent * math.log(base) + np.sum(special.gammaln(others - exponent))
        sign = np.prod(special.gammasgn(others - exponent))
        for upper in fso.K1:
            log_mag -= special.gammaln(upper - exponent)
            sign *= special.gammasgn(upper - exponent)
        chi.append(float(sign * math.exp(log_mag)))
    if not all(math.isfinite(c) for c in chi):
        raise NonGenericExponentsError(f"non-finite asymptotic constants {chi}")
    return AsymptoticConstants(
        chi=tuple(chi),
        exponents=tuple(float(e) for e in exponents),
        intensity=fso.I,
        phi_d=rf_d.phi,
        tau_d=rf_d.tau,
        varphi=scenario.varphi,
    )


def _weights(consts, omega_rd):
    exponents = np.asarray(consts.exponents)
    return consts.intensity * np.asarray(consts.chi) / omega_rd ** exponents, exponents


def asym_fso_cdf(consts, omega_rd, gamma):
    """Σ_k I·χ_k/(K_k·Ω^{K_k})·γ^{K_k}."""
    weights, exponents = _weights(consts, omega_rd)
    g = np.maximum(np.asarray(gamma, dtype=float), 0.0)
    value = np.sum(weights / exponents * g[..., None] ** exponents, axis=-1)
    return float(value) if np.ndim(gamma) == 0 else value


def asym_fso_pdf(consts, omega_rd, gamma):
    weights, exponents = _weights(consts, omega_rd)
    g = np.asarray(gamma, dtype=float)
    value = np.sum(weights * g[..., None] ** (exponents - 1.0), axis=-1)
    return float(value) if np.ndim(gamma) == 0 else value


def rf_leading_coefficient(rf, omega_rd):
    """c_D = φ_D^{τ_D} / (Ω_RD^{τ_D} Γ(τ_D))."""
    return (rf.phi / omega_rd) ** rf.tau / math.gamma(rf.tau)


def asym_rf_cdf(rf, omega_rd, gamma):
    g = np.maximum(np.asarray(gamma, dtype=float), 0.0)
    value = rf_leading_coefficient(rf, omega_rd) * g ** rf.tau / rf.tau
    return float(value) if np.ndim(gamma) == 0 else value


def asym_rf_pdf(rf, omega_rd, gamma):
    g = np.maximum(np.asarray(gamma, dtype=float), 0.0)
    value = rf_leading_coefficient(rf, omega_rd) * g ** (rf.tau - 1)
    return float(value) if np.ndim(gamma) == 0 else value


def secrecy_diversity_order(scenario):
    """G_d = min{τ_D, ξ²/r, a/r, b/r}."""
    p = scenario.fso
    return float(min(scenario.rf_d.m * scenario.rf_d.n_antennas, p.xi ** 2 / p.r, p.a / p.r, p.b / p.r))


def _lower(v, x):
    return special.gammainc(v, x) * special.gamma(v)


def _upper(v, x):
    return special.gammaincc(v, x) * special.gamma(v)


def upsilon_moment(power, v, lam, y0, method="elementary"):
    """∫_0^{y0} x^{power−1} Υ(v, λx) dx."""
    if y0 == 0:
        return 0.0
    if method == "elementary":
        return (y0 ** power * _lower(v, lam * y0) - _lower(power + v, lam * y0) / lam ** power) / power
    if method == "meijer":
        value, _ = meijer_g_values(1, 2, (1.0 - power, 1.0), (v, 0.0, -float(power)), [lam * y0])
        return y0 ** power * float(value[0])
    raise ValidationError(f"unknown method {method!r}")


def high_snr_scenario(scenario, omega_rd=None):
    """`scenario` placed on the high-SNR axis Ω_SR = φ·Ω_RD.

    An explicit `omega_rd` moves both means along the axis. Without it the
    scenario must already lie on the axis; an independent Ω_SR is refused.
    """
    if omega_rd is None:
        expected = scenario.varphi * scenario.rf_d.omega
        if not math.isclose(scenario.fso.omega_sr, expected, rel_tol=config.HIGH_SNR_AXIS_REL_TOL):
            raise ValidationError(
                f"Ω_SR = {scenario.fso.omega_sr:.6g} is not φ·Ω_RD = {expected:.6g}; "
                "the asymptotic engine only runs along the Ω_RD axis"
            )
        return scenario
    omega_rd = float(omega_rd)
    if not omega_rd > 0:
        raise ValidationError("Ω_RD must be positive")
    return scenario.with_omega_rd(omega_rd)


class AsymptoticSop:
    def __init__(self, scenario, omega_rd=None, check_regime=True):
        """Initialize the high-SNR evaluator at Ω_RD (Ω_SR = φ·Ω_RD)."""
        self.scenario = high_snr_scenario(scenario, omega_rd)
        self.omega_rd = self.scenario.rf_d.omega
        self.consts = asymptotic_constants(self.scenario)
        _, self.rf_d, self.rf_e = self.scenario.deriveds()
        self.y0 = self.scenario.threshold
        self.theta = self.scenario.theta
        self.weights, self.exponents = _weights(self.consts, self.omega_rd)
        self.c_d = rf_leading_coefficient(self.rf_d, self.omega_rd)
        self.tau_d, self.tau_e, self.lam_e = self.rf_d.tau, self.rf_e.tau, self.rf_e.lam
        if check_regime:
            self._check_regime()

    def _check_regime(self):
        limit = config.ASYMPTOTIC_CDF_LIMIT
        fso_value = self.fso_cdf(self.y0)
        rf_value = self.rf_cdf(self.y0)
        if fso_value > limit or rf_value > limit:
            raise OutsideAsymptoticRegimeError(
                f"asymptotic CDFs at Θ−1 are {fso_value:.3g} (FSO) and {rf_value:.3g} (R-D); "
                f"both must stay below {limit:g} (raise Ω_RD)"
            )

    def fso_cdf(self, gamma):
        return asym_fso_cdf(self.consts, self.omega_rd, gamma)

    def rf_cdf(self, gamma):
        return asym_rf_cdf(self.rf_d, self.omega_rd, gamma)

    # Helper integrals -----------------------------------------------------
    def psi1(self, c1, c2):
        """c_D ∫_{Θ−1}^∞ y^{τ_D+c1−1} e^{−c2 y} (1 − F∞_SR(y)) dy."""
        v = self.tau_d + int(c1)
        x = c2 * self.y0
        head = _upper(v, x) * (1.0 - self.fso_cdf(self.y0))
        tail = 0.0
        for weight, exponent in zip(self.weights, self.exponents):
            tail += weight * sum(
                _upper(exponent + n, x) / (math.factorial(n) * c2 ** exponent) for n in range(v)
            )
        return self.c_d / c2 ** v * (head - special.gamma(v) * tail)

    def psi2(self, c1, c2):
        """∫_{Θ−1}^∞ y^{c1} e^{−c2 y} f∞_SR(y) dy."""
        x = c2 * self.y0
        return float(
            sum(
                weight * _upper(exponent + c1, x) / c2 ** (exponent + c1)
                for weight, exponent in zip(self.weights, self.exponents)
            )
        )

    # H terms --------------------------------------------------------------
    def h11(self):
        y0, lam_e, tau_d = self.y0, self.lam_e, self.tau_d
        total = 0.0
        for weight, exponent in zip(self.weights, self.exponents):
            inner = y0 ** (exponent + tau_d) / (tau_d * (exponent + tau_d))
            inner -= sum(
                upsilon_moment(exponent, tau_d + n, lam_e, y0) / (math.factorial(n) * lam_e ** tau_d)
                for n in range(self.tau_e)
            )
            total += weight * inner
        return self.c_d * total

    def h12(self):
        y0, lam_e, tau_d = self.y0, self.lam_e, self.tau_d
        inner = self.rf_cdf(y0) - self.c_d * sum(
            _lower(tau_d + n, lam_e * y0) / (math.factorial(n) * lam_e ** tau_d)
            for n in range(self.tau_e)
        )
        return (1.0 - self.fso_cdf(y0)) * inner

    def h13(self):
        y0, theta, lam_e = self.y0, self.theta, self.lam_e
        shift = math.exp(lam_e * y0 / theta)
        first = 0.0
        for n in range(self.tau_e):
            for t in range(n + 1):
                first += (
                    lam_e ** n * (-y0) ** (n - t)
                    / (math.factorial(t) * math.factorial(n - t) * theta ** n)
                    * self.psi1(t, lam_e / theta)
                )
        second = sum(lam_e ** n / math.factorial(n) * self.psi1(n, lam_e) for n in range(self.tau_e))
        return shift * first - second

    def h21(self, method="elementary"):
        y0, lam_e, tau_d = self.y0, self.lam_e, self.tau_d
        total = 0.0
        for weight, exponent in zip(self.weights, self.exponents):
            inner = y0 ** (exponent + tau_d) / (exponent * (exponent + tau_d))
            inner -= sum(
                upsilon_moment(tau_d, exponent + n, lam_e, y0, method)
                / (math.factorial(n) * lam_e ** exponent)
                for n in range(self.tau_e)
            )
            total += weight * inner
        return self.c_d * total

    def h22(self):
        y0, lam_e = self.y0, self.lam_e
        inner = 0.0
        for weight, exponent in zip(self.weights, self.exponents):
            inner += weight * (
                y0 ** exponent / exponent
                - sum(
                    _lower(exponent + n, lam_e * y0) / (math.factorial(n) * lam_e ** exponent)
                    for n in range(self.tau_e)
                )
            )
        return (1.0 - self.rf_cdf(y0)) * inner

    def h23(self):
        y0, theta, lam_e, tau_d = self.y0, self.theta, self.lam_e, self.tau_d
        scale = self.c_d / tau_d

        def damped(c1, c2):
            return self.psi2(c1, c2) - scale * self.psi2(c1 + tau_d, c2)

        first = 0.0
        for n in range(self.tau_e):
            for t in range(n + 1):
                first += (
                    lam_e ** n * (-y0) ** (n - t)
                    / (math.factorial(t) * math.factorial(n - t) * theta ** n)
                    * damped(t, lam_e / theta)
                )
        second = sum(lam_e ** n / math.factorial(n) * damped(n, lam_e) for n in range(self.tau_e))
        return math.exp(lam_e * y0 / theta) * first - second

    def varrho(self):
        lam_e, tau_e, tau_d = self.lam_e, self.tau_e, self.tau_d
        scale = self.c_d / tau_d
        log_gamma_e = special.gammaln(tau_e)

        def moment(power):
            return math.exp(special.gammaln(tau_e + power) - log_gamma_e) / lam_e ** power

        value = 1.0 - scale * moment(tau_d)
        for weight, exponent in zip(self.weights, self.exponents):
            value -= weight / exponent * moment(exponent)
            value += scale * weight / exponent * moment(exponent + tau_d)
        return value

    def evaluate(self):
        values = {}
        for name in TERM_NAMES + ("varrho",):
            if name != "varrho" and self.y0 == 0:
                values[name] = 0.0
                continue
            try:
                values[name] = float(getattr(self, name)())
            except SecrecyLabError as error:
                raise prefix_error(error, name) from error
        try:
            return assemble_breakdown(values, engine="asymptotic")
        except ProbabilityRangeError as error:
            raise OutsideAsymptoticRegimeError(
                f"power-law terms leave [0, 1] at Ω_RD = {self.omega_rd:.4g} ({error}); raise Ω_RD"
            ) from error


def psi1(c1, c2, scenario, omega_rd=None):
    return AsymptoticSop(scenario, omega_rd, check_regime=False).psi1(c1, c2)


def psi2(c1, c2, scenario, omega_rd=None):
    return AsymptoticSop(scenario, omega_rd, check_regime=False).psi2(c1, c2)


def asym_terms(scenario, omega_rd=None):
    """Asymptotic SOP breakdown at Ω_RD."""
    breakdown = AsymptoticSop(scenario, omega_rd).evaluate()
    logger.debug("asymptotic SOP %.6g at Ω_RD = %.4g", breakdown.sop, omega_rd or scenario.rf_d.omega)
    return breakdown


def asymptotic_curve(scenario, omega_rd_db_grid):
    """sop∞ along Ω_RD (dB); NaN where the regime guard refuses the point."""
    values = []
    for omega_db in omega_rd_db_grid:
        try:
            values.append(asym_terms(scenario, db_to_linear(float(omega_db))).sop)
        except OutsideAsymptoticRegimeError as error:
            logger.info("Ω_RD = %.1f dB skipped: %s", omega_db, error)
            values.append(math.nan)
    return np.array(values)


def empirical_diversity_order(omega_rd_db, sops):
    """Negative log-log slope of SOP against linear Ω_RD."""
    omegas = 10.0 ** (np.asarray(omega_rd_db, dtype=float) / 10.0)
    return -slope_loglog(omegas, sops)
