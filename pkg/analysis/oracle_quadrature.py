"""
Quadrature oracle for the SOP decomposition.

Every term is integrated directly from the link densities and
distributions, never through the closed forms of the analytic engine. The
FSO density still comes from the shared G-function engine; at r = 1 it can
be checked against the Bessel-K kernel on a spot grid.

Events, with X = γ_SR, D = γ_RD, E = γ_RE and y0 = Θ − 1:
    H11  ∫_0^{y0} f_X(x) ∫_0^x F_E f_D dy dx
    H12  (1 − F_X(y0)) ∫_0^{y0} F_E f_D dy
    H13  ∫_{y0}^∞ f_X(x) ∫_{y0}^x φ3 f_D dy dx = ∫_{y0}^∞ φ3 f_D (1 − F_X) dy
    H21  ∫_0^{y0} f_D(y) ∫_0^y F_E f_X dx dy
    H22  (1 − F_D(y0)) ∫_0^{y0} F_E f_X dx
    H23  ∫_{y0}^∞ f_D(y) ∫_{y0}^y φ3 f_X dx dy = ∫_{y0}^∞ φ3 f_X (1 − F_D) dx
    ϱ    1 − ∫_0^∞ F_{eq,D}(x) f_E(x) dx
with φ3(y) = F_E(y) − F_E((y − y0)/Θ).
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import integrate, special

import config
from analysis.asymptotic_sop import (
    asym_fso_cdf,
    asym_fso_pdf,
    asym_rf_cdf,
    asym_rf_pdf,
    asymptotic_constants,
    high_snr_scenario,
)
from analysis.exact_sop import TERM_NAMES, assemble_breakdown, eq_d_cdf
from analysis.quadrature import adaptive_integrate, nested_integral, tail_edges
from channel.fso import fso_cdf, fso_pdf, gamma_gamma_kernel_bessel
from channel.rf import rf_cdf, rf_pdf
from utils.errors import (
    NumericalError,
    QuadratureToleranceError,
    SecrecyLabError,
    ValidationError,
    prefix_error,
)

logger = logging.getLogger(__name__)

G_FUNCTIONS = ("G0", "G1", "G2", "G3", "psi1", "psi2")


@dataclass(frozen=True)
class QuadPolicy:
    abs_tol: float = config.QUAD_ABS_TOL
    rel_tol: float = config.QUAD_REL_TOL
    max_depth: int = config.QUAD_MAX_DEPTH
    tail_cutoff: float = config.QUAD_TAIL_COMPLEMENT

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValidationError("quadrature tolerances must be positive")
        if self.max_depth < 20:
            raise ValidationError(f"max_depth must be at least 20, got {self.max_depth}")
        if not (0.0 < self.tail_cutoff < 1.0):
            raise ValidationError("tail_cutoff must lie in (0, 1)")

    def halved(self):
        return replace(self, abs_tol=0.5 * self.abs_tol, rel_tol=0.5 * self.rel_tol)


@dataclass(frozen=True)
class LinkLaws:
    """Densities and distributions of the three hops, vectorised in γ."""

    sr_pdf: Callable
    sr_cdf: Callable
    rd_pdf: Callable
    rd_cdf: Callable
    re_pdf: Callable
    re_cdf: Callable
    sr_cutoff: float = math.inf
    rd_cutoff: float = math.inf
    re_cutoff: float = math.inf
    asymptotic: bool = False


def _survival_cutoff(survival, start, tail):
    x = start
    for _ in range(4000):
        if survival(x) < tail:
            return x
        x *= 2.0
    raise NumericalError(f"no tail cutoff below 1 − F = {tail:g}")


def _gamma_cutoff(rf, tail):
    return float(special.gammainccinv(rf.tau, tail) / rf.lam)


def exact_laws(scenario, policy=None):
    policy = policy or QuadPolicy()
    fso, rf_d, rf_e = scenario.deriveds()
    return LinkLaws(
        sr_pdf=lambda x: fso_pdf(fso, x),
        sr_cdf=lambda x: fso_cdf(fso, x),
        rd_pdf=lambda x: rf_pdf(rf_d, x),
        rd_cdf=lambda x: rf_cdf(rf_d, x),
        re_pdf=lambda x: rf_pdf(rf_e, x),
        re_cdf=lambda x: rf_cdf(rf_e, x),
        sr_cutoff=_survival_cutoff(lambda x: 1.0 - fso_cdf(fso, x), fso.omega_sr, policy.tail_cutoff),
        rd_cutoff=_gamma_cutoff(rf_d, policy.tail_cutoff),
        re_cutoff=_gamma_cutoff(rf_e, policy.tail_cutoff),
    )


def asymptotic_laws(scenario, omega_rd=None, policy=None):
    """Leading power laws for the FSO and R-D hops; the eavesdropper hop stays exact."""
    policy = policy or QuadPolicy()
    scaled = high_snr_scenario(scenario, omega_rd)
    omega_rd = scaled.rf_d.omega
    consts = asymptotic_constants(scaled)
    _, rf_d, rf_e = scaled.deriveds()
    return LinkLaws(
        sr_pdf=lambda x: asym_fso_pdf(consts, omega_rd, x),
        sr_cdf=lambda x: asym_fso_cdf(consts, omega_rd, x),
        rd_pdf=lambda x: asym_rf_pdf(rf_d, omega_rd, x),
        rd_cdf=lambda x: asym_rf_cdf(rf_d, omega_rd, x),
        re_pdf=lambda x: rf_pdf(rf_e, x),
        re_cdf=lambda x: rf_cdf(rf_e, x),
        re_cutoff=_gamma_cutoff(rf_e, policy.tail_cutoff),
        asymptotic=True,
    )


class QuadratureOracle:
    def __init__(self, scenario, policy=None, laws=None):
        """Initialize the oracle for one scenario and one set of link laws."""
        self.scenario = scenario
        self.policy = policy or QuadPolicy()
        self.laws = laws or exact_laws(scenario, self.policy)
        self.y0 = scenario.threshold
        self.theta = scenario.theta

    # Integration helpers ----------------------------------------------------
    def _head(self, fn):
        """∫_0^{y0} fn."""
        p = self.policy
        result = adaptive_integrate(fn, 0.0, self.y0, p.abs_tol, p.rel_tol, p.max_depth, grade_left=True)
        return result.value, result.abs_error

    def _tail(self, fn, upper, lower=None):
        """∫_{lower}^{upper} fn on log-spaced starting panels (lower defaults to y0)."""
        p = self.policy
        lower = self.y0 if lower is None else lower
        if not math.isfinite(upper):
            raise ValidationError("tail integral needs a finite cutoff")
        result = adaptive_integrate(
            fn, lower, upper, p.abs_tol, p.rel_tol, p.max_depth,
            breakpoints=tail_edges(lower, upper), grade_left=(lower == 0),
        )
        return result.value, result.abs_error + p.tail_cutoff

    def _quad(self, fn, lower, upper):
        """∫_{lower}^{upper} fn by scipy's QAGP, split at the log-spaced tail edges."""
        p = self.policy
        edges = tail_edges(lower, upper)
        interior = [float(x) for x in edges if lower < x < upper]
        value, error, info, *message = integrate.quad(
            lambda x: float(np.asarray(fn(np.array([x])), dtype=float)[0]),
            lower, upper, epsabs=p.abs_tol, epsrel=p.rel_tol,
            limit=max(config.QUAD_PANEL_LIMIT, len(interior) + 2),
            points=interior or None, full_output=1,
        )
        if not (math.isfinite(value) and math.isfinite(error)):
            raise NumericalError(f"integrand is not finite on [{lower:.4g}, {upper:.4g}]")
        target = max(p.abs_tol, p.rel_tol * abs(value))
        if message and error > target:
            raise QuadratureToleranceError(
                f"quad on [{lower:.4g}, {upper:.4g}] ended with error {error:.3g} > {target:.3g}: "
                f"{message[0].splitlines()[0]}",
                best_value=value,
                abs_error=error,
            )
        logger.debug("quad on [%.4g, %.4g]: %d evaluations", lower, upper, info["neval"])
        return value, error

    def _scalar_head(self, fn):
        """∫_0^{y0} fn through scipy quad."""
        return self._quad(fn, 0.0, self.y0)

    def _scalar_tail(self, fn, upper, lower=None):
        lower = self.y0 if lower is None else lower
        if not math.isfinite(upper):
            raise ValidationError("tail integral needs a finite cutoff")
        value, error = self._quad(fn, lower, upper)
        return value, error + self.policy.tail_cutoff

    def _nested_head(self, outer, inner):
        p = self.policy
        return nested_integral(outer, inner, 0.0, self.y0, p.abs_tol, p.rel_tol, p.max_depth, grade_left=True)

    def _nested_tail(self, outer, inner, upper):
        p = self.policy
        value, error = nested_integral(
            outer, inner, self.y0, upper, p.abs_tol, p.rel_tol, p.max_depth,
            breakpoints=tail_edges(self.y0, upper),
        )
        return value, error + p.tail_cutoff

    def _exp_cutoff(self, power, rate):
        """Point beyond which y^power e^{-rate y} has dropped by the tail cutoff."""
        start = max(self.y0, 1e-300)
        peak_at = max(power / rate, start) if power > 0 else start
        peak = power * math.log(peak_at) - rate * peak_at
        x = max(peak_at, 1.0 / rate)
        while power * math.log(x) - rate * x > peak + math.log(self.policy.tail_cutoff) - 10.0:
            x *= 2.0
        return x

    def phi3(self, y):
        y = np.asarray(y, dtype=float)
        shifted = np.maximum((y - self.y0) / self.theta, 0.0)
        return self.laws.re_cdf(y) - self.laws.re_cdf(shifted)

    def _phi3_cutoff(self):
        return self.y0 + self.theta * self.laws.re_cutoff

    def _choose_form(self, form):
        if form == "auto":
            return "reordered" if self.laws.asymptotic else "nested"
        if form not in ("nested", "reordered"):
            raise ValidationError(f"unknown integration form {form!r}")
        if form == "nested" and self.laws.asymptotic:
            raise ValidationError("power-law densities are not integrable on the nested tail range")
        return form

    # H terms ---------------------------------------------------------------
    def h11(self):
        laws = self.laws
        return self._nested_head(laws.sr_pdf, lambda y: laws.re_cdf(y) * laws.rd_pdf(y))

    def h12(self):
        laws = self.laws
        value, error = self._head(lambda y: laws.re_cdf(y) * laws.rd_pdf(y))
        survival = 1.0 - laws.sr_cdf(self.y0)
        return survival * value, abs(survival) * error

    def h13(self, form="auto"):
        laws = self.laws
        if self._choose_form(form) == "nested":
            return self._nested_tail(laws.sr_pdf, lambda y: self.phi3(y) * laws.rd_pdf(y), laws.sr_cutoff)
        upper = min(laws.rd_cutoff, self._phi3_cutoff())
        return self._tail(lambda y: self.phi3(y) * laws.rd_pdf(y) * (1.0 - laws.sr_cdf(y)), upper)

    def h21(self):
        laws = self.laws
        return self._nested_head(laws.rd_pdf, lambda x: laws.re_cdf(x) * laws.sr_pdf(x))

    def h22(self):
        laws = self.laws
        value, error = self._head(lambda x: laws.re_cdf(x) * laws.sr_pdf(x))
        survival = 1.0 - laws.rd_cdf(self.y0)
        return survival * value, abs(survival) * error

    def h23(self, form="auto"):
        laws = self.laws
        if self._choose_form(form) == "nested":
            return self._nested_tail(laws.rd_pdf, lambda x: self.phi3(x) * laws.sr_pdf(x), laws.rd_cutoff)
        upper = min(laws.sr_cutoff, self._phi3_cutoff())
        return self._tail(lambda x: self.phi3(x) * laws.sr_pdf(x) * (1.0 - laws.rd_cdf(x)), upper)

    def h_term(self, name, form="auto"):
        name = name.lower()
        if name not in TERM_NAMES:
            raise ValidationError(f"unknown term {name!r}; expected one of {', '.join(TERM_NAMES)}")
        if self.y0 == 0:
            return 0.0, 0.0
        method = getattr(self, name)
        return method(form) if name in ("h13", "h23") else method()

    def varrho(self, form="min_law"):
        laws = self.laws
        if form == "min_law":
            def eq_cdf(x):
                return 1.0 - (1.0 - laws.sr_cdf(x)) * (1.0 - laws.rd_cdf(x))
        elif form == "expansion":
            if laws.asymptotic:
                raise ValidationError("the expansion form uses the exact distributions")
            def eq_cdf(x):
                return eq_d_cdf(self.scenario, x, form="expansion")
        else:
            raise ValidationError(f"unknown form {form!r}")
        value, error = self._tail(lambda x: eq_cdf(x) * laws.re_pdf(x), laws.re_cutoff, lower=0.0)
        return 1.0 - value, error

    # Helper integrals --------------------------------------------------------
    def g(self, name, *args):
        if name not in G_FUNCTIONS:
            raise ValidationError(f"unknown function {name!r}; expected one of {', '.join(G_FUNCTIONS)}")
        if len(args) != 2:
            raise ValidationError(f"{name} takes two arguments, got {len(args)}")
        first, second = (float(v) for v in args)
        if second < 0:
            raise ValidationError(f"{name} needs a non-negative rate, got {second}")
        return getattr(self, f"_{name.lower()}")(first, second)

    def _exact_only(self, name):
        if self.laws.asymptotic:
            raise ValidationError(f"{name} is defined on the exact FSO density")

    def _g0(self, alpha, beta):
        self._exact_only("G0")
        if self.y0 == 0:
            return 0.0, 0.0
        pdf = self.laws.sr_pdf
        return self._scalar_head(lambda x: special.gammainc(alpha, beta * x) * special.gamma(alpha) * pdf(x))

    def _g1(self, z1, z2):
        self._exact_only("G1")
        if self.y0 == 0:
            return 0.0, 0.0
        scale = 1.0 / self.scenario.fso_derived.A
        value, error = self._scalar_head(lambda x: x ** z1 * np.exp(-z2 * x) * self.laws.sr_pdf(x))
        return value * scale, error * scale

    def _g2(self, alpha, beta):
        self._exact_only("G2")
        pdf = self.laws.sr_pdf
        return self._scalar_tail(
            lambda x: special.gammainc(alpha, beta * x) * special.gamma(alpha) * pdf(x),
            self.laws.sr_cutoff, lower=self.y0,
        )

    def _g3(self, alpha, beta):
        self._exact_only("G3")
        if not beta > 0:
            raise ValidationError("G3 needs a positive rate")
        upper = min(self.laws.sr_cutoff, self._exp_cutoff(alpha + 1.0, beta))
        pdf = self.laws.sr_pdf
        return self._scalar_tail(lambda y: y ** (alpha + 1.0) * np.exp(-beta * y) * pdf(y), upper)

    def _psi1(self, c1, c2):
        laws = self.laws
        upper = min(laws.rd_cutoff, self._exp_cutoff(c1 + self.scenario.rf_d_derived.tau, c2))
        return self._scalar_tail(
            lambda y: y ** c1 * np.exp(-c2 * y) * laws.rd_pdf(y) * (1.0 - laws.sr_cdf(y)), upper
        )

    def _psi2(self, c1, c2):
        laws = self.laws
        upper = min(laws.sr_cutoff, self._exp_cutoff(c1 + 1.0, c2))
        return self._scalar_tail(lambda y: y ** c1 * np.exp(-c2 * y) * laws.sr_pdf(y), upper)

    # Assembly ----------------------------------------------------------------
    def evaluate(self):
        values, errors = {}, {}
        for name in TERM_NAMES:
            try:
                values[name], errors[name] = self.h_term(name)
            except SecrecyLabError as error:
                raise prefix_error(error, name) from error
        try:
            values["varrho"], errors["varrho"] = self.varrho()
        except SecrecyLabError as error:
            raise prefix_error(error, "varrho") from error
        engine = "oracle_asymptotic" if self.laws.asymptotic else "oracle"
        breakdown = assemble_breakdown(values, errors, engine=engine)
        logger.debug("oracle SOP %.10g ± %.2e", breakdown.sop, breakdown.error_estimate)
        return breakdown


def oracle_h_term(term_id, scenario, policy=None, form="auto", laws=None):
    """Value of one H term by direct quadrature."""
    value, _ = QuadratureOracle(scenario, policy, laws).h_term(term_id, form)
    return value


def oracle_varrho(scenario, policy=None, form="min_law", laws=None):
    value, _ = QuadratureOracle(scenario, policy, laws).varrho(form)
    return value


def oracle_g(fn_id, args, scenario, policy=None, laws=None):
    """G0..G3 (exact density) or ψ1/ψ2 (any laws) by direct quadrature."""
    value, _ = QuadratureOracle(scenario, policy, laws).g(fn_id, *args)
    return value


def oracle_sop(scenario, policy=None, laws=None):
    return QuadratureOracle(scenario, policy, laws).evaluate()


def bessel_kernel_check(scenario, gammas):
    """Largest relative gap between the G-function density and the Bessel-K kernel (r = 1)."""
    fso = scenario.fso_derived
    if fso.r != 1:
        raise ValidationError("the Bessel-K kernel applies to heterodyne detection only")
    p = fso.params
    worst = 0.0
    for gamma in np.asarray(gammas, dtype=float).reshape(-1):
        kernel = gamma_gamma_kernel_bessel(p.xi, p.a, p.b, fso.B * gamma)
        reference = fso.A * kernel / gamma
        worst = max(worst, abs(fso_pdf(fso, gamma) - reference) / abs(reference))
    return worst
