"""
Exact secrecy outage probability of the DF relay link.

SOP = H1 + H2 + 1 − ϱ, where H1 (R-D bottleneck) and H2 (S-R bottleneck)
are the outage events with positive secrecy capacity and 1 − ϱ is the
probability of zero secrecy capacity.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

import config
from analysis.integrals import Approx, FsoIntegrals, SeriesPolicy, approx_sum, sum_series
from channel.fso import fso_cdf
from channel.rf import rf_cdf, rf_survival
from specfun.meijer import meijer_g_family
from utils.errors import ProbabilityRangeError, SecrecyLabError, ValidationError, prefix_error

logger = logging.getLogger(__name__)

TERM_NAMES = ("h11", "h12", "h13", "h21", "h22", "h23")


@dataclass(frozen=True)
class SopBreakdown:
    h11: float
    h12: float
    h13: float
    h21: float
    h22: float
    h23: float
    varrho: float
    h1: float
    h2: float
    sop: float
    series_terms_used: dict = field(default_factory=dict, compare=False)
    error_estimate: float = 0.0
    flags: tuple = ()
    engine: str = "analytic"

    @property
    def p_zero_secrecy(self):
        return 1.0 - self.varrho

    @property
    def total_series_terms(self):
        return int(sum(self.series_terms_used.values()))

    def terms(self):
        return {name: getattr(self, name) for name in TERM_NAMES + ("varrho",)}


def assemble_breakdown(values, errors=None, series_terms=None, engine="analytic", flags=()):
    """Check, clamp and assemble term values into a SopBreakdown."""
    errors = errors or {}
    flags = list(flags)
    checked = {}
    for name in TERM_NAMES + ("varrho",):
        checked[name] = _checked_probability(values[name], name, flags)
    h1 = checked["h11"] + checked["h12"] + checked["h13"]
    h2 = checked["h21"] + checked["h22"] + checked["h23"]
    sop = _checked_probability(h1 + h2 + 1.0 - checked["varrho"], "sop", flags)
    return SopBreakdown(
        h1=h1,
        h2=h2,
        sop=sop,
        series_terms_used=dict(series_terms or {}),
        error_estimate=float(sum(errors.values())),
        flags=tuple(flags),
        engine=engine,
        **checked,
    )


def _checked_probability(value, name, flags):
    slack = config.PROBABILITY_SLACK
    if not (-slack <= value <= 1.0 + slack):
        raise ProbabilityRangeError(f"{name} = {value:.12g} lies outside [0, 1] beyond {slack:g}")
    if value < 0.0 or value > 1.0:
        logger.warning("clamping %s = %.3e into [0, 1]", name, value)
        flags.append(f"clamped:{name}")
        return min(max(value, 0.0), 1.0)
    return float(value)


class ExactSop:
    def __init__(self, scenario, policy=None):
        """Initialize the closed-form evaluator for one scenario."""
        self.scenario = scenario
        self.policy = policy or SeriesPolicy()
        self.fso, self.rf_d, self.rf_e = scenario.deriveds()
        self.y0 = scenario.threshold
        self.theta = scenario.theta
        self.integrals = FsoIntegrals(self.fso, self.y0, self.policy)

        self.lam_d, self.tau_d = self.rf_d.lam, self.rf_d.tau
        self.lam_e, self.tau_e = self.rf_e.lam, self.rf_e.tau
        self.norm_d = self.lam_d ** self.tau_d / math.gamma(self.tau_d)

    # Shared pieces --------------------------------------------------------
    def _q_sum(self, lam, tau):
        """Q = ∫_0^{Θ−1} (1 − F_RF(y)) f_SR(y) dy for one RF hop."""
        pieces = self.integrals.g1_many([(n, lam) for n in range(tau)])
        return approx_sum(
            piece * (self.fso.A * lam ** n / math.factorial(n)) for n, piece in enumerate(pieces)
        )

    def _q_joint(self):
        beta = self.lam_d + self.lam_e
        pairs = [(n, p) for n in range(self.tau_e) for p in range(self.tau_d)]
        pieces = self.integrals.g1_many([(n + p, beta) for n, p in pairs])
        return approx_sum(
            piece * (self.fso.A * self.lam_e ** n * self.lam_d ** p / (math.factorial(n) * math.factorial(p)))
            for (n, p), piece in zip(pairs, pieces)
        )

    # H1 -----------------------------------------------------------------
    def h11(self):
        if self.y0 == 0:
            return Approx(0.0)
        beta = self.lam_d + self.lam_e
        first = self.integrals.g0(self.tau_d, self.lam_d) / math.gamma(self.tau_d)
        second = approx_sum(
            self.integrals.g0(self.tau_d + n, beta)
            * (self.lam_e ** n / (math.factorial(n) * beta ** (self.tau_d + n)))
            for n in range(self.tau_e)
        )
        return first - second * self.norm_d

    def h12(self):
        if self.y0 == 0:
            return Approx(0.0)
        beta = self.lam_d + self.lam_e
        inner = rf_cdf(self.rf_d, self.y0) - self.norm_d * sum(
            self.lam_e ** n
            * special.gammainc(self.tau_d + n, beta * self.y0)
            * math.gamma(self.tau_d + n)
            / (math.factorial(n) * beta ** (self.tau_d + n))
            for n in range(self.tau_e)
        )
        return self.integrals.survival_at_threshold() * inner

    def h13(self):
        if self.y0 == 0:
            return Approx(0.0)
        theta, y0 = self.theta, self.y0
        beta1 = self.lam_d + self.lam_e / theta
        beta2 = self.lam_d + self.lam_e
        shift = self.lam_e * y0 / theta
        first = []
        for n in range(self.tau_e):
            for t in range(n + 1):
                coeff = (
                    self.lam_e ** n
                    * (-y0) ** (n - t)
                    / (math.factorial(t) * math.factorial(n - t) * theta ** n)
                    * beta1 ** (-self.tau_d - t)
                )
                first.append(self.integrals.g2_excess(self.tau_d + t, beta1, shift) * coeff)
        second = [
            self.integrals.g2_excess(self.tau_d + n, beta2)
            * (self.lam_e ** n / (math.factorial(n) * beta2 ** (self.tau_d + n)))
            for n in range(self.tau_e)
        ]
        return (approx_sum(first) - approx_sum(second)) * self.norm_d

    # H2 -----------------------------------------------------------------
    def h21(self, method="auto"):
        if self.y0 == 0:
            return Approx(0.0)
        if method == "auto":
            small = max(self.lam_d, self.lam_e) * self.y0 <= self.policy.taylor_switch
            method = "series" if small else "reduction"
        if method == "series":
            return self._h21_series()
        if method == "reduction":
            return self._h21_reduction()
        raise ValidationError(f"unknown H21 method {method!r}")

    def _h21_reduction(self):
        """F_RD(Θ−1)(F_SR − Q_E) − (F_SR − Q_E − Q_D + Q_DE), all at Θ−1."""
        cdf_sr = self.integrals.cdf_at_threshold()
        q_e = self._q_sum(self.lam_e, self.tau_e)
        q_d = self._q_sum(self.lam_d, self.tau_d)
        q_de = self._q_joint()
        first = (cdf_sr - q_e) * rf_cdf(self.rf_d, self.y0)
        return first - (cdf_sr - q_e - q_d + q_de)

    def _h21_series(self):
        fso, y0 = self.fso, self.y0
        r = fso.r
        log_y0 = math.log(y0)
        argument = fso.rho * y0
        lam_d, lam_e, tau_d = self.lam_d, self.lam_e, self.tau_d

        def part_one(active, start, length):
            s = np.arange(start, start + length, dtype=float)
            upsilon = tau_d + s
            a_rows = np.column_stack([1.0 - upsilon, np.ones_like(s)] + [np.full_like(s, k) for k in fso.K1])
            b_rows = np.column_stack([np.full_like(s, k) for k in fso.K2] + [np.zeros_like(s), -upsilon])
            results = meijer_g_family(3 * r, 2, a_rows, b_rows, np.full_like(s, argument))
            log_coeff = s * math.log(lam_d) + upsilon * log_y0 - special.gammaln(s + 1.0)
            coeff = np.where(s % 2 == 0, 1.0, -1.0) * np.exp(log_coeff)
            values = np.array([res.value for res in results])
            errs = np.array([res.abs_error_estimate for res in results])
            return (coeff * values)[None, :], (np.abs(coeff) * errs)[None, :]

        (first,) = sum_series(part_one, 1, self.policy, "H21/first", alternating=True)
        first = first * (fso.I * self.norm_d)

        def part_two(active, start, length):
            n_rows, d_rows, s_rows, t_rows, owner = [], [], [], [], []
            for row, n in enumerate(active):
                for d in range(start, start + length):
                    for s in range(d + 1):
                        n_rows.append(n)
                        d_rows.append(d)
                        s_rows.append(s)
                        t_rows.append(d - s)
                        owner.append(row)
            n_arr = np.array(n_rows, dtype=float)
            s_arr = np.array(s_rows, dtype=float)
            t_arr = np.array(t_rows, dtype=float)
            upsilon = tau_d + n_arr + s_arr + t_arr
            a_rows = np.column_stack(
                [1.0 - n_arr - s_arr, 1.0 - upsilon] + [np.full_like(s_arr, k) for k in fso.K1]
            )
            b_rows = np.column_stack([np.full_like(s_arr, k) for k in fso.K2] + [-n_arr - s_arr, -upsilon])
            results = meijer_g_family(3 * r, 2, a_rows, b_rows, np.full_like(s_arr, argument))
            log_coeff = (
                (n_arr + s_arr) * math.log(lam_e)
                + t_arr * math.log(lam_d)
                + upsilon * log_y0
                - special.gammaln(n_arr + 1.0)
                - special.gammaln(s_arr + 1.0)
                - special.gammaln(t_arr + 1.0)
            )
            coeff = np.where((s_arr + t_arr) % 2 == 0, 1.0, -1.0) * np.exp(log_coeff)
            values = np.array([res.value for res in results])
            errs = np.array([res.abs_error_estimate for res in results])
            terms = np.zeros((len(active), length))
            errors = np.zeros((len(active), length))
            columns = np.array(d_rows) - start
            np.add.at(terms, (np.array(owner), columns), coeff * values)
            np.add.at(errors, (np.array(owner), columns), np.abs(coeff) * errs)
            return terms, errors

        second = approx_sum(sum_series(part_two, self.tau_e, self.policy, "H21/second", alternating=True))
        second = second * (fso.A * fso.Xi * self.norm_d)
        return first - second

    def h22(self):
        if self.y0 == 0:
            return Approx(0.0)
        inner = self.integrals.cdf_at_threshold() - self._q_sum(self.lam_e, self.tau_e)
        return inner * rf_survival(self.rf_d, self.y0)

    def h23(self):
        if self.y0 == 0:
            return Approx(0.0)
        theta, y0 = self.theta, self.y0
        beta1 = self.lam_d + self.lam_e / theta
        beta2 = self.lam_d + self.lam_e
        shift = self.lam_e * y0 / theta
        first, second = [], []
        for p in range(self.tau_d):
            for n in range(self.tau_e):
                for t in range(n + 1):
                    coeff = (
                        (-y0) ** (n - t)
                        * self.lam_d ** p
                        * self.lam_e ** n
                        / (math.factorial(p) * math.factorial(t) * math.factorial(n - t) * theta ** n)
                    )
                    first.append(self.integrals.g3(p + t - 1, beta1, shift) * coeff)
                coeff = self.lam_d ** p * self.lam_e ** n / (math.factorial(p) * math.factorial(n))
                second.append(self.integrals.g3(p + n - 1, beta2) * coeff)
        return approx_sum(first) - approx_sum(second)

    # ϱ ------------------------------------------------------------------
    def varrho(self):
        """Pr{γ_eq,E ≤ γ_eq,D}; does not depend on Rs."""
        fso = self.fso
        beta = self.lam_d + self.lam_e
        shapes = np.arange(self.tau_d) + self.tau_e
        count = shapes.shape[0]
        a_rows = np.column_stack(
            [1.0 - shapes.astype(float), np.ones(count)] + [np.full(count, k) for k in fso.K1]
        )
        b_rows = np.column_stack([np.full(count, k) for k in fso.K2] + [np.zeros(count)])
        results = meijer_g_family(3 * fso.r, 2, a_rows, b_rows, np.full(count, fso.rho / beta))
        scale = self.lam_e ** self.tau_e / math.gamma(self.tau_e)
        total = Approx(0.0)
        for p, (shape, result) in enumerate(zip(shapes, results)):
            weight = scale * self.lam_d ** p / (beta ** shape * math.factorial(p))
            bracket = Approx(math.gamma(shape)) - Approx(result.value, result.abs_error_estimate, 1) * fso.I
            total = total + bracket * weight
        return total

    # Assembly -----------------------------------------------------------
    def evaluate(self):
        values, errors, terms = {}, {}, {}
        for name in TERM_NAMES + ("varrho",):
            try:
                result = getattr(self, name)()
            except SecrecyLabError as error:
                raise prefix_error(error, name) from error
            values[name] = result.value
            errors[name] = result.error
            terms[name] = result.terms
        breakdown = assemble_breakdown(values, errors, terms, engine="analytic")
        logger.debug("exact SOP %.10g (error %.2e, flags %s)", breakdown.sop,
                     breakdown.error_estimate, breakdown.flags)
        return breakdown


def h11(scenario, policy=None):
    return ExactSop(scenario, policy).h11().value


def h12(scenario, policy=None):
    return ExactSop(scenario, policy).h12().value


def h13(scenario, policy=None):
    return ExactSop(scenario, policy).h13().value


def h21(scenario, policy=None, method="auto"):
    return ExactSop(scenario, policy).h21(method).value


def h22(scenario, policy=None):
    return ExactSop(scenario, policy).h22().value


def h23(scenario, policy=None):
    return ExactSop(scenario, policy).h23().value


def varrho(scenario, policy=None):
    return ExactSop(scenario, policy).varrho().value


def exact_sop(scenario, policy=None):
    """Closed-form SOP with its term breakdown."""
    return ExactSop(scenario, policy).evaluate()


def prob_positive_secrecy(scenario, policy=None):
    """P0 = ϱ − (H1 + H2) at Rs = 0."""
    collapsed = exact_sop(scenario.with_rs(0.0), policy)
    p0 = collapsed.varrho - (collapsed.h1 + collapsed.h2)
    if collapsed.h1 != 0.0 or collapsed.h2 != 0.0:
        raise ProbabilityRangeError("H terms must vanish at Rs = 0")
    return p0


def eq_d_cdf(scenario, gamma, form="expansion"):
    """CDF of γ_eq,D = min(γ_SR, γ_RD).

    "expansion" is F_RD + F_SR·(1 − F_RD) written with the Erlang sum and
    the G^{3r,1} distribution; "min_law" is 1 − (1 − F_SR)(1 − F_RD).
    """
    fso, rf_d, _ = scenario.deriveds()
    g = np.asarray(gamma, dtype=float)
    if form == "expansion":
        lam, tau = rf_d.lam, rf_d.tau
        erlang = np.exp(-lam * g) * sum((lam * g) ** p / math.factorial(p) for p in range(tau))
        value = 1.0 - erlang + np.asarray(fso_cdf(fso, g)) * erlang
    elif form == "min_law":
        value = 1.0 - (1.0 - np.asarray(fso_cdf(fso, g))) * (1.0 - np.asarray(rf_cdf(rf_d, g)))
    else:
        raise ValidationError(f"unknown form {form!r}")
    return float(value) if np.ndim(gamma) == 0 else value


def eq_e_cdf(scenario, gamma):
    """CDF of γ_eq,E = min(γ_SR, γ_RE)."""
    fso, _, rf_e = scenario.deriveds()
    g = np.asarray(gamma, dtype=float)
    value = 1.0 - (1.0 - np.asarray(fso_cdf(fso, g))) * (1.0 - np.asarray(rf_cdf(rf_e, g)))
    return float(value) if np.ndim(gamma) == 0 else value
