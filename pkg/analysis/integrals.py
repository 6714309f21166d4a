"""
Helper integrals G0..G3 over the FSO density on [0, Θ−1] and [Θ−1, ∞).

Every integral is returned as an Approx carrying an absolute error
estimate and the number of series terms spent on it. Finite-range
integrals use Meijer-G series; tail integrals use their Meijer-G closed
forms while β(Θ−1) is small and a Gauss-Laguerre rule anchored at Θ−1
once the closed forms would cancel.
"""

import logging
import math
import threading
from dataclasses import dataclass

import numpy as np
from numba import jit
from scipy import special

import config
from channel.fso import fso_cdf, fso_pdf
from specfun.meijer import meijer_g_family, meijer_g_values
from utils.errors import PrecisionNotReachedError, SeriesNotConvergedError, ValidationError

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SeriesPolicy:
    """Truncation rule shared by every infinite series."""

    rel_term_tol: float = config.SERIES_REL_TERM_TOL
    max_terms: int = config.SERIES_MAX_TERMS
    divergence_guard: float = config.SERIES_DIVERGENCE_GUARD
    quiet_terms: int = config.SERIES_QUIET_TERMS
    chunk: int = config.SERIES_CHUNK
    taylor_switch: float = config.G1_TAYLOR_SWITCH
    tail_switch: float = config.TAIL_SWITCH

    def __post_init__(self):
        if self.max_terms < 10:
            raise ValidationError(f"max_terms must be at least 10, got {self.max_terms}")
        if self.rel_term_tol <= 0 or self.divergence_guard <= 1:
            raise ValidationError("series tolerances must be positive and the guard above 1")
        if self.quiet_terms < 1 or self.chunk < 1:
            raise ValidationError("quiet_terms and chunk must be positive")
        if self.taylor_switch <= 0 or self.tail_switch <= 0:
            raise ValidationError("expansion switches must be positive")


@dataclass(frozen=True)
class Approx:
    """A value with an absolute error bound and a term count."""

    value: float
    error: float = 0.0
    terms: int = 0

    def __add__(self, other):
        other = _lift(other)
        return Approx(self.value + other.value, self.error + other.error, self.terms + other.terms)

    __radd__ = __add__

    def __sub__(self, other):
        other = _lift(other)
        return Approx(self.value - other.value, self.error + other.error, self.terms + other.terms)

    def __rsub__(self, other):
        return _lift(other) - self

    def __neg__(self):
        return Approx(-self.value, self.error, self.terms)

    def __mul__(self, other):
        if isinstance(other, Approx):
            return Approx(
                self.value * other.value,
                abs(self.value) * other.error + abs(other.value) * self.error,
                self.terms + other.terms,
            )
        return Approx(self.value * other, self.error * abs(other), self.terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (1.0 / other)

    def __float__(self):
        return float(self.value)


def _lift(value):
    return value if isinstance(value, Approx) else Approx(float(value))


def approx_sum(items):
    total = Approx(0.0)
    for item in items:
        total = total + item
    return total


def sum_series(block, count, policy, label, alternating=False):
    """Sum `count` series side by side.

    `block(active, start, length)` returns (terms, errors) of shape
    (len(active), length) for the series indices in `active`. A series
    stops once `quiet_terms` consecutive terms fall below
    rel_term_tol·|partial sum|. Alternating series also trip the
    divergence guard when a term outgrows the first one by
    `divergence_guard`.
    """
    partial = np.zeros(count)
    error = np.zeros(count)
    quiet = np.zeros(count, dtype=np.int64)
    reference = np.zeros(count)
    used = np.zeros(count, dtype=np.int64)
    guard = policy.divergence_guard if alternating else 0.0
    active = list(range(count))
    start = 0
    while active:
        if start >= policy.max_terms:
            index = active[0]
            raise SeriesNotConvergedError(
                f"{label}: series did not settle within {policy.max_terms} terms",
                partial_value=float(partial[index]),
                terms=start,
                series=label,
            )
        length = min(policy.chunk, policy.max_terms - start)
        terms, errors = block(np.asarray(active), start, length)
        remaining = []
        for row, index in enumerate(active):
            value, run, stop, ref, status = scan_terms(
                terms[row], partial[index], quiet[index], policy.rel_term_tol,
                policy.quiet_terms, reference[index], guard,
            )
            partial[index], quiet[index], reference[index] = value, run, ref
            error[index] += float(np.sum(errors[row, :stop]))
            used[index] = start + stop
            if status == 2:
                raise SeriesNotConvergedError(
                    f"{label}: divergence guard tripped at term {start + stop - 1} "
                    f"(growth beyond {policy.divergence_guard:g})",
                    partial_value=float(value),
                    terms=int(start + stop),
                    series=label,
                )
            if status == 1:
                error[index] += policy.quiet_terms * abs(terms[row, stop - 1])
            else:
                remaining.append(index)
        active = remaining
        start += length
    logger.debug("%s: %d series, terms used %s", label, count, used.tolist())
    return [Approx(float(partial[i]), float(error[i]), int(used[i])) for i in range(count)]


class FsoIntegrals:
    def __init__(self, fso, threshold, policy=None):
        """Initialize the integral helpers for one FSO hop and threshold Θ−1."""
        if threshold < 0:
            raise ValidationError("threshold Θ−1 must be non-negative")
        self.fso = fso
        self.y0 = float(threshold)
        self.policy = policy or SeriesPolicy()
        self._g1_cache = {}
        self._tail_cache = {}
        self._lock = threading.Lock()
        self._cdf = None

    # Building blocks ------------------------------------------------------
    def cdf_at_threshold(self):
        """F_SR(Θ−1) with its error estimate."""
        if self._cdf is None:
            if self.y0 == 0:
                self._cdf = Approx(0.0)
            else:
                a_row, b_row = self.fso.cdf_rows()
                value, error = meijer_g_values(
                    3 * self.fso.r, 1, a_row, b_row, [self.fso.rho * self.y0]
                )
                self._cdf = Approx(self.fso.I * value[0], self.fso.I * error[0])
        return self._cdf

    def survival_at_threshold(self):
        return 1.0 - self.cdf_at_threshold()

    # G1 -----------------------------------------------------------------
    def g1(self, z1, z2):
        """G1(z1, z2) = ∫_0^{Θ−1} x^{z1−1} e^{−z2 x} G^{3,0}_{1,3}[Bx^{1/r} | ...] dx."""
        return self.g1_many([(z1, z2)])[0]

    def g1_many(self, pairs):
        pairs = [(float(z1), float(z2)) for z1, z2 in pairs]
        for z1, z2 in pairs:
            if z1 < 0 or z2 < 0:
                raise ValidationError(f"G1 needs z1, z2 >= 0, got ({z1}, {z2})")
        with self._lock:
            missing = sorted({p for p in pairs if p not in self._g1_cache})
        if missing:
            computed = self._compute_g1(missing)
            with self._lock:
                self._g1_cache.update(zip(missing, computed))
        with self._lock:
            return [self._g1_cache[p] for p in pairs]

    def _compute_g1(self, pairs):
        if self.y0 == 0:
            return [Approx(0.0) for _ in pairs]
        results = [None] * len(pairs)
        groups = {"single": [], "taylor": [], "reflected": []}
        for index, (z1, z2) in enumerate(pairs):
            if z2 == 0:
                groups["single"].append(index)
            elif z2 * self.y0 <= self.policy.taylor_switch:
                groups["taylor"].append(index)
            else:
                groups["reflected"].append(index)
        if groups["single"]:
            rows = [pairs[i] for i in groups["single"]]
            terms, errors = self._g1_block(rows, np.zeros(1, dtype=int), reflected=False)
            for k, index in enumerate(groups["single"]):
                results[index] = Approx(float(terms[k, 0]), float(errors[k, 0]), 1)
        for kind in ("taylor", "reflected"):
            indices = groups[kind]
            if not indices:
                continue
            rows = [pairs[i] for i in indices]

            def block(active, start, length, rows=rows, reflected=(kind == "reflected")):
                return self._g1_block(
                    [rows[i] for i in active], np.arange(start, start + length), reflected
                )

            sums = sum_series(block, len(rows), self.policy, f"G1/{kind}", alternating=(kind == "taylor"))
            for index, value in zip(indices, sums):
                results[index] = value
        return results

    def _g1_block(self, rows, steps, reflected):
        """Terms s ∈ steps of the G1 series for each (z1, z2) row."""
        fso = self.fso
        r = fso.r
        count, length = len(rows), len(steps)
        z1 = np.repeat([row[0] for row in rows], length)
        z2 = np.repeat([row[1] for row in rows], length)
        s = np.tile(steps, count).astype(float)
        first = 1.0 - z1 if reflected else 1.0 - z1 - s
        a_rows = np.column_stack([first] + [np.full_like(s, k) for k in fso.K1])
        b_rows = np.column_stack([np.full_like(s, k) for k in fso.K2] + [-z1 - s])
        results = meijer_g_family(3 * r, 1, a_rows, b_rows, np.full_like(s, fso.rho * self.y0))
        values = np.array([res.value for res in results])
        errs = np.array([res.abs_error_estimate for res in results])

        log_y0 = math.log(self.y0)
        with np.errstate(divide="ignore"):
            log_coeff = math.log(fso.Xi) + (z1 + s) * log_y0 + s * np.log(z2)
        log_coeff = np.where(s == 0, math.log(fso.Xi) + z1 * log_y0, log_coeff)
        if reflected:
            log_coeff = log_coeff - z2 * self.y0
            sign = np.ones_like(s)
        else:
            log_coeff = log_coeff - special.gammaln(s + 1.0)
            sign = np.where(s % 2 == 0, 1.0, -1.0)
        coeff = sign * np.exp(log_coeff)
        terms = (coeff * values).reshape(count, length)
        errors = (np.abs(coeff) * errs).reshape(count, length)
        return terms, errors

    # G0 -----------------------------------------------------------------
    def g0(self, alpha, beta):
        """G0(α, β) = ∫_0^{Θ−1} Υ(α, βx) f_SR(x) dx for integer α ≥ 1."""
        alpha = _positive_integer(alpha, "G0")
        if beta < 0:
            raise ValidationError("G0 needs β >= 0")
        if self.y0 == 0 or beta == 0:
            return Approx(0.0)
        A, gamma_alpha = self.fso.A, math.gamma(alpha)
        if beta * self.y0 >= alpha:
            # finite sum: Υ(α, y) = Γ(α)(1 − e^{−y} Σ_{t<α} y^t/t!)
            pieces = self.g1_many([(0.0, 0.0)] + [(t, beta) for t in range(alpha)])
            partial = approx_sum(
                pieces[t + 1] * (beta ** t / math.factorial(t)) for t in range(alpha)
            )
            return (pieces[0] - partial) * (A * gamma_alpha)

        # Υ(α, y) = Γ(α) e^{−y} Σ_k y^{α+k}/Γ(α+k+1), all terms positive
        def block(active, start, length):
            ks = np.arange(start, start + length)
            pieces = self.g1_many([(alpha + k, beta) for k in ks])
            log_coeff = (alpha + ks) * math.log(beta) - special.gammaln(alpha + ks + 1.0)
            coeff = np.exp(log_coeff)
            terms = np.array([[c * p.value for c, p in zip(coeff, pieces)]])
            errors = np.array([[c * p.error for c, p in zip(coeff, pieces)]])
            return terms, errors

        (total,) = sum_series(block, 1, self.policy, f"G0({alpha})")
        return total * (A * gamma_alpha)

    # Full-range transforms ------------------------------------------------
    def upsilon_transform(self, alpha, beta):
        """A ∫_0^∞ x^{−1} Υ(α, βx) G^{3,0}_{1,3}[Bx^{1/r} | ...] dx."""
        fso = self.fso
        a_row = (1.0 - alpha, 1.0) + fso.K1
        b_row = fso.K2 + (0.0,)
        value, error = meijer_g_values(3 * fso.r + 1, 1, a_row, b_row, [fso.rho / beta])
        scale = fso.A * fso.Xi
        return Approx(scale * value[0], scale * error[0], 1)

    def exponential_transform(self, alpha, beta):
        """A ∫_0^∞ y^α e^{−βy} G^{3,0}_{1,3}[By^{1/r} | ...] dy."""
        fso = self.fso
        a_row = (-float(alpha),) + fso.K1
        value, error = meijer_g_values(3 * fso.r, 1, a_row, fso.K2, [fso.rho / beta])
        scale = fso.A * fso.Xi / beta ** (alpha + 1.0)
        return Approx(scale * value[0], scale * error[0], 1)

    # Tail integrals ---------------------------------------------------------
    def _uses_tail_rule(self, beta):
        return self.y0 > 0 and beta * self.y0 > self.policy.tail_switch

    def _tail_table(self, beta, nodes):
        key = (float(beta), nodes)
        with self._lock:
            cached = self._tail_cache.get(key)
        if cached is None:
            t, w = special.roots_laguerre(nodes)
            keep = w > 0
            t, w = t[keep], w[keep]
            y = self.y0 + t / beta
            density = np.asarray(fso_pdf(self.fso, y))
            survival = 1.0 - np.asarray(fso_cdf(self.fso, y))
            cached = (y, w, density, survival)
            with self._lock:
                self._tail_cache[key] = cached
        return cached

    def tail_moment(self, kind, power, beta, log_prefactor=0.0):
        """e^{c}·∫_{Θ−1}^∞ y^power e^{−βy} h(y) dy by Gauss-Laguerre rules of growing order.

        h is f_SR for kind "pdf" and 1 − F_SR for kind "survival"; c is `log_prefactor`.
        """
        if kind not in ("pdf", "survival"):
            raise ValidationError(f"unknown tail kind {kind!r}")
        scale = math.exp(log_prefactor - beta * self.y0) / beta
        previous = None
        for nodes in config.LAGUERRE_NODES:
            y, w, density, survival = self._tail_table(beta, nodes)
            h = density if kind == "pdf" else survival
            value = scale * float(np.sum(w * y ** power * h))
            if previous is not None:
                change = abs(value - previous)
                if change <= max(config.TAIL_REL_TOL * abs(value), 1e-300):
                    return Approx(value, change + 1e-12 * abs(value), nodes)
            previous = value
        raise PrecisionNotReachedError(
            f"Laguerre tail rule did not settle for β = {beta:.6g}, power {power}",
            best_estimate=previous,
            abs_error=change,
        )

    # G2 / G3 ------------------------------------------------------------
    def g2(self, alpha, beta):
        """G2(α, β) = ∫_{Θ−1}^∞ Υ(α, βx) f_SR(x) dx."""
        alpha = _positive_integer(alpha, "G2")
        if beta <= 0:
            raise ValidationError("G2 needs β > 0")
        if not self._uses_tail_rule(beta):
            return self.upsilon_transform(alpha, beta) - self.g0(alpha, beta)
        floor = special.gammainc(alpha, beta * self.y0) * math.gamma(alpha)
        return self.g2_excess(alpha, beta) + self.survival_at_threshold() * floor

    def g2_excess(self, alpha, beta, log_prefactor=0.0):
        """e^{c}·(G2(α, β) − Υ(α, β(Θ−1))·(1 − F_SR(Θ−1)))."""
        alpha = _positive_integer(alpha, "G2")
        if self._uses_tail_rule(beta):
            # Fubini: β^α ∫_{Θ−1}^∞ y^{α−1} e^{−βy} (1 − F_SR(y)) dy
            tail = self.tail_moment("survival", alpha - 1, beta, log_prefactor)
            return tail * beta ** alpha
        floor = special.gammainc(alpha, beta * self.y0) * math.gamma(alpha)
        excess = self.g2(alpha, beta) - self.survival_at_threshold() * floor
        return excess * math.exp(log_prefactor)

    def g3(self, alpha, beta, log_prefactor=0.0):
        """e^{c}·G3(α, β), G3 = A ∫_{Θ−1}^∞ y^α e^{−βy} G^{3,0}_{1,3}[By^{1/r} | ...] dy."""
        if beta <= 0:
            raise ValidationError("G3 needs β > 0")
        if alpha <= -1 and self.y0 == 0:
            raise ValidationError("G3 with α <= −1 diverges at Θ = 1")
        if self._uses_tail_rule(beta):
            return self.tail_moment("pdf", alpha + 1.0, beta, log_prefactor)
        value = self.exponential_transform(alpha, beta)
        if self.y0 > 0:
            value = value - self.g1(alpha + 1.0, beta) * self.fso.A
        return value * math.exp(log_prefactor)

    @property
    def cached_terms(self):
        with self._lock:
            return sum(item.terms for item in self._g1_cache.values())


def _positive_integer(alpha, label):
    if int(alpha) != alpha or alpha < 1:
        raise ValidationError(f"{label} needs a positive integer α, got {alpha}")
    return int(alpha)


# Convenience wrappers -------------------------------------------------------
def g0(alpha, beta, fso, threshold, policy=None):
    return FsoIntegrals(fso, threshold, policy).g0(alpha, beta)


def g1(z1, z2, fso, threshold, policy=None):
    return FsoIntegrals(fso, threshold, policy).g1(z1, z2)


def g2(alpha, beta, fso, threshold, policy=None):
    return FsoIntegrals(fso, threshold, policy).g2(alpha, beta)


def g3(alpha, beta, fso, threshold, policy=None):
    return FsoIntegrals(fso, threshold, policy).g3(alpha, beta)


@jit(nopython=True)
def scan_terms(terms, partial, quiet, rel_tol, quiet_needed, reference, guard):
    """Accumulate terms; status 1 = settled, 2 = guard tripped, 0 = needs more."""
    for i in range(terms.shape[0]):
        term = terms[i]
        partial += term
        magnitude = abs(term)
        if reference == 0.0 and magnitude > 0.0:
            reference = magnitude
        if guard > 0.0 and reference > 0.0 and magnitude > guard * reference:
            return partial, quiet, i + 1, reference, 2
        if magnitude <= rel_tol * abs(partial):
            quiet += 1
            if quiet >= quiet_needed:
                return partial, quiet, i + 1, reference, 1
        else:
            quiet = 0
    return partial, quiet, terms.shape[0], reference, 0
