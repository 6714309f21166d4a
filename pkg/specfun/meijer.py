"""
Meijer G-function evaluation for real parameters and positive arguments.

The primary method integrates the Mellin-Barnes representation

    G^{m,n}_{p,q}[z | a; b] = 1/(2πi) ∫ Π_{j≤m} Γ(b_j - s) Π_{j≤n} Γ(1 - a_j + s)
                                    / (Π_{j>m} Γ(1 - b_j + s) Π_{j>n} Γ(a_j - s)) z^s ds

along a vertical line that separates the poles of Γ(b_j - s) from those of
Γ(1 - a_j + s). For real data the integrand is conjugate-symmetric, so only
the upper half line is integrated with the trapezoidal rule, which
converges geometrically for this analytic, exponentially decaying integrand.
Families of functions that share their orders are evaluated on one node
grid so that a whole series costs a single vectorised pass.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

import config
from utils.errors import (
    PrecisionNotReachedError,
    UnseparableContourError,
    ValidationError,
    NumericalError,
)
from utils.math_utils import quiet_run_end

logger = logging.getLogger(__name__)

CONTOUR_QUADRATURE = "contour_quadrature"
RESIDUE_SERIES = "residue_series"
IDENTITY_SHORTCUT = "identity_shortcut"
METHODS = (CONTOUR_QUADRATURE, RESIDUE_SERIES, IDENTITY_SHORTCUT)

_EPS = np.finfo(float).eps
_CHUNK = 512
_ROW_BLOCK = 256


@dataclass(frozen=True)
class MeijerGSpec:
    """Orders, parameter rows and argument of one G-function."""

    m: int
    n: int
    p: int
    q: int
    a_params: tuple
    b_params: tuple
    argument: float

    def __post_init__(self):
        object.__setattr__(self, "a_params", tuple(float(v) for v in self.a_params))
        object.__setattr__(self, "b_params", tuple(float(v) for v in self.b_params))
        object.__setattr__(self, "argument", float(self.argument))
        if not (0 <= self.m <= self.q and 0 <= self.n <= self.p):
            raise ValidationError(
                f"orders must satisfy 0 <= m <= q and 0 <= n <= p, got "
                f"(m, n, p, q) = ({self.m}, {self.n}, {self.p}, {self.q})"
            )
        if self.p > config.MEIJER_MAX_ORDER or self.q > config.MEIJER_MAX_ORDER:
            raise ValidationError(f"p and q are limited to {config.MEIJER_MAX_ORDER}")
        if len(self.a_params) != self.p or len(self.b_params) != self.q:
            raise ValidationError("parameter rows must have lengths p and q")
        if not np.all(np.isfinite(self.a_params + self.b_params)):
            raise ValidationError("parameters must be finite")
        if not (self.argument > 0 and math.isfinite(self.argument)):
            raise ValidationError(f"argument must be positive and finite, got {self.argument}")

    @classmethod
    def build(cls, m, n, a_params, b_params, argument):
        """Create a spec, inferring p and q from the parameter rows."""
        return cls(m, n, len(a_params), len(b_params), tuple(a_params), tuple(b_params), argument)

    @classmethod
    def from_dict(cls, data):
        try:
            a_params = tuple(data["a_params"])
            b_params = tuple(data["b_params"])
            return cls(
                int(data["m"]),
                int(data["n"]),
                int(data.get("p", len(a_params))),
                int(data.get("q", len(b_params))),
                a_params,
                b_params,
                float(data["argument"]),
            )
        except (KeyError, TypeError) as error:
            raise ValidationError(f"malformed Meijer G description: {error}") from error

    def to_dict(self):
        return {
            "m": self.m,
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "a_params": list(self.a_params),
            "b_params": list(self.b_params),
            "argument": self.argument,
        }


@dataclass(frozen=True)
class EvalResult:
    """Value of a G-function with its absolute error estimate."""

    value: float
    abs_error_estimate: float
    method_used: str
    refinements: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.method_used not in METHODS:
            raise ValidationError(f"unknown method {self.method_used!r}")
        if not (math.isfinite(self.value) and math.isfinite(self.abs_error_estimate)):
            raise NumericalError(
                f"non-finite G-function result ({self.value}, {self.abs_error_estimate})"
            )
        if self.abs_error_estimate < 0:
            raise NumericalError("negative error estimate")


@dataclass(frozen=True)
class ContourPolicy:
    """Tolerances and placement rule of the contour integrator."""

    rel_tol: float = config.MEIJER_REL_TOL
    abs_tol: float = config.MEIJER_ABS_TOL
    truncation_ratio: float = config.MEIJER_TRUNCATION_RATIO
    quiet_nodes: int = config.MEIJER_QUIET_NODES
    min_pole_gap: float = config.MEIJER_MIN_POLE_GAP
    min_halvings: int = config.MEIJER_MIN_HALVINGS
    max_halvings: int = config.MEIJER_MAX_HALVINGS
    max_height: float = config.MEIJER_MAX_CONTOUR_HEIGHT
    placement: str = "saddle"

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.truncation_ratio <= 0:
            raise ValidationError("contour tolerances must be positive")
        if self.placement not in ("saddle", "midpoint"):
            raise ValidationError(f"unknown placement rule {self.placement!r}")
        if self.max_halvings < self.min_halvings:
            raise ValidationError("max_halvings must not be below min_halvings")


DEFAULT_POLICY = ContourPolicy()


def contour_strip(m, n, a_params, b_params):
    """Open interval (left, right) in which a separating line Re s = c may lie."""
    left = max((a - 1.0 for a in a_params[:n]), default=-math.inf)
    right = min(b_params[:m], default=math.inf)
    return left, right


class MellinBarnesContour:
    """Trapezoidal integration of Mellin-Barnes integrands along vertical lines."""

    def __init__(self, policy=None):
        self.policy = policy or DEFAULT_POLICY

    def evaluate(self, m, n, a_rows, b_rows, arguments):
        """Evaluate a family of G-functions sharing (m, n, p, q).

        `a_rows` has shape (K, p), `b_rows` (K, q) and `arguments` (K,).
        Returns a list of K EvalResult objects.
        """
        a_rows = np.asarray(a_rows, dtype=float)
        b_rows = np.asarray(b_rows, dtype=float)
        arguments = np.asarray(arguments, dtype=float).reshape(-1)
        rows = arguments.shape[0]
        a_rows = a_rows.reshape(rows, a_rows.size // max(rows, 1))
        b_rows = b_rows.reshape(rows, b_rows.size // max(rows, 1))
        if np.any(~(arguments > 0)) or np.any(~np.isfinite(arguments)):
            raise ValidationError("G-function arguments must be positive and finite")
        if rows > _ROW_BLOCK:
            order = np.argsort(arguments)
            results = [None] * rows
            for start in range(0, rows, _ROW_BLOCK):
                block = order[start:start + _ROW_BLOCK]
                for index, result in zip(
                    block, self.evaluate(m, n, a_rows[block], b_rows[block], arguments[block])
                ):
                    results[index] = result
            return results
        log_z = np.log(arguments)
        p = a_rows.shape[1]
        q = b_rows.shape[1]
        if m + n - 0.5 * (p + q) <= 0:
            raise ValidationError(
                f"vertical-line integral of G^{{{m},{n}}}_{{{p},{q}}} does not converge "
                "(need m + n > (p + q)/2)"
            )

        shape = _IntegrandShape(m, n, a_rows, b_rows, log_z)
        abscissa = self._place(shape)
        height, step = self._truncate(shape, abscissa)
        return self._integrate(shape, abscissa, height, step)

    # Placement ------------------------------------------------------------
    def _place(self, shape):
        policy = self.policy
        left = np.array(
            [max(row[: shape.n] - 1.0, default=-math.inf) for row in shape.a_rows]
        ) if shape.n else np.full(shape.rows, -math.inf)
        right = np.array(
            [min(row[: shape.m], default=math.inf) for row in shape.b_rows]
        ) if shape.m else np.full(shape.rows, math.inf)
        gap = right - left
        if np.any(gap < policy.min_pole_gap):
            worst = int(np.argmin(gap))
            raise UnseparableContourError(
                f"pole families overlap: left bound {left[worst]:.6g}, right bound "
                f"{right[worst]:.6g} (gap {gap[worst]:.3g} < {policy.min_pole_gap:g})"
            )

        bounded = np.isfinite(left) & np.isfinite(right)
        both_open = ~np.isfinite(left) & ~np.isfinite(right)
        # np.where evaluates every branch; inf − inf on one-sided rows is discarded
        with np.errstate(invalid="ignore"):
            lower = np.where(
                bounded,
                left + config.MEIJER_POLE_MARGIN * gap,
                np.where(np.isfinite(left), left + 0.25, right - config.MEIJER_ONE_SIDED_SEARCH),
            )
            upper = np.where(
                bounded,
                right - config.MEIJER_POLE_MARGIN * gap,
                np.where(np.isfinite(right), right - 0.25, left + config.MEIJER_ONE_SIDED_SEARCH),
            )
            lower = np.where(both_open, -0.5 * config.MEIJER_ONE_SIDED_SEARCH, lower)
            upper = np.where(both_open, 0.5 * config.MEIJER_ONE_SIDED_SEARCH, upper)
            midpoint = np.where(bounded, 0.5 * (left + right), 0.5 * (lower + upper))

        if policy.placement == "midpoint" and np.all(bounded):
            return midpoint

        fractions = np.linspace(0.0, 1.0, 81)
        candidates = lower[:, None] + (upper - lower)[:, None] * fractions[None, :]
        magnitude = shape.real_log_magnitude(candidates)
        magnitude = np.where(np.isfinite(magnitude), magnitude, np.inf)
        best = np.argmin(magnitude, axis=1)
        chosen = candidates[np.arange(shape.rows), best]
        chosen = np.where(np.isfinite(magnitude.min(axis=1)), chosen, midpoint)
        logger.debug("contour abscissae %s within strips (%s, %s)", chosen, left, right)
        return chosen

    # Truncation -----------------------------------------------------------
    def _truncate(self, shape, abscissa):
        policy = self.policy
        spread = float(np.max(np.abs(shape.log_z))) if shape.rows else 0.0
        step = min(0.5, 4.0 / (1.0 + spread))
        log_ratio = math.log(policy.truncation_ratio)
        magnitudes = []
        start = 0
        while True:
            t = step * np.arange(start, start + _CHUNK)
            magnitudes.append(shape.log_integrand(abscissa, t).real)
            start += _CHUNK
            log_mag = np.concatenate(magnitudes, axis=1)
            running_max = np.max(np.where(np.isfinite(log_mag), log_mag, -np.inf), axis=1)
            ends = []
            for row in range(shape.rows):
                relative = np.nan_to_num(log_mag[row] - running_max[row], nan=-np.inf)
                ends.append(quiet_run_end(relative, log_ratio, policy.quiet_nodes))
            if all(end >= 0 for end in ends):
                height = step * max(ends)
                logger.debug("contour truncated at height %.4g with step %.3g", height, step)
                return height, step
            if start * step > policy.max_height:
                raise PrecisionNotReachedError(
                    f"integrand did not decay below the truncation ratio within height "
                    f"{policy.max_height:g}",
                    best_estimate=math.nan,
                    abs_error=math.inf,
                )

    # Integration ----------------------------------------------------------
    def _integrate(self, shape, abscissa, height, step):
        policy = self.policy
        count = int(math.ceil(height / step))
        t = step * np.arange(count + 1)
        values_f = np.exp(shape.log_integrand(abscissa, t))
        weights = np.ones(count + 1)
        weights[0] = 0.5
        real_sum = (values_f.real * weights).sum(axis=1)
        abs_sum = (np.abs(values_f) * weights).sum(axis=1)
        estimate = step / math.pi * real_sum
        history = [[(step, float(v), math.inf)] for v in estimate]
        converged = np.zeros(shape.rows, dtype=bool)
        error = np.full(shape.rows, math.inf)

        for level in range(1, policy.max_halvings + 1):
            step *= 0.5
            mids = step * (2 * np.arange(count) + 1)
            mid_f = np.exp(shape.log_integrand(abscissa, mids))
            real_sum = real_sum + mid_f.real.sum(axis=1)
            abs_sum = abs_sum + np.abs(mid_f).sum(axis=1)
            count *= 2
            refined = step / math.pi * real_sum
            noise = 16.0 * _EPS * step / math.pi * abs_sum
            difference = np.abs(refined - estimate)
            error = difference + noise
            target = np.maximum(policy.rel_tol * np.abs(refined), policy.abs_tol)
            converged = (difference <= target) | (difference <= 10.0 * noise)
            estimate = refined
            for row in range(shape.rows):
                history[row].append((step, float(refined[row]), float(error[row])))
            if level >= policy.min_halvings and np.all(converged):
                break
        else:
            worst = int(np.argmax(np.where(converged, 0.0, error)))
            raise PrecisionNotReachedError(
                f"contour quadrature stopped at step {step:.3g} with error "
                f"{error[worst]:.3g} (value {estimate[worst]:.12g})",
                best_estimate=float(estimate[worst]),
                abs_error=float(error[worst]),
            )

        return [
            EvalResult(float(estimate[row]), float(error[row]), CONTOUR_QUADRATURE, tuple(history[row]))
            for row in range(shape.rows)
        ]


class _IntegrandShape:
    """Parameter rows of a G-family and its log-integrand."""

    def __init__(self, m, n, a_rows, b_rows, log_z):
        self.m = m
        self.n = n
        self.a_rows = a_rows
        self.b_rows = b_rows
        self.log_z = log_z
        self.rows = log_z.shape[0]

    def log_integrand(self, abscissa, t):
        s = abscissa[:, None] + 1j * np.asarray(t)[None, :]
        total = s * self.log_z[:, None]
        for j in range(self.b_rows.shape[1]):
            b = self.b_rows[:, j, None]
            if j < self.m:
                total = total + special.loggamma(b - s)
            else:
                total = total - special.loggamma(1.0 - b + s)
        for j in range(self.a_rows.shape[1]):
            a = self.a_rows[:, j, None]
            if j < self.n:
                total = total + special.loggamma(1.0 - a + s)
            else:
                total = total - special.loggamma(a - s)
        return total

    def real_log_magnitude(self, c):
        total = c * self.log_z[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            for j in range(self.b_rows.shape[1]):
                b = self.b_rows[:, j, None]
                if j < self.m:
                    total = total + special.gammaln(b - c)
                else:
                    total = total - special.gammaln(1.0 - b + c)
            for j in range(self.a_rows.shape[1]):
                a = self.a_rows[:, j, None]
                if j < self.n:
                    total = total + special.gammaln(1.0 - a + c)
                else:
                    total = total - special.gammaln(a - c)
        return total


_DEFAULT_CONTOUR = MellinBarnesContour()


def _contour(policy):
    return _DEFAULT_CONTOUR if policy is None else MellinBarnesContour(policy)


def meijer_g(spec, method="auto", policy=None):
    """Evaluate one G-function.

    `method` is "auto" (identity shortcut when one applies, otherwise the
    contour), "contour", "residue" or "identity".
    """
    if method in ("auto", "identity"):
        shortcut = identity_shortcut(spec)
        if shortcut is not None:
            return shortcut
        if method == "identity":
            raise ValidationError("no identity shortcut matches this G-function")
    if method == "residue":
        return residue_series(spec)
    if method not in ("auto", "contour"):
        raise ValidationError(f"unknown evaluation method {method!r}")
    return _contour(policy).evaluate(
        spec.m, spec.n, [spec.a_params], [spec.b_params], [spec.argument]
    )[0]


def meijer_g_family(m, n, a_rows, b_rows, arguments, policy=None):
    """Evaluate several G-functions sharing their orders on one node grid."""
    return _contour(policy).evaluate(m, n, a_rows, b_rows, arguments)


def meijer_g_values(m, n, a_params, b_params, arguments, policy=None):
    """Values and error estimates of one parameter set at many arguments."""
    arguments = np.asarray(arguments, dtype=float).reshape(-1)
    if np.any(~(arguments > 0)):
        raise ValidationError("G-function arguments must be positive")
    rows = arguments.shape[0]
    a_rows = np.tile(np.asarray(a_params, dtype=float), (rows, 1))
    b_rows = np.tile(np.asarray(b_params, dtype=float), (rows, 1))
    results = _contour(policy).evaluate(m, n, a_rows, b_rows, arguments)
    values = np.array([r.value for r in results])
    errors = np.array([r.abs_error_estimate for r in results])
    return values, errors


# Residue series -----------------------------------------------------------
def residue_series_applies(spec, min_gap=config.MEIJER_RESIDUE_GAP):
    """True when the right-pole residue sum is a safe cross-check."""
    if spec.m == 0:
        return False
    if spec.p > spec.q or (spec.p == spec.q and spec.argument >= 1.0):
        return False
    left, right = contour_strip(spec.m, spec.n, spec.a_params, spec.b_params)
    if right - left < config.MEIJER_MIN_POLE_GAP:
        return False
    poles = spec.b_params[: spec.m]
    for i, first in enumerate(poles):
        for second in poles[i + 1:]:
            difference = first - second
            if abs(difference - round(difference)) <= min_gap:
                return False
    return True


def residue_series(spec, max_terms=config.MEIJER_RESIDUE_MAX_TERMS):
    """Sum the residues at the simple poles s = b_h + k, h ≤ m."""
    if not residue_series_applies(spec):
        raise ValidationError("residue series needs simple, well separated b-row poles")
    a = np.asarray(spec.a_params)
    b = np.asarray(spec.b_params)
    k = np.arange(max_terms, dtype=float)
    log_z = math.log(spec.argument)
    total = 0.0
    magnitude = 0.0
    tail = 0.0
    for h in range(spec.m):
        bh = b[h]
        log_term = (bh + k) * log_z - special.gammaln(k + 1.0)
        sign = np.where(k % 2 == 0, 1.0, -1.0)
        zero = np.zeros_like(k, dtype=bool)
        for j in range(spec.m):
            if j != h:
                arg = b[j] - bh - k
                log_term += special.gammaln(arg)
                sign *= special.gammasgn(arg)
        for j in range(spec.n):
            arg = 1.0 - a[j] + bh + k
            log_term += special.gammaln(arg)
            sign *= special.gammasgn(arg)
        for arg in [1.0 - b[j] + bh + k for j in range(spec.m, spec.q)] + [
            a[j] - bh - k for j in range(spec.n, spec.p)
        ]:
            pole = (arg <= 0) & (np.abs(arg - np.round(arg)) < 1e-14)
            zero |= pole
            with np.errstate(divide="ignore", invalid="ignore"):
                log_term -= np.where(pole, 0.0, special.gammaln(arg))
                sign *= np.where(pole, 1.0, special.gammasgn(arg))
        terms = np.where(zero, 0.0, sign * np.exp(log_term))
        total += float(np.sum(terms))
        magnitude += float(np.sum(np.abs(terms)))
        tail += float(np.max(np.abs(terms[-5:])))
    error = tail + 64.0 * _EPS * magnitude
    logger.debug("residue series: value %.15g, cancellation mass %.3g", total, magnitude)
    return EvalResult(total, error, RESIDUE_SERIES)


# Identity shortcuts -------------------------------------------------------
def identity_shortcut(spec):
    """Closed-form value for the elementary G-functions, or None."""
    z = spec.argument
    a, b = spec.a_params, spec.b_params
    orders = (spec.m, spec.n, spec.p, spec.q)
    value = None
    if orders == (1, 0, 0, 1):
        value = z ** b[0] * math.exp(-z)
    elif orders == (1, 1, 1, 2) and abs(a[0] - b[1] - 1.0) < 1e-15 and b[0] > b[1]:
        value = z ** b[1] * special.gammainc(b[0] - b[1], z) * special.gamma(b[0] - b[1])
    elif orders == (1, 1, 1, 1) and 1.0 - a[0] + b[0] > 0:
        value = special.gamma(1.0 - a[0] + b[0]) * z ** b[0] * (1.0 + z) ** (a[0] - b[0] - 1.0)
    if value is None:
        return None
    value = float(value)
    return EvalResult(value, 8.0 * _EPS * abs(value), IDENTITY_SHORTCUT)
