"""
Vectorised adaptive Gauss-Legendre quadrature.

All active panels of a pass are evaluated in one call of the integrand, a
panel is bisected while its 10- and 20-point rules disagree. Accepted
panels keep their 20 node values, which lets `CumulativeIntegral`
evaluate ∫_a^x f for arbitrary x through the Legendre antiderivative of
each panel's interpolant.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

import config
from utils.errors import NumericalError, QuadratureToleranceError, ValidationError
from utils.math_utils import log_spaced

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps
_FINE = 2 * config.QUAD_ORDER


@lru_cache(maxsize=None)
def gauss_rule(order):
    """Nodes and weights on [-1, 1]."""
    return legendre.leggauss(order)


@lru_cache(maxsize=None)
def _antiderivative_matrix(order):
    """Maps node values to Legendre coefficients of the antiderivative from -1."""
    nodes, _ = gauss_rule(order)
    to_coefficients = np.linalg.inv(legendre.legvander(nodes, order - 1))
    integral = np.stack(
        [legendre.legint(np.eye(order)[k], lbnd=-1.0) for k in range(order)], axis=1
    )
    return integral @ to_coefficients


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error: float
    edges: np.ndarray
    node_values: np.ndarray
    panel_values: np.ndarray
    evaluations: int


def initial_edges(a, b, breakpoints=None, grade_left=False, panels=config.QUAD_INITIAL_PANELS):
    """Starting panel edges on [a, b].

    With `grade_left` the panels shrink geometrically toward `a`, which
    resolves integrable power singularities at the left end point.
    """
    if not (b > a):
        raise ValidationError(f"empty integration range [{a}, {b}]")
    if grade_left:
        octaves = np.arange(config.QUAD_SINGULAR_OCTAVES, -1, -1, dtype=float)
        edges = a + (b - a) * 2.0 ** (-octaves)
        edges = np.concatenate(([a], edges, np.linspace(a + 0.5 * (b - a), b, panels // 2 + 1)))
    else:
        edges = np.linspace(a, b, panels + 1)
    if breakpoints is not None:
        extra = np.asarray(breakpoints, dtype=float)
        edges = np.concatenate((edges, extra[(extra > a) & (extra < b)]))
    return np.unique(edges)


def tail_edges(lower, upper, count=config.QUAD_INITIAL_PANELS):
    """Log-spaced edges on a long range [lower, upper] with lower ≥ 0."""
    if lower > 0:
        return log_spaced(lower, upper, count + 1)
    return np.concatenate(([0.0], log_spaced(upper * 1e-12, upper, count + 1)))


def _rule(fn, lo, hi, order):
    nodes, weights = gauss_rule(order)
    half = 0.5 * (hi - lo)
    points = (0.5 * (hi + lo))[:, None] + half[:, None] * nodes[None, :]
    values = np.asarray(fn(points.ravel()), dtype=float).reshape(points.shape)
    if not np.all(np.isfinite(values)):
        bad = points[~np.isfinite(values)]
        raise NumericalError(f"integrand is not finite at x = {bad[:3]}")
    return half * (values @ weights), values


def adaptive_integrate(fn, a, b, abs_tol=config.QUAD_ABS_TOL, rel_tol=config.QUAD_REL_TOL,
                       max_depth=config.QUAD_MAX_DEPTH, breakpoints=None, grade_left=False):
    """∫_a^b fn(x) dx for a vectorised `fn`."""
    edges = initial_edges(a, b, breakpoints, grade_left)
    lo, hi = edges[:-1], edges[1:]
    done_lo, done_hi, done_values, done_nodes, done_errors = [], [], [], [], []
    evaluations = 0
    width = b - a
    for depth in range(max_depth + 1):
        fine, node_values = _rule(fn, lo, hi, _FINE)
        coarse, _ = _rule(fn, lo, hi, config.QUAD_ORDER)
        evaluations += lo.size * (_FINE + config.QUAD_ORDER)
        errors = np.abs(fine - coarse)

        accepted_value = sum(float(np.sum(v)) for v in done_values)
        accepted_error = sum(float(np.sum(e)) for e in done_errors)
        total = accepted_value + float(np.sum(fine))
        scale = max(abs_tol, rel_tol * abs(total))

        if accepted_error + float(np.sum(errors)) <= scale:
            keep = np.ones(lo.size, dtype=bool)
        else:
            keep = (errors <= 0.5 * scale * (hi - lo) / width) | (errors <= 64 * _EPS * np.abs(fine))
        done_lo.append(lo[keep])
        done_hi.append(hi[keep])
        done_values.append(fine[keep])
        done_nodes.append(node_values[keep])
        done_errors.append(errors[keep])
        if np.all(keep):
            break
        mid = 0.5 * (lo[~keep] + hi[~keep])
        lo, hi = np.concatenate((lo[~keep], mid)), np.concatenate((mid, hi[~keep]))
    else:
        best = accepted_value + float(np.sum(fine))
        error = accepted_error + float(np.sum(errors))
        raise QuadratureToleranceError(
            f"adaptive quadrature on [{a:.4g}, {b:.4g}] stopped at depth {max_depth} "
            f"with error {error:.3g} > {scale:.3g}",
            best_value=best,
            abs_error=error,
        )

    order = np.argsort(np.concatenate(done_lo))
    panel_lo = np.concatenate(done_lo)[order]
    panel_hi = np.concatenate(done_hi)[order]
    panel_values = np.concatenate(done_values)[order]
    value = float(np.sum(panel_values))
    error = float(np.sum(np.concatenate(done_errors)))
    logger.debug(
        "quadrature on [%.4g, %.4g]: %d panels, %d evaluations, value %.12g ± %.2e",
        a, b, panel_lo.size, evaluations, value, error,
    )
    return QuadResult(
        value=value,
        abs_error=error,
        edges=np.column_stack((panel_lo, panel_hi)),
        node_values=np.concatenate(done_nodes)[order],
        panel_values=panel_values,
        evaluations=evaluations,
    )


class CumulativeIntegral:
    def __init__(self, fn, a, b, abs_tol=config.QUAD_ABS_TOL, rel_tol=config.QUAD_REL_TOL,
                 max_depth=config.QUAD_MAX_DEPTH, breakpoints=None, grade_left=False):
        """Tabulate C(x) = ∫_a^x fn on the adapted panels of [a, b]."""
        result = adaptive_integrate(fn, a, b, abs_tol, rel_tol, max_depth, breakpoints, grade_left)
        self.a, self.b = a, b
        self.total = result.value
        self.abs_error = result.abs_error
        self.lefts = result.edges[:, 0]
        self.halves = 0.5 * (result.edges[:, 1] - result.edges[:, 0])
        self.offsets = np.concatenate(([0.0], np.cumsum(result.panel_values)[:-1]))
        self.coefficients = result.node_values @ _antiderivative_matrix(_FINE).T

    def __call__(self, x):
        points = np.asarray(x, dtype=float)
        flat = np.clip(points.reshape(-1), self.a, self.b)
        index = np.clip(np.searchsorted(self.lefts, flat, side="right") - 1, 0, self.lefts.size - 1)
        t = np.clip((flat - self.lefts[index]) / self.halves[index] - 1.0, -1.0, 1.0)
        basis = legendre.legvander(t, _FINE)
        partial = np.einsum("ij,ij->i", basis, self.coefficients[index]) * self.halves[index]
        values = self.offsets[index] + partial
        return float(values[0]) if points.ndim == 0 else values.reshape(points.shape)


def nested_integral(outer, inner, a, b, abs_tol=config.QUAD_ABS_TOL, rel_tol=config.QUAD_REL_TOL,
                    max_depth=config.QUAD_MAX_DEPTH, breakpoints=None, grade_left=False,
                    inner_start=None):
    """∫_a^b outer(x) ∫_{inner_start}^x inner(y) dy dx with the inner integral tabulated once."""
    start = a if inner_start is None else inner_start
    cumulative = CumulativeIntegral(
        inner, start, b, 0.1 * abs_tol, 0.1 * rel_tol, max_depth, breakpoints, grade_left
    )
    result = adaptive_integrate(
        lambda x: outer(x) * cumulative(x), a, b, abs_tol, rel_tol, max_depth, breakpoints, grade_left
    )
    outer_mass = adaptive_integrate(
        lambda x: np.abs(outer(x)), a, b, math.inf, 1e-3, max_depth, breakpoints, grade_left
    ).value
    return result.value, result.abs_error + cumulative.abs_error * outer_mass
