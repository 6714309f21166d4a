"""
Monte-Carlo estimation of the secrecy outage events.

Sample i takes its four uniforms from counter block i of a Philox
generator keyed by the master seed, so estimates depend on
(seed, n_samples) only, never on batch size or worker count.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

import config
from channel.fso import FsoInverseTable
from channel.rf import rf_quantile
from channel.scenario import SWEEP_AXES, with_axis_value
from simulation.kernels import (
    H1_EVENT,
    H2_EVENT,
    OUTAGE,
    POSITIVE_SECRECY,
    TALLY_SIZE,
    ZERO_SECRECY,
    tally_events,
)
from utils.errors import NumericalError, ValidationError

logger = logging.getLogger(__name__)

UNIFORMS_PER_SAMPLE = 4
ESTIMATE_NAMES = ("sop", "p0", "h1", "h2", "varrho", "pr_cs_zero")


@dataclass(frozen=True)
class McConfig:
    n_samples: int = config.MC_DEFAULT_SAMPLES
    master_seed: int = config.MC_DEFAULT_SEED
    n_workers: int = 1
    batch_size: int = config.MC_BATCH_SIZE

    def __post_init__(self):
        if int(self.n_samples) < config.MC_MIN_SAMPLES:
            raise ValidationError(f"n_samples must be at least {config.MC_MIN_SAMPLES}, got {self.n_samples}")
        if not (0 <= int(self.master_seed) < 2 ** 64):
            raise ValidationError("master_seed must be a 64-bit unsigned integer")
        if int(self.n_workers) < 1 or int(self.batch_size) < 1:
            raise ValidationError("n_workers and batch_size must be positive")

    def batches(self):
        """Static partition of the sample index range."""
        return [
            (start, min(start + self.batch_size, self.n_samples))
            for start in range(0, self.n_samples, self.batch_size)
        ]


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n: int
    ci95: tuple

    @classmethod
    def from_count(cls, count, n):
        mean = count / n
        std_error = math.sqrt(mean * (1.0 - mean) / n)
        half = config.MC_Z95 * std_error
        return cls(mean, std_error, n, (max(mean - half, 0.0), min(mean + half, 1.0)))


def uniform_block(seed, start, stop):
    """Uniforms of samples start..stop-1, one Philox counter block per sample."""
    bit_generator = np.random.Philox(key=seed)
    bit_generator.advance(start)
    return np.random.Generator(bit_generator).random((stop - start, UNIFORMS_PER_SAMPLE))


class SnrSampler:
    def __init__(self, scenario, table=None):
        """Initialize the per-scenario inverse transforms of the three hops."""
        self.scenario = scenario
        self.fso, self.rf_d, self.rf_e = scenario.deriveds()
        self.table = table or FsoInverseTable(self.fso)

    def draw(self, seed, start, stop):
        uniforms = uniform_block(seed, start, stop)
        gamma_sr = self.table(uniforms[:, 0])
        gamma_rd = np.asarray(rf_quantile(self.rf_d, uniforms[:, 1]), dtype=float)
        gamma_re = np.asarray(rf_quantile(self.rf_e, uniforms[:, 2]), dtype=float)
        return gamma_sr, gamma_rd, gamma_re


def _run_batch(sampler, seed, theta, threshold, bounds):
    start, stop = bounds
    gamma_sr, gamma_rd, gamma_re = sampler.draw(seed, start, stop)
    counts = tally_events(gamma_sr, gamma_rd, gamma_re, theta, threshold)
    logger.debug("batch [%d, %d): %d outages", start, stop, counts[OUTAGE])
    return counts


def tally(scenario, cfg, sampler=None):
    """Event counts summed over all batches."""
    sampler = sampler or SnrSampler(scenario)
    theta, threshold = scenario.theta, scenario.threshold
    total = np.zeros(TALLY_SIZE, dtype=np.int64)
    with ThreadPoolExecutor(max_workers=cfg.n_workers) as pool:
        for counts in pool.map(
            lambda bounds: _run_batch(sampler, cfg.master_seed, theta, threshold, bounds), cfg.batches()
        ):
            total += counts
    if total[OUTAGE] != total[H1_EVENT] + total[H2_EVENT] + total[ZERO_SECRECY]:
        raise NumericalError("outage events do not partition into H1, H2 and Cs = 0")
    return total


def simulate(scenario, cfg=None, sampler=None):
    """Estimates of SOP, P0, H1, H2, ϱ and Pr{Cs = 0} from one sample stream."""
    cfg = cfg or McConfig()
    started = time.perf_counter()
    counts = tally(scenario, cfg, sampler)
    n = cfg.n_samples
    estimates = {
        "sop": McEstimate.from_count(int(counts[OUTAGE]), n),
        "p0": McEstimate.from_count(int(counts[POSITIVE_SECRECY]), n),
        "h1": McEstimate.from_count(int(counts[H1_EVENT]), n),
        "h2": McEstimate.from_count(int(counts[H2_EVENT]), n),
        "varrho": McEstimate.from_count(int(counts[POSITIVE_SECRECY]), n),
        "pr_cs_zero": McEstimate.from_count(int(counts[ZERO_SECRECY]), n),
    }
    logger.info(
        "Monte-Carlo SOP %.6g ± %.2g from %d samples in %.1f s",
        estimates["sop"].mean, estimates["sop"].std_error, n, time.perf_counter() - started,
    )
    return estimates


def sweep(scenario_template, axis, grid, cfg=None):
    """One estimate set per grid value of `axis`."""
    if axis not in SWEEP_AXES:
        raise ValidationError(f"unknown sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}")
    if len(grid) == 0:
        raise ValidationError("sweep grid is empty")
    cfg = cfg or McConfig()
    rows = []
    for value in grid:
        scenario = with_axis_value(scenario_template, axis, value)
        rows.append((value, simulate(scenario, cfg)))
    return rows
