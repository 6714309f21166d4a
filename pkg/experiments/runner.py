"""
Experiment runner: evaluates every (variant, grid point, engine) of an
ExperimentSpec, records one CSV row per evaluation and writes the table
through the result store.
"""

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from analysis.asymptotic_sop import AsymptoticSop, empirical_diversity_order, secrecy_diversity_order
from analysis.exact_sop import exact_sop
from analysis.oracle_quadrature import oracle_sop
from channel.scenario import (
    OVERRIDE_KEYS,
    SWEEP_AXES,
    SystemScenario,
    apply_overrides,
    load_scenario,
    scenario_from_dict,
    scenario_to_dict,
    with_axis_value,
)
from save.result_store import ResultStore
from simulation.montecarlo import McConfig, simulate
from utils.errors import SecrecyLabError, ValidationError

logger = logging.getLogger(__name__)

ENGINES = ("analytic", "asymptotic", "montecarlo", "oracle")
BASE_VARIANT = "base"
HIGH_SNR_AXIS = "omega_rd_db"


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    scenario: SystemScenario
    axis: str
    grid: tuple
    engines: tuple = ("analytic",)
    mc: McConfig = field(default_factory=McConfig)
    variants: tuple = ()  # (label, overrides) pairs
    output_path: str = None

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValidationError(f"unknown sweep axis {self.axis!r}; expected one of {', '.join(SWEEP_AXES)}")
        if len(self.grid) == 0:
            raise ValidationError(f"experiment {self.name!r} has an empty grid")
        if len(self.engines) == 0:
            raise ValidationError(f"experiment {self.name!r} names no engines")
        unknown = [engine for engine in self.engines if engine not in ENGINES]
        if unknown:
            raise ValidationError(f"unknown engines {unknown}; expected a subset of {', '.join(ENGINES)}")
        if "asymptotic" in self.engines and self.axis != HIGH_SNR_AXIS:
            raise ValidationError(
                f"the asymptotic engine sweeps {HIGH_SNR_AXIS} (Ω_SR = φ·Ω_RD), not {self.axis}"
            )
        labels = [label for label, _ in self.variants]
        if len(set(labels)) != len(labels):
            raise ValidationError(f"experiment {self.name!r} repeats a variant label")
        for label, overrides in self.variants:
            bad = set(overrides) - set(OVERRIDE_KEYS)
            if bad:
                raise ValidationError(f"variant {label!r} overrides unknown parameters {sorted(bad)}")

    def variant_scenarios(self):
        """(label, scenario) per curve; a spec without variants is one base curve."""
        if not self.variants:
            return [(BASE_VARIANT, self.scenario)]
        return [(label, apply_overrides(self.scenario, overrides)) for label, overrides in self.variants]

    def with_mc(self, **changes):
        changes = {key: value for key, value in changes.items() if value is not None}
        return replace(self, mc=replace(self.mc, **changes)) if changes else self

    def target_path(self, out=None):
        return out or self.output_path or os.path.join("results", f"{self.name}.csv")

    def to_dict(self):
        return {
            "name": self.name,
            "scenario": scenario_to_dict(self.scenario),
            "axis": self.axis,
            "grid": list(self.grid),
            "engines": list(self.engines),
            "mc": {
                "n_samples": self.mc.n_samples,
                "master_seed": self.mc.master_seed,
                "n_workers": self.mc.n_workers,
                "batch_size": self.mc.batch_size,
            },
            "variants": {label: dict(overrides) for label, overrides in self.variants},
        }


def experiment_from_dict(data, base_dir="."):
    """Build an ExperimentSpec from its JSON object.

    `scenario` is either an inline scenario object or a path to one,
    relative to `base_dir`.
    """
    if not isinstance(data, dict):
        raise ValidationError("experiment must be a JSON object")
    unknown = set(data) - {"name", "scenario", "axis", "grid", "engines", "mc", "variants", "output_path"}
    if unknown:
        raise ValidationError(f"experiment has unknown fields {sorted(unknown)}")
    try:
        scenario = data["scenario"]
        if isinstance(scenario, str):
            scenario = load_scenario(os.path.join(base_dir, scenario))
        else:
            scenario = scenario_from_dict(scenario)
        variants = data.get("variants", {})
        if not isinstance(variants, dict):
            raise ValidationError("variants must be an object of label -> overrides")
        grid = tuple(tuple(value) if isinstance(value, list) else value for value in data["grid"])
        return ExperimentSpec(
            name=str(data.get("name", "experiment")),
            scenario=scenario,
            axis=data["axis"],
            grid=grid,
            engines=tuple(data.get("engines", ("analytic",))),
            mc=McConfig(**data.get("mc", {})),
            variants=tuple((label, _pairs_to_tuples(overrides)) for label, overrides in variants.items()),
            output_path=data.get("output_path"),
        )
    except KeyError as error:
        raise ValidationError(f"experiment is missing field {error}") from error
    except TypeError as error:
        raise ValidationError(f"malformed experiment: {error}") from error


def _pairs_to_tuples(overrides):
    return {key: tuple(value) if isinstance(value, list) else value for key, value in overrides.items()}


def load_experiment(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as error:
        raise ValidationError(f"cannot read experiment {path}: {error}") from error
    return experiment_from_dict(data, os.path.dirname(os.path.abspath(path)))


def evaluate_engine(engine, scenario, mc=None):
    """One row's numeric fields for `engine` at `scenario`."""
    if engine == "analytic":
        breakdown = exact_sop(scenario)
        return _breakdown_fields(breakdown, series_terms=breakdown.total_series_terms)
    if engine == "asymptotic":
        return _breakdown_fields(AsymptoticSop(scenario).evaluate())
    if engine == "oracle":
        return _breakdown_fields(oracle_sop(scenario))
    if engine == "montecarlo":
        estimates = simulate(scenario, mc or McConfig())
        return {
            "sop": estimates["sop"].mean,
            "h1": estimates["h1"].mean,
            "h2": estimates["h2"].mean,
            "varrho": estimates["varrho"].mean,
            "std_error": estimates["sop"].std_error,
        }
    raise ValidationError(f"unknown engine {engine!r}")


def _breakdown_fields(breakdown, series_terms=None):
    return {
        "sop": breakdown.sop,
        "h1": breakdown.h1,
        "h2": breakdown.h2,
        "varrho": breakdown.varrho,
        "series_terms": series_terms,
    }


def error_status(error):
    return f"error:{error.exit_code}:{type(error).__name__}"


def _run_task(spec, task, timing):
    label, scenario, value, engine = task
    row = {"variant": label, "axis": spec.axis, "axis_value": value, "engine": engine}
    started = time.perf_counter()
    try:
        row.update(evaluate_engine(engine, with_axis_value(scenario, spec.axis, value), spec.mc))
        row["status"] = "ok"
    except SecrecyLabError as error:
        logger.warning("%s %s=%s %s failed: %s", label, spec.axis, value, engine, error)
        row["status"] = error_status(error)
    elapsed_ms = 1e3 * (time.perf_counter() - started)
    if timing:
        row["wall_time_ms"] = elapsed_ms
    logger.info("%s %s=%s %s done in %.0f ms", label, spec.axis, value, engine, elapsed_ms)
    return row


def tasks(spec):
    return [
        (label, scenario, value, engine)
        for label, scenario in spec.variant_scenarios()
        for value in spec.grid
        for engine in spec.engines
    ]


def run(spec, out=None, timing=False, n_workers=None):
    """Evaluate the experiment, write its CSV and return (path, rows).

    Grid points run on a thread pool; rows keep task order, so the table
    does not depend on the worker count.
    """
    workers = n_workers or spec.mc.n_workers
    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda task: _run_task(spec, task, timing), tasks(spec)))
    failed = sum(1 for row in rows if row["status"] != "ok")
    logger.info("%s: %d rows (%d failed) in %.1f s", spec.name, len(rows), failed,
                time.perf_counter() - started)
    path = spec.target_path(out)
    ResultStore(path).write(rows, {"experiment": spec.to_dict()}, timestamp=timing)
    return path, rows


def summarize(spec, rows):
    """Text lines per (variant, engine): SOP range, failures and, on the
    Ω_RD axis, the fitted diversity order against its closed form."""
    lines = [f"{spec.name}: {len(rows)} rows over {spec.axis}"]
    scenarios = dict(spec.variant_scenarios())
    for label in scenarios:
        for engine in spec.engines:
            subset = [row for row in rows if row["variant"] == label and row["engine"] == engine]
            good = [row for row in subset if row["status"] == "ok"]
            if not good:
                lines.append(f"  {label:<14} {engine:<10} no successful rows")
                continue
            sops = [row["sop"] for row in good]
            line = f"  {label:<14} {engine:<10} SOP {min(sops):.4e} .. {max(sops):.4e}"
            if len(good) < len(subset):
                line += f" ({len(subset) - len(good)} failed)"
            if spec.axis == HIGH_SNR_AXIS and len(good) >= 2:
                tail = good[-2:]
                if all(row["sop"] > 0 for row in tail):
                    fitted = empirical_diversity_order([row["axis_value"] for row in tail],
                                                       [row["sop"] for row in tail])
                    line += f", slope {fitted:.3f} (Gd {secrecy_diversity_order(scenarios[label]):.3f})"
            lines.append(line)
    return lines
