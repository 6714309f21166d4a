"""
System scenario: the FSO hop, both RF hops and the target secrecy rate.
Also the JSON boundary, where dB and dBm values become linear.
"""

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

import config
from channel.fso import FsoLinkParams, derive_fso
from channel.rf import RfLinkParams, derive_rf
from utils.errors import ValidationError
from utils.math_utils import db_to_linear, dbm_to_linear, linear_to_db

_RF_REQUIRED = ("m", "n_antennas", "alpha", "eta", "omega_db")
_RF_DEFAULTS = {
    "d": config.DISTANCE_M,
    "lc": config.PROPAGATION_LC,
    "pt_dbm": config.PT_DBM,
    "n0": config.NOISE_N0,
    "sigma2": config.NOISE_SIGMA2,
}


@dataclass(frozen=True)
class SystemScenario:
    fso: FsoLinkParams
    rf_d: RfLinkParams
    rf_e: RfLinkParams
    rs: float
    varphi: float = 1.0
    power_reference: str = field(default=config.POWER_REFERENCE, compare=False)

    def __post_init__(self):
        if not (self.rs >= 0 and math.isfinite(self.rs)):
            raise ValidationError(f"target secrecy rate must be >= 0, got {self.rs}")
        if not (self.varphi > 0 and math.isfinite(self.varphi)):
            raise ValidationError(f"varphi must be positive, got {self.varphi}")

    @property
    def theta(self):
        """Θ = e^{Rs}."""
        return math.exp(self.rs)

    @property
    def threshold(self):
        """Θ − 1, the upper limit of every finite-range integral."""
        return math.expm1(self.rs)

    @cached_property
    def fso_derived(self):
        return derive_fso(self.fso)

    @cached_property
    def rf_d_derived(self):
        return derive_rf(self.rf_d)

    @cached_property
    def rf_e_derived(self):
        return derive_rf(self.rf_e)

    def deriveds(self):
        return self.fso_derived, self.rf_d_derived, self.rf_e_derived

    def with_rs(self, rs):
        return replace(self, rs=rs)

    def with_omega_rd(self, omega_rd):
        """Move along the high-SNR axis: Ω_RD = omega_rd, Ω_SR = φ·Ω_RD."""
        return replace(
            self,
            rf_d=replace(self.rf_d, omega=omega_rd),
            fso=replace(self.fso, omega_sr=self.varphi * omega_rd),
        )


def equivalent_snrs(gamma_sr, gamma_rd, gamma_re):
    """DF equivalent SNRs (min(γ_SR, γ_RD), min(γ_SR, γ_RE))."""
    values = [np.asarray(v, dtype=float) for v in (gamma_sr, gamma_rd, gamma_re)]
    if any(np.any(v < 0) for v in values):
        raise ValidationError("SNRs must be non-negative")
    sr, rd, re = values
    eq_d, eq_e = np.minimum(sr, rd), np.minimum(sr, re)
    if eq_d.ndim == 0:
        return float(eq_d), float(eq_e)
    return eq_d, eq_e


def _rf_from_dict(data, label, power_reference):
    if not isinstance(data, dict):
        raise ValidationError(f"{label} must be an object")
    missing = [key for key in _RF_REQUIRED if key not in data]
    if missing:
        raise ValidationError(f"{label} is missing {', '.join(missing)}")
    unknown = set(data) - set(_RF_REQUIRED) - set(_RF_DEFAULTS)
    if unknown:
        raise ValidationError(f"{label} has unknown fields {sorted(unknown)}")
    values = {**_RF_DEFAULTS, **data}
    return RfLinkParams(
        m=values["m"],
        n_antennas=values["n_antennas"],
        alpha=float(values["alpha"]),
        d=float(values["d"]),
        eta=float(values["eta"]),
        lc=float(values["lc"]),
        pt=dbm_to_linear(float(values["pt_dbm"]), power_reference),
        n0=float(values["n0"]),
        sigma2=float(values["sigma2"]),
        omega=db_to_linear(float(values["omega_db"])),
    )


def scenario_from_dict(data):
    """Build a scenario from its JSON object (dB fields converted here)."""
    try:
        power_reference = data.get("power_reference", config.POWER_REFERENCE)
        fso = data["fso"]
        unknown = set(fso) - {"a", "b", "xi", "r", "omega_sr_db"}
        if unknown:
            raise ValidationError(f"fso has unknown fields {sorted(unknown)}")
        fso_params = FsoLinkParams(
            a=float(fso["a"]),
            b=float(fso["b"]),
            xi=float(fso["xi"]),
            r=int(fso["r"]),
            omega_sr=db_to_linear(float(fso["omega_sr_db"])),
        )
        return SystemScenario(
            fso=fso_params,
            rf_d=_rf_from_dict(data["rf_d"], "rf_d", power_reference),
            rf_e=_rf_from_dict(data["rf_e"], "rf_e", power_reference),
            rs=float(data.get("rs_nats", config.RS_NATS)),
            varphi=float(data.get("varphi", 1.0)),
            power_reference=power_reference,
        )
    except KeyError as error:
        raise ValidationError(f"scenario is missing field {error}") from error
    except (TypeError, AttributeError) as error:
        raise ValidationError(f"malformed scenario: {error}") from error


def _rf_to_dict(params, power_reference):
    pt_dbm = 10.0 * math.log10(params.pt) + (30.0 if power_reference == "W" else 0.0)
    return {
        "m": params.m,
        "n_antennas": params.n_antennas,
        "alpha": params.alpha,
        "d": params.d,
        "eta": params.eta,
        "lc": params.lc,
        "pt_dbm": pt_dbm,
        "n0": params.n0,
        "sigma2": params.sigma2,
        "omega_db": linear_to_db(params.omega),
    }


def scenario_to_dict(scenario):
    return {
        "fso": {
            "a": scenario.fso.a,
            "b": scenario.fso.b,
            "xi": scenario.fso.xi,
            "r": scenario.fso.r,
            "omega_sr_db": linear_to_db(scenario.fso.omega_sr),
        },
        "rf_d": _rf_to_dict(scenario.rf_d, scenario.power_reference),
        "rf_e": _rf_to_dict(scenario.rf_e, scenario.power_reference),
        "rs_nats": scenario.rs,
        "varphi": scenario.varphi,
        "power_reference": scenario.power_reference,
    }


def load_scenario(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as error:
        raise ValidationError(f"cannot read scenario {path}: {error}") from error
    return scenario_from_dict(data)


SWEEP_AXES = ("omega_sr_db", "omega_rd_db", "rs", "alpha", "eta", "nd", "r", "xi", "ab")
OVERRIDE_KEYS = SWEEP_AXES + ("m", "ne", "omega_re_db", "varphi")


def with_axis_value(scenario, axis, value):
    """Copy of `scenario` with one sweep parameter set.

    `omega_rd_db` moves along the high-SNR axis (Ω_SR = φ·Ω_RD); `alpha`,
    `eta` and `m` apply to both RF hops; `ab` takes an (a, b) pair.
    """
    if axis == "omega_sr_db":
        return replace(scenario, fso=replace(scenario.fso, omega_sr=db_to_linear(float(value))))
    if axis == "omega_rd_db":
        return scenario.with_omega_rd(db_to_linear(float(value)))
    if axis == "omega_re_db":
        return replace(scenario, rf_e=replace(scenario.rf_e, omega=db_to_linear(float(value))))
    if axis == "rs":
        return scenario.with_rs(float(value))
    if axis == "varphi":
        return replace(scenario, varphi=float(value))
    if axis in ("alpha", "eta", "m"):
        cast = int if axis == "m" else float
        return replace(
            scenario,
            rf_d=replace(scenario.rf_d, **{axis: cast(value)}),
            rf_e=replace(scenario.rf_e, **{axis: cast(value)}),
        )
    if axis == "nd":
        return replace(scenario, rf_d=replace(scenario.rf_d, n_antennas=int(value)))
    if axis == "ne":
        return replace(scenario, rf_e=replace(scenario.rf_e, n_antennas=int(value)))
    if axis in ("r", "xi"):
        cast = int if axis == "r" else float
        return replace(scenario, fso=replace(scenario.fso, **{axis: cast(value)}))
    if axis == "ab":
        try:
            a, b = value
        except (TypeError, ValueError) as error:
            raise ValidationError(f"axis 'ab' takes (a, b) pairs, got {value!r}") from error
        return replace(scenario, fso=replace(scenario.fso, a=float(a), b=float(b)))
    raise ValidationError(f"unknown parameter {axis!r}; expected one of {', '.join(OVERRIDE_KEYS)}")


def apply_overrides(scenario, overrides):
    for key, value in (overrides or {}).items():
        scenario = with_axis_value(scenario, key, value)
    return scenario
