"""
Figure presets: the reference parameter block and the curve variants of
the eight SOP figures (four Ω_SR sweeps, four Ω_RD sweeps).
"""

import config
from channel.scenario import apply_overrides, scenario_from_dict
from experiments.runner import ExperimentSpec
from simulation.montecarlo import McConfig
from utils.errors import ValidationError

REFERENCE_SCENARIO = {
    "fso": {
        "a": config.WEAK_TURBULENCE[0],
        "b": config.WEAK_TURBULENCE[1],
        "xi": 1.1,
        "r": 1,
        "omega_sr_db": 20.0,
    },
    "rf_d": {"m": 2, "n_antennas": 3, "alpha": 0.5, "eta": 3.0, "omega_db": 5.0},
    "rf_e": {"m": 2, "n_antennas": config.N_EAVESDROPPER, "alpha": 0.5, "eta": 3.0, "omega_db": 0.0},
    "rs_nats": config.RS_NATS,
    "varphi": 1.0,
}

# High-SNR figures hold Ω_RE at 3 dB with φ = 1
_HIGH_SNR_BASE = {"omega_re_db": 3.0, "varphi": 1.0}


def reference_scenario(overrides=None):
    return apply_overrides(scenario_from_dict(REFERENCE_SCENARIO), overrides)


def _omega_sr_sweep(name, variants, base=None):
    return ExperimentSpec(
        name=name,
        scenario=reference_scenario(base),
        axis="omega_sr_db",
        grid=config.OMEGA_SR_GRID_DB,
        engines=("analytic", "montecarlo"),
        variants=tuple(variants.items()),
        mc=McConfig(),
    )


def _omega_rd_sweep(name, variants, base):
    return ExperimentSpec(
        name=name,
        scenario=reference_scenario({**_HIGH_SNR_BASE, **base}),
        axis="omega_rd_db",
        grid=config.OMEGA_RD_GRID_DB,
        engines=("analytic", "asymptotic"),
        variants=tuple(variants.items()),
        mc=McConfig(),
    )


def figure_presets():
    weak, strong = config.WEAK_TURBULENCE, config.STRONG_TURBULENCE
    return [
        # detection type against pointing error
        _omega_sr_sweep("fig2", {
            "r1_xi1.1": {"r": 1, "xi": 1.1},
            "r2_xi1.1": {"r": 2, "xi": 1.1},
            "r1_xi0.8": {"r": 1, "xi": 0.8},
            "r2_xi0.8": {"r": 2, "xi": 0.8},
        }),
        _omega_sr_sweep("fig3", {f"eta{eta:g}": {"eta": eta} for eta in (2.0, 3.0, 4.0)}),
        _omega_sr_sweep("fig4", {f"alpha{alpha:g}": {"alpha": alpha} for alpha in (0.2, 0.5, 0.8)}),
        _omega_sr_sweep("fig5", {
            f"nd{nd}_{label}": {"nd": nd, "ab": pair}
            for nd in (1, 3)
            for label, pair in (("weak", weak), ("strong", strong))
        }),
        _omega_rd_sweep("fig6", {f"m{m}": {"m": m} for m in (1, 2, 3)}, {"nd": 1}),
        _omega_rd_sweep("fig7", {f"nd{nd}": {"nd": nd} for nd in (1, 2, 3)}, {"m": 1}),
        _omega_rd_sweep("fig8", {f"xi{xi:g}": {"xi": xi} for xi in (0.8, 1.1, 6.7)}, {"r": 1}),
        _omega_rd_sweep("fig9", {
            f"r{r}_{label}": {"r": r, "ab": pair}
            for r in (1, 2)
            for label, pair in (("weak", weak), ("strong", strong))
        }, {"xi": 1.1}),
    ]


def preset_names():
    return [spec.name for spec in figure_presets()]


def get_preset(name):
    for spec in figure_presets():
        if spec.name == name:
            return spec
    raise ValidationError(f"unknown preset {name!r}; expected one of {', '.join(preset_names())}")
