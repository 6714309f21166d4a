import pytest

import config
from channel.scenario import apply_overrides, scenario_from_dict

BASE_SCENARIO = {
    "fso": {"a": 2.902, "b": 2.51, "xi": 1.1, "r": 1, "omega_sr_db": 15.0},
    "rf_d": {"m": 2, "n_antennas": 3, "alpha": 0.5, "eta": 3.0, "omega_db": 5.0},
    "rf_e": {"m": 2, "n_antennas": 2, "alpha": 0.5, "eta": 3.0, "omega_db": 0.0},
    "rs_nats": config.RS_NATS,
    "varphi": 1.0,
}


def make_scenario(**overrides):
    """Base scenario with parameter overrides named as the sweep axes."""
    return apply_overrides(scenario_from_dict(BASE_SCENARIO), overrides)


@pytest.fixture
def scenario():
    return make_scenario()


@pytest.fixture
def scenario_dict():
    return {key: dict(value) if isinstance(value, dict) else value for key, value in BASE_SCENARIO.items()}
