import copy
from pathlib import Path

import numpy as np
import pytest

from prionkinetics._compat import tomllib
from prionkinetics.config import config_from_mapping
from prionkinetics.flow import Domain, SpatialGrid
from prionkinetics.length import LengthGrid
from prionkinetics.params import params_from_mapping
from prionkinetics.sphere import SphereGrid

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

BASE_MAPPING = {
    "model": {
        "tau0": 0.3,
        "alpha": 1.0,
        "d1": 1.0,
        "d2": 1.0,
        "t_final": 1.0,
        "g": {"kind": "constant", "g0": 1.0},
    },
    "grid": {
        "length": {"n_r": 64, "r_max": 30.0},
        "sphere": {"n_theta": 2, "n_phi": 4},
        "space": {"mode": "homogeneous"},
    },
    "flow": {"kind": "zero"},
    "initial": {"psi": "gamma", "amplitude": 0.1, "decay": 2.0, "phi0": 1.0},
    "time": {"dt": 0.01, "n_steps": 10},
    "solver": {"tol": 1e-12},
    "output": {"directory": "output"},
}


def merge(base, overrides):
    result = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = merge(result[key], value)
        else:
            result[key] = value
    return result


@pytest.fixture(autouse=True)
def output_dir(tmp_path, monkeypatch):
    out = tmp_path / "out"
    monkeypatch.setenv("PRIONKINETICS_OUTPUT_DIR", str(out))
    return out


@pytest.fixture
def make_config():
    def factory(**overrides):
        return config_from_mapping(merge(BASE_MAPPING, overrides))

    return factory


@pytest.fixture
def make_params():
    def factory(**overrides):
        return params_from_mapping(merge(BASE_MAPPING["model"], overrides))

    return factory


@pytest.fixture
def params(make_params):
    return make_params()


@pytest.fixture
def lgrid():
    return LengthGrid(64, 30.0, 1.0)


@pytest.fixture
def sgrid():
    return SphereGrid(4, 8)


@pytest.fixture
def ygrid():
    return SpatialGrid(Domain("homogeneous"))


def decaying_field(lgrid, sgrid, n_y=1, seed=0):
    """Гладкое неотрицательное поле r·e^{-λr}·p(η) со случайными коэффициентами."""
    rng = np.random.default_rng(seed)
    r = lgrid.nodes
    radial = r * np.exp(-(1.0 + rng.uniform(0.5, 1.5)) * r)
    radial[-1] = 0.0
    angular = 1.0 + 0.5 * rng.uniform(size=sgrid.size)
    spatial = 1.0 + 0.5 * rng.uniform(size=n_y)
    return radial[:, None, None] * angular[None, :, None] * spatial[None, None, :]


def config_mapping(name, **overrides):
    """Конфигурация из configs/<name>.toml с переопределением секций."""
    with (CONFIGS / f"{name}.toml").open("rb") as handle:
        data = tomllib.load(handle)
    return merge(data, overrides)
