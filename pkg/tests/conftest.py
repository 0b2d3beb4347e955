import json

import numpy as np
import pytest

from afsdml import deposition as dep
from afsdml.materials import builtin_alloy, with_overrides

AA2024_OVERLAY = {
    "thermal_conductivity": 121.0,
    "cte": 2.3e-5,
    "poisson_ratio": 0.33,
    "yield_stress_ref": 324.0,
    "solidus_temp": 502.0,
}


@pytest.fixture(scope="session")
def aa2024():
    return with_overrides(builtin_alloy("AA2024"), AA2024_OVERLAY)


@pytest.fixture(scope="session")
def small_model():
    """Tiny wall build: 8x5x4 grid, one wall layer of 4 voxels."""
    return dep.build_wall_model(
        nx=8, ny=5, nz=4, spacing=0.002, substrate_layers=2,
        wall_layers=1, wall_width=1, wall_length=4,
        traverse_speed=0.02, tool_radius=0.004,
    )


def small_params(**overrides):
    kwargs = dict(
        heat_source=2.0e9, shear_translation=1500.0, shear_rotational=15.0,
        tool_radius=0.004, convection_coeff=30.0, emissivity=0.3,
        ambient_temp=25.0, initial_temp=25.0, end_dwell=0.5,
    )
    kwargs.update(overrides)
    return dep.ProcessParameters(**kwargs)


@pytest.fixture()
def tiny_config_file(tmp_path):
    """Config file for fast CLI runs: small grid, 1 wall layer, short dwell."""
    cfg = {
        "geometry": {"nx": 8, "ny": 5, "nz": 4, "substrate_layers": 2,
                     "wall_layers": 1, "wall_width": 1, "wall_length": 4},
        "process": {"end_dwell_s": 0.5},
        "dataset": {"samples": 10},
        "ga": {"population_size": 8, "generations": 4},
    }
    path = tmp_path / "tiny_config.json"
    path.write_text(json.dumps(cfg))
    return path


def assert_all_finite(*arrays):
    for arr in arrays:
        assert np.isfinite(arr).all()
