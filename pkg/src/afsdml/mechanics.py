"""Quasi-static per-voxel stress/strain estimation for the deposited wall.

The stress state is modeled as an in-plane equibiaxial component from
constrained thermal mismatch (free build direction) plus the in-plane shear
traction applied by the tool, with perfect plasticity enforced by a radial
return to the temperature-softened yield surface. No global equilibrium
solve is performed; every voxel is updated independently from the thermal
field, which keeps all outputs hand-checkable.

The stored in-plane stress is carried forward between updates: each update
adds the elastic stress increment from the temperature change since the last
update, so a voxel sitting at constant temperature stays exactly on (or
inside) the yield surface instead of re-accumulating plastic strain. For a
virgin voxel this reduces to the constrained-cooling trial
E*cte*(stress_free_temp - T)/(1 - nu).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .materials import KELVIN_OFFSET, AlloyProperties


class MechanicsError(RuntimeError):
    """Non-finite mechanical state produced."""


@dataclass
class MechanicalState:
    """Per-voxel mechanical fields at one time instant.

    stress_free_temp is NaN for voxels that have never been active; it is
    pinned to the voxel temperature the first time the voxel appears in the
    active set (freshly deposited material carries no elastic stress).
    last_temp tracks the temperature each voxel was last updated at.
    """

    sigma_vm: np.ndarray  # MPa, >= 0
    sigma_inplane: np.ndarray  # MPa, signed biaxial component
    peeq: np.ndarray  # accumulated equivalent plastic strain
    log_strain: np.ndarray
    stress_free_temp: np.ndarray  # K, NaN until activation
    last_temp: np.ndarray  # K, NaN until activation

    def copy(self) -> "MechanicalState":
        return MechanicalState(
            self.sigma_vm.copy(),
            self.sigma_inplane.copy(),
            self.peeq.copy(),
            self.log_strain.copy(),
            self.stress_free_temp.copy(),
            self.last_temp.copy(),
        )


def new_mechanical_state(dims: tuple[int, int, int]) -> MechanicalState:
    zeros = lambda: np.zeros(dims, dtype=np.float64)
    return MechanicalState(
        zeros(), zeros(), zeros(), zeros(),
        np.full(dims, np.nan), np.full(dims, np.nan),
    )


def yield_stress(temperature_k, props: AlloyProperties):
    """Temperature-softened yield stress in MPa.

    Linear decay from the reference-temperature value to zero at the solidus;
    clamped outside that interval. Accepts scalars or arrays.
    """
    t_ref = props.reference_temp + KELVIN_OFFSET
    t_sol = props.solidus_temp + KELVIN_OFFSET
    frac = 1.0 - (temperature_k - t_ref) / (t_sol - t_ref)
    return props.yield_stress_ref * np.clip(frac, 0.0, 1.0)


def shear_traction(params) -> float:
    """Combined surface shear stress under the tool, in MPa.

    Translational force spread uniformly over the circular contact patch,
    plus the rotational torque converted through the uniform-pressure
    circular-contact relation M = (2/3)*pi*r^3*tau.
    """
    r = params.tool_radius
    tau_long = params.shear_translation / (math.pi * r * r)
    tau_rot = params.shear_rotational / ((2.0 / 3.0) * math.pi * r**3)
    return (tau_long + tau_rot) / 1.0e6


def von_mises(sigma_inplane, tau):
    """Von Mises invariant of the state s11 = s22 = sigma_inplane, s33 = 0,
    with in-plane shear tau. Accepts scalars or arrays."""
    return np.sqrt(sigma_inplane * sigma_inplane + 3.0 * tau * tau)


def log_strain_of_stretch(stretch: float) -> float:
    """Logarithmic (true) strain of a stretch ratio."""
    if stretch <= 0.0:
        raise ValueError(f"stretch must be positive, got {stretch!r}")
    return math.log(stretch)


def mechanical_update(
    mech: MechanicalState,
    thermal,
    under_tool: np.ndarray,
    props: AlloyProperties,
    tau: float = 0.0,
) -> MechanicalState:
    """One quasi-static mechanical update from the current thermal field.

    Per active voxel: add the elastic biaxial stress increment for the
    temperature change since the last update, superpose the shear traction
    `tau` (MPa) where the tool footprint applies, then radially return onto
    the softened yield surface, booking the excess as plastic strain.
    Inactive voxels are untouched. Returns a new state.
    """
    out = mech.copy()
    active = thermal.active
    T = thermal.temperature

    # Pin references for voxels activated since the last update.
    newly = active & np.isnan(out.stress_free_temp)
    out.stress_free_temp[newly] = T[newly]
    out.last_temp[newly] = T[newly]

    e_mpa = props.value_at("elastic_modulus", T) * 1000.0
    cte = props.value_at("cte", T)
    nu = props.poisson_ratio

    dT = np.where(active, out.last_temp - T, 0.0)  # positive on cooling
    trial = np.where(active, out.sigma_inplane, 0.0) + e_mpa * cte * dT / (1.0 - nu)
    tau_field = np.where(active & under_tool, tau, 0.0)
    vm_trial = von_mises(trial, tau_field)

    sy = yield_stress(T, props)
    over = active & (vm_trial > sy)
    # Radial return: scale the stress state onto the yield surface, book the
    # excess as equivalent plastic strain.
    scale = np.ones_like(vm_trial)
    np.divide(sy, vm_trial, out=scale, where=over)
    d_peeq = np.where(over, (vm_trial - sy) / e_mpa, 0.0)

    out.peeq = np.where(active, out.peeq + d_peeq, out.peeq)
    out.sigma_inplane = np.where(active, trial * scale, out.sigma_inplane)
    out.sigma_vm = np.where(active, np.where(over, sy, vm_trial), out.sigma_vm)
    thermal_strain = cte * np.abs(np.where(active, out.stress_free_temp - T, 0.0))
    eps_total = thermal_strain + out.peeq
    out.log_strain = np.where(active, np.log1p(eps_total), out.log_strain)
    out.last_temp = np.where(active, T, out.last_temp)

    for arr in (out.sigma_vm, out.sigma_inplane, out.peeq, out.log_strain):
        if not np.isfinite(arr[active]).all():
            raise MechanicsError("mechanics diverged: non-finite state")
    return out
