"""Transient voxel thermal solver with element activation for wall builds.

Explicit finite-volume scheme on a uniform cubic grid. Substrate voxels are
active from t = 0; wall voxels activate when the moving tool first covers
them and enter at the deposition temperature. Conduction acts only between
active voxel pairs; every exposed face of an active voxel (domain boundary
or inactive neighbor) loses heat by convection and radiation. The volumetric
heat source applies under the tool footprint in the topmost active layer.

Temperatures are kelvin internally; configuration temperatures are Celsius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import mechanics
from .materials import KELVIN_OFFSET, AlloyProperties

STEFAN_BOLTZMANN = 5.670374419e-8  # W/(m^2 K^4)


class SolverError(RuntimeError):
    """Unstable step, divergence, or inconsistent solver input."""


class ModelError(ValueError):
    """Invalid grid geometry or toolpath."""


@dataclass(frozen=True)
class ToolpathSegment:
    layer: int  # wall layer index, 0-based
    start: tuple[float, float]  # m, (x, y) of tool axis at t_start
    end: tuple[float, float]
    speed: float  # m/s
    t_start: float
    t_end: float

    def position(self, t: float) -> tuple[float, float]:
        span = self.t_end - self.t_start
        f = 0.0 if span == 0.0 else (t - self.t_start) / span
        f = min(max(f, 0.0), 1.0)
        return (
            self.start[0] + f * (self.end[0] - self.start[0]),
            self.start[1] + f * (self.end[1] - self.start[1]),
        )


@dataclass(frozen=True)
class DepositionModel:
    """Voxel grid, activation schedule and toolpath for one wall build."""

    dims: tuple[int, int, int]
    spacing: float  # m, cubic voxels
    substrate_layers: int
    wall_layers: int
    wall_width: int
    toolpath: tuple[ToolpathSegment, ...]
    activation_time: np.ndarray = field(repr=False)  # s; +inf = never deposited

    @property
    def duration(self) -> float:
        """Time of the last toolpath segment end (0 for substrate-only builds)."""
        return self.toolpath[-1].t_end if self.toolpath else 0.0

    def voxel_centers(self):
        nx, ny, nz = self.dims
        dx = self.spacing
        x = (np.arange(nx) + 0.5) * dx
        y = (np.arange(ny) + 0.5) * dx
        z = (np.arange(nz) + 0.5) * dx
        return x, y, z


@dataclass(frozen=True)
class ProcessParameters:
    """Loads, boundary coefficients and schedule shared by one simulation."""

    heat_source: float  # W/m^3 under the tool
    shear_translation: float  # N
    shear_rotational: float  # N m
    tool_radius: float  # m
    convection_coeff: float  # W/(m^2 K)
    emissivity: float
    ambient_temp: float  # degC
    initial_temp: float  # degC
    end_dwell: float  # s of cooling after the last segment
    deposition_temp: float | None = None  # degC; None -> 0.8 * solidus
    bottom_boundary: str = "fixed"  # "fixed" (ghost voxel at ambient) or "convective"

    def __post_init__(self):
        if self.heat_source <= 0 or self.tool_radius <= 0:
            raise ModelError("heat_source and tool_radius must be positive")
        # h = 0 is allowed: insulated fixtures depend on it.
        if self.convection_coeff < 0:
            raise ModelError("convection_coeff must be non-negative")
        if not 0.0 <= self.emissivity <= 1.0:
            raise ModelError(f"emissivity must lie in [0, 1], got {self.emissivity}")
        if self.end_dwell < 0:
            raise ModelError("end_dwell must be non-negative")
        if self.bottom_boundary not in ("fixed", "convective"):
            raise ModelError(f"unknown bottom_boundary {self.bottom_boundary!r}")

    def deposition_temp_c(self, props: AlloyProperties) -> float:
        if self.deposition_temp is not None:
            return self.deposition_temp
        return 0.8 * props.solidus_temp


@dataclass
class ThermalState:
    time: float
    temperature: np.ndarray  # K
    active: np.ndarray  # bool


@dataclass
class SimulationResult:
    thermal: ThermalState
    mech: mechanics.MechanicalState
    # rows: (time s, max T K, max sigma_vm MPa, max LE) over active voxels
    history: np.ndarray
    model: DepositionModel
    params: ProcessParameters
    props: AlloyProperties

    HISTORY_COLUMNS = ("time_s", "max_temperature_k", "max_von_mises_mpa", "max_log_strain")


def build_wall_model(
    *,
    nx: int,
    ny: int,
    nz: int,
    spacing: float,
    substrate_layers: int,
    wall_layers: int,
    wall_width: int,
    wall_length: int,
    traverse_speed: float,
    tool_radius: float,
) -> DepositionModel:
    """Construct the grid and activation schedule for a straight wall.

    The wall is a `wall_length` x `wall_width` voxel footprint centered in
    the substrate plan view, one toolpath segment per layer, serpentine
    direction. Activation time of a wall voxel is the first instant the tool
    axis comes within `tool_radius` (horizontal distance) of its center.
    """
    if substrate_layers + wall_layers > nz:
        raise ModelError("substrate_layers + wall_layers exceed nz")
    if substrate_layers < 1:
        raise ModelError("at least one substrate layer is required")
    if wall_layers > 0:
        if not (1 <= wall_width <= ny and 1 <= wall_length <= nx):
            raise ModelError("wall footprint does not fit the grid")
        if traverse_speed <= 0:
            raise ModelError("traverse_speed must be positive")
        half_width = 0.5 * (wall_width - 1) * spacing
        if tool_radius < half_width:
            raise ModelError(
                "tool_radius too small to cover the wall width: "
                f"need >= {half_width:.6g} m, got {tool_radius:.6g} m"
            )

    dx = spacing
    i0 = (nx - wall_length) // 2
    j0 = (ny - wall_width) // 2
    y_line = (j0 + 0.5 * (wall_width - 1) + 0.5) * dx

    activation = np.full((nx, ny, nz), np.inf, dtype=np.float64)
    activation[:, :, :substrate_layers] = 0.0

    segments = []
    t = 0.0
    x_first = (i0 + 0.5) * dx
    x_last = (i0 + wall_length - 1 + 0.5) * dx
    length = x_last - x_first
    for layer in range(wall_layers):
        forward = layer % 2 == 0
        start = (x_first, y_line) if forward else (x_last, y_line)
        end = (x_last, y_line) if forward else (x_first, y_line)
        t_end = t + (length / traverse_speed if length > 0 else 0.0)
        segments.append(ToolpathSegment(layer, start, end, traverse_speed, t, t_end))
        z = substrate_layers + layer
        for i in range(i0, i0 + wall_length):
            cx = (i + 0.5) * dx
            for j in range(j0, j0 + wall_width):
                cy = (j + 0.5) * dx
                t_hit = _first_cover_time(segments[-1], cx, cy, tool_radius)
                if t_hit is None:
                    raise ModelError(
                        f"wall voxel ({i},{j},{z}) is never covered by the toolpath"
                    )
                activation[i, j, z] = t_hit
        t = t_end
    activation.setflags(write=False)

    return DepositionModel(
        dims=(nx, ny, nz),
        spacing=spacing,
        substrate_layers=substrate_layers,
        wall_layers=wall_layers,
        wall_width=wall_width,
        toolpath=tuple(segments),
        activation_time=activation,
    )


def _first_cover_time(seg: ToolpathSegment, cx: float, cy: float, radius: float):
    """Earliest t in [t_start, t_end] with |tool(t) - (cx, cy)| <= radius."""
    px, py = seg.start
    qx, qy = seg.end
    span = seg.t_end - seg.t_start
    vx = (qx - px) / span if span > 0 else 0.0
    vy = (qy - py) / span if span > 0 else 0.0
    rx, ry = px - cx, py - cy
    # |r + v*s|^2 = radius^2 with s = t - t_start
    a = vx * vx + vy * vy
    b = 2.0 * (rx * vx + ry * vy)
    c = rx * rx + ry * ry - radius * radius
    if c <= 0.0:
        return seg.t_start
    if a == 0.0:
        return None
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return None
    s = (-b - math.sqrt(disc)) / (2.0 * a)
    if s < 0.0 or s > span:
        return None
    return seg.t_start + s


def activation(model: DepositionModel, voxel: tuple[int, int, int], t: float) -> int:
    """1 if the voxel is active at time t (inclusive boundary), else 0."""
    nx, ny, nz = model.dims
    i, j, k = voxel
    if not (0 <= i < nx and 0 <= j < ny and 0 <= k < nz):
        raise ModelError(f"voxel {voxel} outside grid dims {model.dims}")
    return int(t >= model.activation_time[i, j, k])


def stable_dt(model: DepositionModel, props: AlloyProperties) -> float:
    """Largest step keeping the explicit update non-oscillatory for interior
    voxels: 0.9 * rho*cp*dx^2 / (6*k)."""
    props.validate_complete()
    dx = model.spacing
    rho = props.density_kg_m3
    return 0.9 * rho * props.specific_heat * dx * dx / (6.0 * props.thermal_conductivity)


def tool_position(model: DepositionModel, t: float):
    """Tool axis (x, y) at time t, or None outside all segments."""
    for seg in model.toolpath:
        if seg.t_start <= t <= seg.t_end:
            return seg.position(t)
    return None


def tool_footprint_mask(
    active: np.ndarray,
    model: DepositionModel,
    tool_radius: float,
    tool_pos,
) -> np.ndarray:
    """Active voxels of the topmost active layer within the tool footprint."""
    mask = np.zeros(model.dims, dtype=bool)
    if tool_pos is None or not active.any():
        return mask
    z_top = int(np.max(np.nonzero(active.any(axis=(0, 1)))[0]))
    x, y, _ = model.voxel_centers()
    dist2 = (x[:, None] - tool_pos[0]) ** 2 + (y[None, :] - tool_pos[1]) ** 2
    mask[:, :, z_top] = active[:, :, z_top] & (dist2 <= tool_radius * tool_radius)
    return mask


def initial_state(
    model: DepositionModel, params: ProcessParameters, props: AlloyProperties
) -> ThermalState:
    """State at t = 0: substrate at initial_temp, any wall voxel already under
    the tool at t = 0 enters at the deposition temperature."""
    init_k = params.initial_temp + KELVIN_OFFSET
    dep_k = params.deposition_temp_c(props) + KELVIN_OFFSET
    active = model.activation_time <= 0.0
    temperature = np.full(model.dims, init_k, dtype=np.float64)
    wall_now = active.copy()
    wall_now[:, :, : model.substrate_layers] = False
    temperature[wall_now] = dep_k
    return ThermalState(time=0.0, temperature=temperature, active=active)


def thermal_step(
    state: ThermalState,
    model: DepositionModel,
    params: ProcessParameters,
    props: AlloyProperties,
    tool_pos,
    dt: float,
) -> ThermalState:
    """Advance the temperature field by one explicit step of length dt.

    Raises SolverError for dt above the stability bound or a non-finite
    result. Inactive voxels are untouched; voxels whose activation time is
    reached during the step enter at the deposition temperature.
    """
    if dt > stable_dt(model, props) * (1.0 + 1e-12):
        raise SolverError(f"unstable step: dt={dt:.6g} exceeds stable_dt")

    T = state.temperature
    act = state.active
    dx = model.spacing
    rho = props.density_kg_m3
    cp = props.value_at("specific_heat", T)
    k = props.value_at("thermal_conductivity", T)
    k_is_field = isinstance(k, np.ndarray)
    amb_k = params.ambient_temp + KELVIN_OFFSET

    net = np.zeros_like(T)  # W accumulated per voxel
    n_exposed = np.zeros(model.dims, dtype=np.int64)

    for ax in range(3):
        lo = tuple(slice(None, -1) if a == ax else slice(None) for a in range(3))
        hi = tuple(slice(1, None) if a == ax else slice(None) for a in range(3))
        pair = act[lo] & act[hi]
        k_face = 0.5 * (k[lo] + k[hi]) if k_is_field else k
        flux = np.where(pair, k_face * dx * (T[hi] - T[lo]), 0.0)  # W into lo side
        net[lo] += flux
        net[hi] -= flux
        # faces exposed to an inactive neighbor
        n_exposed[lo] += act[lo] & ~act[hi]
        n_exposed[hi] += act[hi] & ~act[lo]
        # domain-boundary faces
        edge_lo = tuple(slice(0, 1) if a == ax else slice(None) for a in range(3))
        edge_hi = tuple(slice(-1, None) if a == ax else slice(None) for a in range(3))
        n_exposed[edge_lo] += act[edge_lo]
        n_exposed[edge_hi] += act[edge_hi]

    if params.bottom_boundary == "fixed":
        # Ghost voxel pinned at ambient below the bottom layer, standard face
        # conductance; replaces that face's convection/radiation loss.
        bottom = act[:, :, 0]
        n_exposed[:, :, 0] -= bottom
        k_bot = k[:, :, 0] if k_is_field else k
        net[:, :, 0] += np.where(bottom, k_bot * dx * (amb_k - T[:, :, 0]), 0.0)

    h = params.convection_coeff
    eps = params.emissivity
    loss_per_area = h * (T - amb_k) + eps * STEFAN_BOLTZMANN * (T**4 - amb_k**4)
    net -= loss_per_area * dx * dx * n_exposed

    src = tool_footprint_mask(act, model, params.tool_radius, tool_pos)
    net[src] += params.heat_source * dx**3

    new_T = T.copy()
    heat_capacity = rho * cp * dx**3
    if isinstance(heat_capacity, np.ndarray):
        new_T[act] = T[act] + dt * net[act] / heat_capacity[act]
    else:
        new_T[act] = T[act] + dt * net[act] / heat_capacity
    if not np.isfinite(new_T[act]).all():
        raise SolverError("solver diverged: non-finite temperature")

    t_new = state.time + dt
    newly = ~act & (model.activation_time <= t_new)
    new_act = act | newly
    new_T[newly] = params.deposition_temp_c(props) + KELVIN_OFFSET
    return ThermalState(time=t_new, temperature=new_T, active=new_act)


def temperature_gradient_components(state: ThermalState, model: DepositionModel) -> np.ndarray:
    """Per-voxel gradient vector (K/m), shape dims + (3,).

    Central differences over active neighbors, one-sided where a neighbor is
    inactive or outside the domain, zero along axes with no active neighbor.
    Inactive voxels report a zero vector.
    """
    T = state.temperature
    act = state.active
    dx = model.spacing
    grad = np.zeros(model.dims + (3,), dtype=np.float64)

    pad_T = np.pad(T, 1, mode="edge")
    pad_act = np.pad(act, 1, mode="constant", constant_values=False)
    core = (slice(1, -1),) * 3
    for ax in range(3):
        up = tuple(
            slice(2, None) if a == ax else slice(1, -1) for a in range(3)
        )
        dn = tuple(
            slice(None, -2) if a == ax else slice(1, -1) for a in range(3)
        )
        a_up = pad_act[up]
        a_dn = pad_act[dn]
        t_up = pad_T[up]
        t_dn = pad_T[dn]
        t_c = pad_T[core]
        central = (t_up - t_dn) / (2.0 * dx)
        fwd = (t_up - t_c) / dx
        bwd = (t_c - t_dn) / dx
        comp = np.where(
            a_up & a_dn, central, np.where(a_up, fwd, np.where(a_dn, bwd, 0.0))
        )
        grad[..., ax] = np.where(act, comp, 0.0)
    return grad


def temperature_gradient(state: ThermalState, model: DepositionModel) -> np.ndarray:
    """Gradient magnitude field |grad T| in K/m."""
    g = temperature_gradient_components(state, model)
    return np.sqrt(np.sum(g * g, axis=-1))


def heat_flux(
    state: ThermalState, model: DepositionModel, props: AlloyProperties
) -> np.ndarray:
    """Heat flux vector field -k * grad T in W/m^2, shape dims + (3,)."""
    g = temperature_gradient_components(state, model)
    k = props.value_at("thermal_conductivity", state.temperature)
    if isinstance(k, np.ndarray):
        return -k[..., None] * g
    return -k * g


def run_deposition(
    model: DepositionModel,
    params: ProcessParameters,
    props: AlloyProperties,
    dt: float | None = None,
    record_history: bool = True,
) -> SimulationResult:
    """Time-march the coupled thermal/mechanical build from t = 0 through all
    toolpath segments plus the end dwell. Fully deterministic."""
    props.validate_complete()
    if dt is None:
        dt = stable_dt(model, props)
    elif dt > stable_dt(model, props) * (1.0 + 1e-12):
        raise SolverError("configured dt exceeds the stability bound")

    state = initial_state(model, params, props)
    mech = mechanics.new_mechanical_state(model.dims)
    mech = mechanics.mechanical_update(mech, state, np.zeros(model.dims, bool), props)
    tau = mechanics.shear_traction(params)
    t_end = model.duration + params.end_dwell

    rows = []
    if record_history:
        rows.append(_history_row(state, mech))
    while state.time < t_end:
        pos = tool_position(model, state.time)
        try:
            state = thermal_step(state, model, params, props, pos, dt)
        except SolverError as exc:
            raise SolverError(f"{exc} (at t={state.time:.6g} s)") from exc
        under = tool_footprint_mask(state.active, model, params.tool_radius, pos)
        mech = mechanics.mechanical_update(mech, state, under, props, tau=tau)
        if record_history:
            rows.append(_history_row(state, mech))

    history = np.array(rows, dtype=np.float64) if rows else np.zeros((0, 4))
    return SimulationResult(state, mech, history, model, params, props)


def _history_row(state: ThermalState, mech: mechanics.MechanicalState):
    act = state.active
    if not act.any():
        return (state.time, np.nan, 0.0, 0.0)
    return (
        state.time,
        float(state.temperature[act].max()),
        float(mech.sigma_vm[act].max()),
        float(mech.log_strain[act].max()),
    )
