"""Aluminum alloy property records for the deposition simulator.

Tabulated constants cover elastic modulus, density and specific heat for the
five supported wrought alloys. Everything else (conductivity, CTE, Poisson
ratio, yield stress, solidus) is not tabulated here and must be supplied via
an overlay before a record can drive a simulation; shipped configs carry
handbook values and flag them as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from types import MappingProxyType
from typing import Mapping

KELVIN_OFFSET = 273.15

ALLOY_NAMES = ("AA2024", "AA5083", "AA5086", "AA7075", "AA6061")

# Tabulated (elastic_modulus GPa, density g/cm^3, specific_heat J/(kg K)).
_BUILTIN = {
    "AA2024": (73.1, 2.78, 875.0),
    "AA5083": (72.0, 2.66, 880.0),
    "AA5086": (70.0, 2.66, 880.0),
    "AA7075": (71.7, 2.81, 960.0),
    "AA6061": (68.9, 2.70, 896.0),
}

# Fields a record must carry before it can be simulated.
_REQUIRED = (
    "elastic_modulus",
    "density",
    "specific_heat",
    "thermal_conductivity",
    "cte",
    "poisson_ratio",
    "yield_stress_ref",
    "solidus_temp",
)

# Fields that accept a linear temperature coefficient in the overlay.
TEMP_COEFF_FIELDS = ("thermal_conductivity", "specific_heat", "elastic_modulus", "cte")


class MaterialError(ValueError):
    """Invalid alloy name, out-of-range property, or incomplete record."""


@dataclass(frozen=True)
class AlloyProperties:
    """Material constants for one alloy; immutable, safe to share.

    Temperatures are degrees Celsius; mechanical moduli GPa/MPa as noted.
    Unset optional fields mean "not yet supplied"; :meth:`validate_complete`
    enforces completeness before simulation.
    """

    name: str
    elastic_modulus: float | None = None  # GPa
    density: float | None = None  # g/cm^3
    specific_heat: float | None = None  # J/(kg K)
    thermal_conductivity: float | None = None  # W/(m K)
    cte: float | None = None  # 1/K
    poisson_ratio: float | None = None
    yield_stress_ref: float | None = None  # MPa at reference_temp
    solidus_temp: float | None = None  # degC
    reference_temp: float = 25.0  # degC
    # Optional linear temperature slopes (1/K), applied multiplicatively:
    # value(T) = base * (1 + coeff * (T - reference_temp)). Default empty.
    temp_coeffs: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "temp_coeffs", MappingProxyType(dict(self.temp_coeffs)))
        _validate_fields(self)

    # mappingproxy is not picklable; swap it for a plain dict in transit
    def __getstate__(self):
        state = self.__dict__.copy()
        state["temp_coeffs"] = dict(self.temp_coeffs)
        return state

    def __setstate__(self, state):
        state = dict(state)
        state["temp_coeffs"] = MappingProxyType(dict(state["temp_coeffs"]))
        self.__dict__.update(state)

    @property
    def density_kg_m3(self) -> float:
        return self.density * 1000.0

    def missing_fields(self) -> list[str]:
        return [f for f in _REQUIRED if getattr(self, f) is None]

    def validate_complete(self) -> "AlloyProperties":
        missing = self.missing_fields()
        if missing:
            raise MaterialError(
                f"{self.name}: incomplete properties, missing fields: {', '.join(missing)}"
            )
        return self

    def value_at(self, name: str, temperature_k):
        """Property value at an absolute temperature, applying any linear slope.

        `temperature_k` may be a scalar or ndarray; returns the same shape.
        With no coefficient configured this is just the base constant.
        """
        base = getattr(self, name)
        coeff = self.temp_coeffs.get(name, 0.0)
        if coeff == 0.0:
            return base
        ref_k = self.reference_temp + KELVIN_OFFSET
        return base * (1.0 + coeff * (temperature_k - ref_k))

    def as_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "temp_coeffs"}
        out["temp_coeffs"] = dict(self.temp_coeffs)
        return out


def _validate_fields(props: AlloyProperties) -> None:
    positive = (
        "elastic_modulus",
        "density",
        "specific_heat",
        "thermal_conductivity",
        "cte",
        "yield_stress_ref",
    )
    for name in positive:
        v = getattr(props, name)
        if v is None:
            continue
        if not math.isfinite(v) or v <= 0:
            raise MaterialError(f"{props.name}: {name} must be strictly positive, got {v!r}")
    nu = props.poisson_ratio
    if nu is not None and not (0.0 < nu < 0.5):
        raise MaterialError(f"{props.name}: poisson_ratio out of range (0, 0.5), got {nu!r}")
    if props.reference_temp is None:
        raise MaterialError(f"{props.name}: reference_temp cannot be unset")
    if props.solidus_temp is not None and props.solidus_temp <= props.reference_temp:
        raise MaterialError(
            f"{props.name}: solidus_temp ({props.solidus_temp}) must exceed "
            f"reference_temp ({props.reference_temp})"
        )
    for key in props.temp_coeffs:
        if key not in TEMP_COEFF_FIELDS:
            raise MaterialError(
                f"{props.name}: no temperature coefficient supported for field {key!r}"
            )


def builtin_alloy(name: str) -> AlloyProperties:
    """Tabulated base record for one of the five supported alloys.

    Only elastic modulus, density and specific heat are set; the remaining
    fields must come from :func:`with_overrides` before simulation.
    """
    if name not in _BUILTIN:
        raise MaterialError(
            f"unknown alloy {name!r}; valid names: {', '.join(ALLOY_NAMES)}"
        )
    e, rho, cp = _BUILTIN[name]
    return AlloyProperties(name=name, elastic_modulus=e, density=rho, specific_heat=cp)


def with_overrides(base: AlloyProperties, overlay: Mapping[str, object]) -> AlloyProperties:
    """Apply a partial property map over `base` and require a complete record.

    Overlay keys are field names (plus optional `temp_coeffs` sub-map); values
    must satisfy the field invariants. Raises MaterialError naming the bad
    field, or listing the still-missing fields if the result is incomplete.
    """
    settable = {f.name for f in fields(AlloyProperties)} - {"name"}
    updates: dict[str, object] = {}
    for key, value in overlay.items():
        if key not in settable:
            raise MaterialError(f"unknown property field {key!r}")
        if key == "temp_coeffs":
            merged = dict(base.temp_coeffs)
            merged.update(value)  # type: ignore[arg-type]
            updates[key] = merged
        elif value is None:
            updates[key] = None  # explicit null unsets the field
        else:
            updates[key] = float(value)  # type: ignore[arg-type]
    return replace(base, **updates).validate_complete()
