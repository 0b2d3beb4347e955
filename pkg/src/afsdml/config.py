"""Run configuration: JSON schema, validation, and object construction.

A user config is deep-merged over the packaged defaults, so partial files
are fine. The resolved dict is hashed (sha256 of canonical JSON) and that
hash ties datasets, models and manifests back to their configuration.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path

from . import deposition, ga
from .materials import ALLOY_NAMES, AlloyProperties, builtin_alloy, with_overrides
from .trees import ForestHyperparams, TreeHyperparams


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


_PROCESS_KEYS = {
    "heat_source_w_per_m3": "heat_source",
    "shear_translation_n": "shear_translation",
    "shear_rotational_nm": "shear_rotational",
    "tool_radius_m": "tool_radius",
    "convection_coeff_w_per_m2k": "convection_coeff",
    "emissivity": "emissivity",
    "ambient_temp_c": "ambient_temp",
    "initial_temp_c": "initial_temp",
    "end_dwell_s": "end_dwell",
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def default_config_dict() -> dict:
    text = resources.files("afsdml").joinpath("data/default_config.json").read_text()
    return json.loads(text)


def load_config(path=None) -> "RunConfig":
    """Load a config file merged over the packaged defaults (path=None gives
    the defaults themselves)."""
    raw = default_config_dict()
    if path is not None:
        try:
            user = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"config root must be an object: {path}")
        raw = _deep_merge(raw, user)
    return RunConfig(raw)


class RunConfig:
    def __init__(self, raw: dict):
        self.raw = raw
        canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
        self.config_hash = hashlib.sha256(canon.encode()).hexdigest()
        self._validate()

    def _section(self, name: str) -> dict:
        sec = self.raw.get(name)
        if not isinstance(sec, dict):
            raise ConfigError(f"missing or invalid config section {name!r}")
        return sec

    def _validate(self) -> None:
        for name in ("geometry", "process", "simulation", "alloys", "dataset", "ga", "models"):
            self._section(name)
        sim = self._section("simulation")
        if sim.get("target_reduction") not in ("max", "mean"):
            raise ConfigError("simulation.target_reduction must be 'max' or 'mean'")

    # --- materials ---------------------------------------------------------

    def alloy(self, name: str) -> AlloyProperties:
        base = builtin_alloy(name)
        overlays = self._section("alloys")
        if name not in overlays:
            raise ConfigError(
                f"no overlay for alloy {name!r}; configure alloys.{name}"
            )
        overlay = {k: v for k, v in overlays[name].items() if k != "provenance"}
        return with_overrides(base, overlay)

    def alloys_resolved(self, names=None) -> dict:
        out = {}
        for name in names or ALLOY_NAMES:
            props = self.alloy(name)
            entry = props.as_dict()
            entry["provenance"] = self._section("alloys")[name].get(
                "provenance", "config-supplied"
            )
            out[name] = entry
        return out

    # --- simulation --------------------------------------------------------

    def build_model(self) -> deposition.DepositionModel:
        g = self._section("geometry")
        p = self._section("process")
        try:
            return deposition.build_wall_model(
                nx=g["nx"], ny=g["ny"], nz=g["nz"],
                spacing=g["spacing_m"],
                substrate_layers=g["substrate_layers"],
                wall_layers=g["wall_layers"],
                wall_width=g["wall_width"],
                wall_length=g["wall_length"],
                traverse_speed=p["traverse_speed_m_per_s"],
                tool_radius=p["tool_radius_m"],
            )
        except KeyError as exc:
            raise ConfigError(f"geometry/process config missing key {exc}") from exc

    def process_params(self, **overrides) -> deposition.ProcessParameters:
        p = dict(self._section("process"))
        sim = self._section("simulation")
        unknown = set(overrides) - set(_PROCESS_KEYS) - set(_PROCESS_KEYS.values())
        if unknown:
            raise ConfigError(f"unknown process override(s): {', '.join(sorted(unknown))}")
        kwargs = {}
        for key, field in _PROCESS_KEYS.items():
            if key not in p:
                raise ConfigError(f"process config missing key {key!r}")
            kwargs[field] = p[key]
        for key, value in overrides.items():
            kwargs[_PROCESS_KEYS.get(key, key)] = value
        kwargs["deposition_temp"] = sim.get("deposition_temp_c")
        kwargs["bottom_boundary"] = sim.get("bottom_boundary", "fixed")
        try:
            return deposition.ProcessParameters(**kwargs)
        except deposition.ModelError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def dt_override(self) -> float | None:
        return self._section("simulation").get("dt_s")

    @property
    def target_reduction(self) -> str:
        return self._section("simulation")["target_reduction"]

    # --- dataset -----------------------------------------------------------

    @property
    def dataset_samples(self) -> int:
        return int(self._section("dataset")["samples"])

    @property
    def dataset_ranges(self) -> dict:
        ranges = self._section("dataset")["ranges"]
        return {k: tuple(v) for k, v in ranges.items()}

    # --- models / GA -------------------------------------------------------

    def tree_hp(self) -> TreeHyperparams:
        d = self._section("models")["dt"]
        return TreeHyperparams(d["max_depth"], d["min_samples_split"], d["min_samples_leaf"])

    def forest_hp(self) -> ForestHyperparams:
        f = self._section("models")["rf"]
        return ForestHyperparams(
            f["n_estimators"],
            TreeHyperparams(f["max_depth"], f["min_samples_split"], f["min_samples_leaf"]),
        )

    @property
    def bootstrap(self) -> bool:
        return bool(self._section("models").get("bootstrap", True))

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    def ga_config(self, seed: int | None = None, generations: int | None = None,
                  population: int | None = None) -> ga.GAConfig:
        g = self._section("ga")
        try:
            return ga.GAConfig(
                population_size=population if population is not None else g["population_size"],
                generations=generations if generations is not None else g["generations"],
                crossover_prob=g["crossover_prob"],
                mutation_prob=g["mutation_prob"],
                gene_bounds={k: tuple(v) for k, v in g["gene_bounds"].items()},
                tournament_size=g["tournament_size"],
                elitism_count=g["elitism_count"],
                seed=self.seed if seed is None else seed,
                fitness_epsilon=g["fitness_epsilon"],
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"invalid ga config: {exc}") from exc
