"""Parametric sweep dataset: five process/material features, two targets.

Each sample is one deposition run. Process parameters are drawn uniformly
per alloy block from configured ranges; alloy identity enters the feature
set only through elastic modulus and specific heat. Targets are the spatial
maximum (configurable: mean) of von Mises stress and logarithmic strain over
active voxels at the final time.

All floats are quantized to 9 significant digits when a sample is created,
which makes the CSV serialization an exact round trip and guarantees the
simulation consumed exactly the values the CSV records.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .deposition import run_deposition
from .materials import ALLOY_NAMES

FEATURE_NAMES = (
    "elastic_modulus_gpa",
    "specific_heat_j_per_kgk",
    "shear_translation_n",
    "shear_rotational_nm",
    "heat_source_w_per_m3",
)
TARGET_NAMES = ("von_mises_mpa", "log_strain")
CSV_HEADER = "alloy," + ",".join(FEATURE_NAMES + TARGET_NAMES) + ",split"

# range keys, in draw order
RANGE_NAMES = ("heat_source_w_per_m3", "shear_translation_n", "shear_rotational_nm")


class DataError(ValueError):
    """Invalid sampling request or malformed dataset file."""


def fmt9(x: float) -> str:
    """Canonical 9-significant-digit decimal serialization."""
    return format(float(x), ".9g")


def q9(x: float) -> float:
    """Quantize to the nearest 9-significant-digit representable value."""
    return float(fmt9(x))


@dataclass(frozen=True)
class Sample:
    alloy: str
    features: tuple[float, ...]  # order: FEATURE_NAMES
    targets: tuple[float, float]  # order: TARGET_NAMES

    def __post_init__(self):
        if len(self.features) != len(FEATURE_NAMES) or len(self.targets) != 2:
            raise DataError("sample needs exactly 5 features and 2 targets")
        vals = (*self.features, *self.targets)
        if not all(np.isfinite(v) for v in vals):
            raise DataError(f"non-finite sample values for alloy {self.alloy}")
        if any(t < 0 for t in self.targets):
            raise DataError(f"negative target for alloy {self.alloy}")


@dataclass
class Dataset:
    samples: list[Sample]
    train_idx: tuple[int, ...] = ()
    test_idx: tuple[int, ...] = ()
    seed: int | None = None
    config_hash: str | None = None
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    def feature_matrix(self) -> np.ndarray:
        return np.array([s.features for s in self.samples], dtype=np.float64)

    def target_vector(self, name: str) -> np.ndarray:
        col = TARGET_NAMES.index(name)
        return np.array([s.targets[col] for s in self.samples], dtype=np.float64)


def sample_parameters(n: int, ranges: dict, seed: int) -> list[tuple[str, dict]]:
    """n/5 uniform process-parameter draws per alloy, in (alloy, draw) order.

    `ranges` maps each of RANGE_NAMES to (lo, hi), lo < hi. Draws are
    quantized to 9 significant digits so they survive CSV round trips.
    """
    if n <= 0 or n % len(ALLOY_NAMES) != 0:
        raise DataError(f"samples must be divisible by {len(ALLOY_NAMES)}, got {n}")
    for name in RANGE_NAMES:
        if name not in ranges:
            raise DataError(f"missing range for {name}")
        lo, hi = ranges[name]
        if not lo < hi:
            raise DataError(f"invalid range for {name}: ({lo}, {hi})")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
    per_alloy = n // len(ALLOY_NAMES)
    out = []
    for alloy in ALLOY_NAMES:
        for _ in range(per_alloy):
            draws = {
                name: q9(rng.uniform(*ranges[name])) for name in RANGE_NAMES
            }
            out.append((alloy, draws))
    return out


def extract_targets(result, reduction: str = "max") -> tuple[float, float]:
    """Scalar (von Mises MPa, log strain) reduction of the final field."""
    act = result.thermal.active
    if not act.any():
        raise DataError("no active voxels at final time")
    if reduction == "max":
        return float(result.mech.sigma_vm[act].max()), float(result.mech.log_strain[act].max())
    if reduction == "mean":
        return float(result.mech.sigma_vm[act].mean()), float(result.mech.log_strain[act].mean())
    raise DataError(f"unknown target reduction {reduction!r}")


def split_indices(n: int, ratio: float, seed: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Seeded uniform shuffle; first floor(ratio*n) indices train, rest test.
    Both halves are returned sorted ascending (canonical order)."""
    if n == 0:
        raise DataError("cannot split an empty dataset")
    if not 0.0 < ratio < 1.0:
        raise DataError(f"split ratio must lie in (0, 1), got {ratio}")
    perm = np.random.default_rng(np.random.SeedSequence([int(seed), 2])).permutation(n)
    cut = int(ratio * n)
    train = tuple(sorted(int(i) for i in perm[:cut]))
    test = tuple(sorted(int(i) for i in perm[cut:]))
    return train, test


def split(dataset: Dataset, ratio: float, seed: int):
    """Record a train/test partition on the dataset and return it."""
    train, test = split_indices(len(dataset), ratio, seed)
    dataset.train_idx = train
    dataset.test_idx = test
    return train, test


def _simulate_task(task):
    model, params, props, reduction, dt = task
    result = run_deposition(model, params, props, dt=dt, record_history=False)
    return extract_targets(result, reduction)


def generate(config, seed: int, workers: int = 1, n: int | None = None) -> Dataset:
    """Run one simulation per parameter draw and assemble the dataset.

    `config` is a RunConfig; n defaults to the configured sample count (200).
    Sample simulations are independent; with workers > 1 they execute in a
    process pool and are reassembled in draw order, so the result does not
    depend on scheduling.
    """
    from .workers import parallel_map  # local import to avoid cycles

    n = config.dataset_samples if n is None else n
    draws = sample_parameters(n, config.dataset_ranges, seed)
    model = config.build_model()
    reduction = config.target_reduction
    dt = config.dt_override

    tasks = []
    for alloy, d in draws:
        props = config.alloy(alloy)
        params = config.process_params(
            heat_source=d["heat_source_w_per_m3"],
            shear_translation=d["shear_translation_n"],
            shear_rotational=d["shear_rotational_nm"],
        )
        tasks.append((model, params, props, reduction, dt))

    try:
        results = parallel_map(_simulate_task, tasks, workers=workers, kind="process")
    except Exception as exc:
        raise DataError(f"simulation failed during dataset generation: {exc}") from exc

    samples = []
    for (alloy, d), (vm, le) in zip(draws, results):
        props = config.alloy(alloy)
        features = (
            q9(props.elastic_modulus),
            q9(props.specific_heat),
            d["shear_translation_n"],
            d["shear_rotational_nm"],
            d["heat_source_w_per_m3"],
        )
        samples.append(Sample(alloy, features, (q9(vm), q9(le))))

    ds = Dataset(samples, seed=seed, config_hash=config.config_hash)
    split(ds, 0.8, seed)
    return ds


def write_csv(dataset: Dataset, path) -> None:
    from .fileio import atomic_write_text

    train = set(dataset.train_idx)
    lines = [CSV_HEADER]
    for i, s in enumerate(dataset.samples):
        tag = "train" if i in train else "test"
        cells = [s.alloy] + [fmt9(v) for v in s.features] + [fmt9(v) for v in s.targets] + [tag]
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path) -> Dataset:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != CSV_HEADER:
        got = lines[0] if lines else "<empty>"
        raise DataError(f"unexpected dataset header: {got!r}")
    samples = []
    train, test = [], []
    for row_no, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(FEATURE_NAMES) + len(TARGET_NAMES) + 2:
            raise DataError(f"malformed dataset row {row_no}: {line!r}")
        alloy = cells[0]
        try:
            features = tuple(float(c) for c in cells[1:6])
            targets = (float(cells[6]), float(cells[7]))
        except ValueError as exc:
            raise DataError(f"malformed dataset row {row_no}: {exc}") from exc
        tag = cells[8]
        if tag not in ("train", "test"):
            raise DataError(f"bad split tag {tag!r} on row {row_no}")
        (train if tag == "train" else test).append(len(samples))
        samples.append(Sample(alloy, features, targets))
    return Dataset(samples, train_idx=tuple(train), test_idx=tuple(test))
