"""Command-line interface: simulate | dataset | train | predict.

Every command is deterministic given its config and seeds; outputs are
written atomically and each command leaves a manifest with sha256 digests of
what it wrote. Exit codes: 0 success, 1 usage/config error, 2 runtime/solver
error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds_mod
from . import deposition, ga, mechanics, trees
from .config import ConfigError, load_config
from .dataset import CSV_HEADER, FEATURE_NAMES, TARGET_NAMES, fmt9
from .fileio import atomic_write_text, sha256_of_file
from .manifest import write_manifest
from .materials import MaterialError
from .vtkio import export_vtk
from .workers import worker_count

TARGET_FLAGS = {"von-mises": "von_mises_mpa", "log-strain": "log_strain"}
MODEL_LABELS = {"dt": "DT", "rf": "RF", "ga-dt": "GA-DT", "ga-rf": "GA-RF"}

_USAGE_ERRORS = (ConfigError, MaterialError, ds_mod.DataError, deposition.ModelError, ValueError)
_RUNTIME_ERRORS = (deposition.SolverError, mechanics.MechanicsError, RuntimeError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="afsdml",
        description="Deposition simulation, dataset sweeps, and GA-tuned tree "
                    "regressors for peak stress/strain prediction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one deposition and export the final fields")
    p.add_argument("--config", help="JSON config merged over the packaged defaults")
    p.add_argument("--alloy", required=True, help="alloy name, e.g. AA2024")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="process parameter override, e.g. heat_source_w_per_m3=2e9")
    p.add_argument("--plot", action="store_true", help="also render history figure")

    p = sub.add_parser("dataset", help="generate the parametric sweep dataset CSV")
    p.add_argument("--config", help="JSON config merged over the packaged defaults")
    p.add_argument("--samples", type=int, default=None, help="sample count (divisible by 5)")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--out", default="dataset.csv", help="output CSV path")

    p = sub.add_parser("train", help="train a regressor on a dataset CSV")
    p.add_argument("--dataset", required=True, help="dataset CSV path")
    p.add_argument("--config", help="JSON config merged over the packaged defaults")
    p.add_argument("--model", required=True, choices=sorted(MODEL_LABELS))
    p.add_argument("--target", required=True, choices=sorted(TARGET_FLAGS))
    p.add_argument("--out", default="model.json", help="model document path")
    p.add_argument("--curve", default=None,
                   help="convergence curve CSV (GA models; default <out>_curve.csv)")
    p.add_argument("--seed", type=int, default=None, help="training seed")
    p.add_argument("--generations", type=int, default=None, help="override GA generations")
    p.add_argument("--population", type=int, default=None, help="override GA population size")
    p.add_argument("--fitness-on-test", action="store_true",
                   help="score GA fitness on the test split (leaks test data into "
                        "model selection) instead of a validation carve-out")
    p.add_argument("--plot", action="store_true",
                   help="render prediction scatter (and GA convergence) figures")

    p = sub.add_parser("predict", help="append model predictions to a feature CSV")
    p.add_argument("--model", required=True, help="model document path")
    p.add_argument("--features", required=True, help="CSV with the 5 feature columns")
    p.add_argument("--out", default="predictions.csv", help="output CSV path")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "simulate": cmd_simulate,
        "dataset": cmd_dataset,
        "train": cmd_train,
        "predict": cmd_predict,
    }[args.command]
    try:
        handler(args)
    except _RUNTIME_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _parse_overrides(pairs) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override must look like KEY=VALUE, got {pair!r}")
        key, _, value = pair.partition("=")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"override value for {key!r} is not a number: {value!r}") from None
    return out


def cmd_simulate(args) -> None:
    cfg = load_config(args.config)
    props = cfg.alloy(args.alloy)
    model = cfg.build_model()
    params = cfg.process_params(**_parse_overrides(args.override))
    result = deposition.run_deposition(model, params, props, dt=cfg.dt_override)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fields = {
        "T": result.thermal.temperature,
        "GRADT": deposition.temperature_gradient(result.thermal, model),
        "HFL": deposition.heat_flux(result.thermal, model, props),
        "SIGMA_VM": result.mech.sigma_vm,
        "LE": result.mech.log_strain,
        "PEEQ": result.mech.peeq,
    }
    vtk_path = out / "fields.vtk"
    export_vtk(vtk_path, fields, spacing=model.spacing)

    hist_path = out / "history.csv"
    lines = [",".join(deposition.SimulationResult.HISTORY_COLUMNS)]
    lines += [",".join(fmt9(v) for v in row) for row in result.history]
    atomic_write_text(hist_path, "\n".join(lines) + "\n")

    outputs = {"fields": vtk_path, "history": hist_path}
    if args.plot:
        from . import plots

        fig_path = out / "history.png"
        plots.save_history_figure(result.history, fig_path, f"{args.alloy} deposition history")
        outputs["history_figure"] = fig_path

    write_manifest(
        out / "manifest.json",
        command="simulate",
        config_hash=cfg.config_hash,
        alloys=cfg.alloys_resolved([args.alloy]),
        outputs=outputs,
        extra={"alloy": args.alloy, "overrides": _parse_overrides(args.override)},
    )
    print(f"wrote {vtk_path} and {hist_path}")


def cmd_dataset(args) -> None:
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    n = args.samples
    ds = ds_mod.generate(cfg, seed=seed, workers=worker_count(), n=n)
    out = Path(args.out)
    ds_mod.write_csv(ds, out)
    write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"),
        command="dataset",
        config_hash=cfg.config_hash,
        seeds={"master": seed},
        alloys=cfg.alloys_resolved(),
        outputs={"dataset": out},
        extra={"samples": len(ds), "train_rows": len(ds.train_idx),
               "test_rows": len(ds.test_idx)},
    )
    print(f"wrote {out}: {len(ds)} rows "
          f"({len(ds.train_idx)} train / {len(ds.test_idx)} test)")


def _validation_carveout(n_train: int, seed: int):
    """75/25 carve of the train rows for GA fitness, keeping test untouched."""
    perm = np.random.default_rng(np.random.SeedSequence([int(seed), 4])).permutation(n_train)
    cut = int(0.75 * n_train)
    return sorted(int(i) for i in perm[:cut]), sorted(int(i) for i in perm[cut:])


def train_on_dataset(ds, model_name: str, target_col: str, cfg, seed: int,
                     generations: int | None = None, population: int | None = None,
                     fitness_on_test: bool = False, workers: int = 1):
    """Fit the requested model on the dataset's train split and score it on
    the test split. Returns (model, metrics, ga_report_or_None)."""
    if not ds.train_idx or not ds.test_idx:
        raise ds_mod.DataError("dataset has an empty train or test split")
    X = ds.feature_matrix()
    y = ds.target_vector(target_col)
    tr = list(ds.train_idx)
    te = list(ds.test_idx)
    X_tr, y_tr, X_te, y_te = X[tr], y[tr], X[te], y[te]

    report = None
    if model_name in ("ga-dt", "ga-rf"):
        gacfg = cfg.ga_config(seed=seed, generations=generations, population=population)
        kind = "DT" if model_name == "ga-dt" else "RF"
        if fitness_on_test:
            fit_data, eval_data = (X_tr, y_tr), (X_te, y_te)
        else:
            fit_rows, val_rows = _validation_carveout(len(tr), seed)
            fit_data = (X_tr[fit_rows], y_tr[fit_rows])
            eval_data = (X_tr[val_rows], y_tr[val_rows])
        report = ga.run_ga(gacfg, kind, fit_data, eval_data,
                           workers=workers, bootstrap=cfg.bootstrap)
        model = ga.build_model(report.best_genome, X_tr, y_tr,
                               ga_seed=gacfg.seed, bootstrap=cfg.bootstrap)
    elif model_name == "dt":
        model = trees.fit_tree(X_tr, y_tr, cfg.tree_hp(), seed=seed)
    elif model_name == "rf":
        model = trees.fit_forest(X_tr, y_tr, cfg.forest_hp(), seed=seed,
                                 bootstrap=cfg.bootstrap)
    else:
        raise ValueError(f"unknown model {model_name!r}")

    metrics = trees.compute_metrics(y_te, model.predict(X_te))
    return model, metrics, report


def cmd_train(args) -> None:
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    target_col = TARGET_FLAGS[args.target]
    label = MODEL_LABELS[args.model]

    ds = ds_mod.read_csv(args.dataset)
    model, metrics, report = train_on_dataset(
        ds, args.model, target_col, cfg, seed,
        generations=args.generations, population=args.population,
        fitness_on_test=args.fitness_on_test, workers=worker_count(),
    )
    best_named = report.best_genome.named() if report is not None else None
    X = ds.feature_matrix()
    y = ds.target_vector(target_col)
    te = list(ds.test_idx)
    X_te, y_te = X[te], y[te]
    tr = list(ds.train_idx)

    print(f"{'Algorithm':<10}{'RMSE':>14}{'MAE':>14}{'R2':>10}")
    print(f"{label:<10}{metrics.rmse:>14.6g}{metrics.mae:>14.6g}{metrics.r2:>10.4f}")
    if best_named is not None:
        pretty = ", ".join(f"{k}={v}" for k, v in best_named.items())
        print(f"Best hyperparameters: {pretty}")

    metadata = {
        "algorithm": label,
        "target": target_col,
        "feature_columns": list(FEATURE_NAMES),
        "train_rows": len(tr),
        "test_rows": len(te),
        "dataset_sha256": sha256_of_file(args.dataset),
        "metrics": {"rmse": metrics.rmse, "mae": metrics.mae, "r2": metrics.r2},
    }
    if best_named is not None:
        metadata["best_hyperparams"] = best_named
        metadata["fitness_on_test"] = bool(args.fitness_on_test)

    out = Path(args.out)
    atomic_write_text(out, trees.serialize_model(model, metadata) + "\n")
    outputs = {"model": out}

    if report is not None:
        curve_path = Path(args.curve) if args.curve else out.with_name(out.stem + "_curve.csv")
        lines = ["generation,best_fitness,best_mse"]
        lines += [
            f"{g + 1},{fmt9(report.curve[g])},{fmt9(report.mse_curve[g])}"
            for g in range(len(report.curve))
        ]
        atomic_write_text(curve_path, "\n".join(lines) + "\n")
        outputs["curve"] = curve_path

    if args.plot:
        from . import plots

        scatter = out.with_name(out.stem + "_predictions.png")
        plots.save_prediction_figure(y_te, model.predict(X_te), scatter,
                                     f"{label}: {args.target} (test split)")
        outputs["prediction_figure"] = scatter
        if report is not None:
            curve_fig = out.with_name(out.stem + "_curve.png")
            plots.save_convergence_figure(report.curve, report.mse_curve, curve_fig,
                                          f"{label} convergence: {args.target}")
            outputs["curve_figure"] = curve_fig

    write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"),
        command="train",
        config_hash=cfg.config_hash,
        seeds={"train": seed},
        outputs=outputs,
        extra={"model": args.model, "target": target_col,
               "metrics": metadata["metrics"],
               "ga_evaluations": report.evaluations if report else 0},
    )


def cmd_predict(args) -> None:
    model = trees.deserialize_model(Path(args.model).read_text(encoding="utf-8"))
    with open(args.features, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = [ln for ln in text.split("\n") if ln]
    if not lines:
        raise ds_mod.DataError("features file is empty (need at least a header)")
    header = lines[0].split(",")
    missing = [c for c in FEATURE_NAMES if c not in header]
    if missing:
        raise ds_mod.DataError(f"features file missing column(s): {', '.join(missing)}")
    cols = [header.index(c) for c in FEATURE_NAMES]

    rows = []
    for row_no, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise ds_mod.DataError(f"malformed row {row_no}: expected {len(header)} cells")
        try:
            rows.append([float(cells[c]) for c in cols])
        except ValueError as exc:
            raise ds_mod.DataError(f"malformed row {row_no}: {exc}") from exc

    out_lines = [lines[0] + ",prediction"]
    if rows:
        preds = model.predict(np.array(rows, dtype=np.float64))
        out_lines += [f"{line},{fmt9(p)}" for line, p in zip(lines[1:], preds)]
    atomic_write_text(args.out, "\n".join(out_lines) + "\n")
    print(f"wrote {args.out}: {len(rows)} prediction(s)")


if __name__ == "__main__":
    sys.exit(main())
