"""Command-line interface: train, impute, grid, plot.

Configs are JSON files validated against a strict schema (unknown keys are
rejected); defaults are materialized and the fully-resolved config is written
next to the outputs. Every run is reproducible from the config seed alone.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 diverged
training. All file outputs are written atomically (temp file + rename), and
grid runs resume by skipping groups whose records are already complete in the
existing metrics CSV.
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import json
import multiprocessing
import os
import shutil
import sys
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from pathlib import Path

import jsonschema
import numpy as np

from .baselines import MeanImputer, fit_mean_imputer, mean_impute
from .data import (
    DataMatrix,
    MaskMatrix,
    NoiseSource,
    NormalizationStats,
    _derive_seed,
    check_paired,
    fit_normalizer,
    generate_mcar_mask,
    transform,
)
from .datasets import (
    load_multi_var,
    load_single_var,
    make_synthetic,
    read_matrix_file,
    split_single_var,
    write_matrix_csv,
)
from .errors import ConfigError, DataError, TrainingDivergedError
from .evaluation import (
    GRID_METHODS,
    GridGroup,
    MetricsTable,
    compute_group,
    enumerate_groups,
    records_per_group,
)
from .imputer import impute
from .plots import plot_grid_heatmap, plot_mae_vs_rate, plot_per_sample, read_per_sample_csv
from .trainers import (
    TRAINERS,
    TrainConfig,
    load_trained_imputer,
    save_trained_imputer,
)

OUTPUT_DIR_ENV = "GANIMPUTE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "ganimpute-out"

_RATE = {"type": "number", "minimum": 0.0, "exclusiveMaximum": 1.0}
_RATE_LIST = {"type": "array", "items": _RATE, "minItems": 1}

TRAIN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_epochs": {"type": "integer", "minimum": 1},
        "batch_size": {"type": "integer", "minimum": 1},
        "learning_rate": {"type": "number", "exclusiveMinimum": 0.0},
        "critic_updates_base": {"type": "integer", "minimum": 1},
        "critic_updates_epoch_div": {"type": "integer", "minimum": 1},
        "lambda_gp": {"type": "number", "minimum": 0.0},
        "optimizer": {"enum": ["adam", "sgd"]},
        "adam_beta1": {"type": "number", "minimum": 0.0, "exclusiveMaximum": 1.0},
        "adam_beta2": {"type": "number", "minimum": 0.0, "exclusiveMaximum": 1.0},
        "noise": {"enum": ["uniform01", "standard_normal"]},
        "noise_scale": {"type": "number", "exclusiveMinimum": 0},
        "resample_noise_per_critic_step": {"type": "boolean"},
        "gain_reconstruction_alpha": {"type": "number", "minimum": 0.0},
        "misgan_tau": {"type": "number"},
        "predictor_epochs": {"type": "integer", "minimum": 1},
        "predictor_patience": {"type": "integer", "minimum": 1},
        "predictor_val_fraction": {"type": "number", "minimum": 0.0, "exclusiveMaximum": 1.0},
        "debug_checks": {"type": "boolean"},
        "energy_distance_samples": {"type": "integer", "minimum": 2},
    },
}

DATA_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["csv", "synthetic", "single_var_file", "multi_var_files"]},
        "path": {"type": "string"},
        "layout": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 3,
            "maxItems": 3,
        },
        "time_step_minutes": {"type": "integer", "minimum": 1},
        "completion_rounds": {"type": "integer", "minimum": 0},
        "synthetic_kind": {"enum": ["low_rank", "ar1", "uniform"]},
        "n_rows": {"type": "integer", "minimum": 2},
        "n_features": {"type": "integer", "minimum": 1},
        "params": {"type": "object"},
        "data_seed": {"type": "integer", "minimum": 0},
        "split_fractions": {
            "type": "array",
            "items": {"type": "number", "minimum": 0.0, "maximum": 1.0},
            "minItems": 3,
            "maxItems": 3,
        },
        "volume": {"type": "string"},
        "occupancy": {"type": "string"},
        "speed": {"type": "string"},
        "train_fraction": {"type": "number", "exclusiveMinimum": 0.0, "exclusiveMaximum": 1.0},
    },
}

GRID_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["type"],
    "properties": {
        "type": {"enum": ["imputation", "prediction", "multivar"]},
        "rates": _RATE_LIST,
        "train_rates": _RATE_LIST,
        "test_rates": _RATE_LIST,
        "n_runs": {"type": "integer", "minimum": 1},
        "per_sample": {"type": "boolean"},
    },
}

MASK_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "missing_rate": _RATE,
        "path": {"type": "string"},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
        "methods": {
            "type": "array",
            "items": {"enum": list(GRID_METHODS)},
            "minItems": 1,
        },
        "train": TRAIN_SCHEMA,
        "data": DATA_SCHEMA,
        "grid": GRID_SCHEMA,
        "mask": MASK_SCHEMA,
    },
}

_TRAIN_DEFAULTS = {
    f.name: f.default for f in dataclasses.fields(TrainConfig) if f.name != "seed"
}


# --- config loading ---------------------------------------------------------

def load_config(path: str | Path) -> dict:
    """Read, schema-validate, and default-fill a JSON config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config error at {exc.json_path}: {exc.message}") from exc
    return resolve_config(raw)


def resolve_config(raw: dict) -> dict:
    """Materialize defaults on top of a schema-valid config dict."""
    resolved = {
        "seed": int(raw.get("seed", 0)),
        "output_dir": raw.get("output_dir"),
        "methods": list(raw.get("methods", ["igani"])),
        "train": {**_TRAIN_DEFAULTS, **raw.get("train", {})},
        "mask": dict(raw.get("mask") or {"missing_rate": 0.2}),
        "data": copy.deepcopy(raw.get("data")),
        "grid": copy.deepcopy(raw.get("grid")),
    }
    mask = resolved["mask"]
    if "missing_rate" in mask and "path" in mask:
        raise ConfigError("config error at $.mask: give either missing_rate or path, not both")
    if not mask:
        mask["missing_rate"] = 0.2
    return resolved


def _train_config(cfg: dict) -> TrainConfig:
    return TrainConfig(seed=cfg["seed"], **cfg["train"])


def _output_dir(args: argparse.Namespace, cfg: dict) -> Path:
    if getattr(args, "output", None):
        return Path(args.output)
    if cfg.get("output_dir"):
        return Path(cfg["output_dir"])
    return Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))


def _require(cfg: dict, key: str, command: str) -> dict:
    section = cfg.get(key)
    if section is None:
        raise ConfigError(f"config error at $.{key}: the {command} command needs this section")
    return section


# --- atomic writes ----------------------------------------------------------

def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _atomic_write_metrics(table: MetricsTable, path: Path) -> None:
    tmp = path.with_name(path.name + ".tmp")
    table.write_csv(tmp)
    os.replace(tmp, path)


def _atomic_write_matrix_csv(values: np.ndarray, path: Path) -> None:
    tmp = path.with_name(path.name + ".tmp")
    write_matrix_csv(values, tmp)
    os.replace(tmp, path)


def _write_resolved_config(cfg: dict, out_dir: Path) -> None:
    _atomic_write_text(out_dir / "resolved_config.json",
                       json.dumps(cfg, indent=2, sort_keys=True) + "\n")


# --- data construction ------------------------------------------------------

def _build_matrix(data_cfg: dict, base_seed: int) -> DataMatrix:
    """A complete reference matrix from any data kind except multi_var_files."""
    kind = data_cfg["kind"]
    if kind == "csv":
        path = data_cfg.get("path")
        if not path:
            raise ConfigError("config error at $.data.path: csv data needs a path")
        return DataMatrix(read_matrix_file(path))
    if kind == "synthetic":
        if "synthetic_kind" not in data_cfg:
            raise ConfigError("config error at $.data.synthetic_kind: synthetic data needs a kind")
        ds = make_synthetic(
            data_cfg["synthetic_kind"],
            int(data_cfg.get("n_rows", 400)),
            int(data_cfg.get("n_features", 30)),
            params=data_cfg.get("params"),
            seed=int(data_cfg.get("data_seed", _derive_seed(base_seed, "synthetic-data"))),
        )
        return ds.matrix
    if kind == "single_var_file":
        if "path" not in data_cfg or "layout" not in data_cfg:
            raise ConfigError(
                "config error at $.data: single_var_file data needs path and layout"
            )
        ds = load_single_var(
            data_cfg["path"],
            tuple(data_cfg["layout"]),
            time_step_minutes=int(data_cfg.get("time_step_minutes", 10)),
            completion_rounds=int(data_cfg.get("completion_rounds", 10)),
        )
        return ds.matrix
    raise ConfigError(f"config error at $.data.kind: {kind!r} has no single reference matrix")


def _build_single_dataset(data_cfg: dict, base_seed: int):
    matrix = _build_matrix(data_cfg, base_seed)
    fractions = data_cfg.get("split_fractions")
    if fractions is None:
        raise ConfigError(
            "config error at $.data.split_fractions: single-variable grids need a three-way split"
        )
    from .datasets import SingleVarDataset

    ds = SingleVarDataset(matrix, time_step_minutes=int(data_cfg.get("time_step_minutes", 10)))
    return split_single_var(ds, tuple(float(f) for f in fractions))


def _build_multi_dataset(data_cfg: dict):
    if data_cfg["kind"] != "multi_var_files":
        raise ConfigError("config error at $.data.kind: multivar grids need multi_var_files data")
    for key in ("volume", "occupancy", "speed"):
        if key not in data_cfg:
            raise ConfigError(f"config error at $.data.{key}: multi_var_files data needs this path")
    return load_multi_var(
        data_cfg["volume"],
        data_cfg["occupancy"],
        data_cfg["speed"],
        train_fraction=float(data_cfg.get("train_fraction", 0.85)),
        time_step_minutes=int(data_cfg.get("time_step_minutes", 15)),
        completion_rounds=int(data_cfg.get("completion_rounds", 10)),
    )


def _build_mask(mask_cfg: dict, n: int, d: int, rng: NoiseSource) -> tuple[MaskMatrix, bool]:
    """The training mask, plus whether it was generated (vs loaded)."""
    if "path" in mask_cfg:
        return MaskMatrix(read_matrix_file(mask_cfg["path"])), False
    return generate_mcar_mask(n, d, float(mask_cfg["missing_rate"]), rng), True


# --- stats sidecar ----------------------------------------------------------

def _write_stats(stats: NormalizationStats, path: Path) -> None:
    payload = {
        "per_feature_min": stats.per_feature_min.tolist(),
        "per_feature_max": stats.per_feature_max.tolist(),
    }
    _atomic_write_text(path, json.dumps(payload) + "\n")


def _read_stats(path: Path) -> NormalizationStats:
    if not path.exists():
        raise DataError(f"normalization stats not found: {path}")
    payload = json.loads(path.read_text())
    return NormalizationStats(
        np.asarray(payload["per_feature_min"], dtype=np.float64),
        np.asarray(payload["per_feature_max"], dtype=np.float64),
    )


# --- train ------------------------------------------------------------------

def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    data_cfg = _require(cfg, "data", "train")
    out_dir = _output_dir(args, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    tc = _train_config(cfg)

    matrix = _build_matrix(data_cfg, cfg["seed"])
    rng = NoiseSource(tc.noise, _derive_seed(cfg["seed"], "cli-train"))
    mask, generated = _build_mask(cfg["mask"], matrix.n_samples, matrix.n_features, rng.child("mask"))
    check_paired(matrix, mask)
    stats = fit_normalizer(matrix, mask)
    x_norm = transform(matrix, stats)

    for method in cfg["methods"]:
        method_dir = out_dir / method
        if method_dir.exists():
            if not args.overwrite:
                raise ConfigError(f"{method_dir} already exists; pass --overwrite to replace it")
            shutil.rmtree(method_dir)
        print(f"train status=start method={method}")
        if method == "mean":
            model = fit_mean_imputer(x_norm, mask)
            method_dir.mkdir(parents=True)
            meta = {
                "method": "mean",
                "data_dim": x_norm.n_features,
                "config": dataclasses.asdict(tc),
                "per_feature_mean": model.per_feature_mean.tolist(),
            }
            _atomic_write_text(method_dir / "method.json",
                               json.dumps(meta, indent=2, sort_keys=True) + "\n")
        else:
            def progress(epoch: int, record: dict[str, float], method: str = method) -> None:
                parts = " ".join(f"{k}={v!r}" for k, v in sorted(record.items()))
                print(f"train status=epoch method={method} epoch={epoch} {parts}")

            method_cfg = dataclasses.replace(tc, seed=_derive_seed(cfg["seed"], f"train/{method}"))
            trained = TRAINERS[method](x_norm, mask, method_cfg, progress=progress)
            save_trained_imputer(trained, method_dir)
        _write_stats(stats, method_dir / "stats.json")
        print(f"train status=done method={method} checkpoint={method_dir}")

    if generated:
        _atomic_write_matrix_csv(mask.values, out_dir / "mask.csv")
    _write_resolved_config(cfg, out_dir)
    return 0


# --- impute -----------------------------------------------------------------

def cmd_impute(args: argparse.Namespace) -> int:
    ckpt = Path(args.checkpoint)
    meta_path = ckpt / "method.json"
    if not meta_path.exists():
        raise DataError(f"{ckpt} is not a checkpoint directory (no method.json)")
    meta = json.loads(meta_path.read_text())
    stats = _read_stats(ckpt / "stats.json")

    x = DataMatrix(read_matrix_file(args.data))
    mask = MaskMatrix(read_matrix_file(args.mask))
    check_paired(x, mask)
    x_norm = transform(x, stats)

    method = meta["method"]
    if method == "mean":
        model = MeanImputer(np.asarray(meta["per_feature_mean"], dtype=np.float64))
        v = mean_impute(x_norm, mask, model)
        seed = args.seed if args.seed is not None else int(meta["config"]["seed"])
    else:
        trained = load_trained_imputer(ckpt)
        seed = args.seed if args.seed is not None else trained.config.seed
        z_rng = NoiseSource(trained.config.noise, _derive_seed(seed, "cli-impute"))
        z = trained.config.noise_scale * z_rng.noise(x.n_samples, x.n_features)
        _, v = impute(trained.imputer, x_norm, mask, z)

    restored = transform(v, stats, "inverse")
    # Observed entries are copied bitwise from the input data, so only the
    # missing slots ever carry model output.
    out_values = np.where(mask.values > 0.5, x.values, restored.values)
    out_path = Path(args.out)
    if out_path.parent != Path(""):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write_matrix_csv(out_values, out_path)
    print(
        f"impute status=done method={method} rows={x.n_samples} "
        f"missing_fraction={mask.missing_fraction()!r} seed={seed} out={out_path}"
    )
    return 0


# --- grid -------------------------------------------------------------------

def _group_coords(group: GridGroup) -> tuple:
    return (group.method, *group.rates, group.run_id)


def _record_coords(grid_type: str, rec) -> tuple:
    if grid_type == "multivar":
        return (rec.method, rec.vmr, rec.omr, rec.smr, rec.run_id)
    return (rec.method, rec.train_missing_rate, rec.run_id)


def _load_done_groups(metrics_path: Path, grid_type: str, groups, test_rates) -> dict:
    """Records of already-complete groups from a previous (partial) run."""
    if not metrics_path.exists():
        return {}
    table = MetricsTable.read_csv(metrics_path)
    by_coords: dict[tuple, list] = {}
    for rec in table.records:
        by_coords.setdefault(_record_coords(grid_type, rec), []).append(rec)
    done = {}
    for group in groups:
        recs = by_coords.get(_group_coords(group), [])
        if len(recs) == records_per_group(group, test_rates):
            done[group.key] = recs
    return done


def _grid_plan(cfg: dict):
    """Dataset, groups, and test rates for the configured grid."""
    grid_cfg = _require(cfg, "grid", "grid")
    data_cfg = _require(cfg, "data", "grid")
    methods = cfg["methods"]
    grid_type = grid_cfg["type"]
    n_runs = int(grid_cfg.get("n_runs", 1))
    if grid_type == "multivar":
        rates = grid_cfg.get("rates")
        if not rates:
            raise ConfigError("config error at $.grid.rates: multivar grids need rates")
        dataset = _build_multi_dataset(data_cfg)
        triples = [(float(v), float(o), float(s)) for v in rates for o in rates for s in rates]
        groups = enumerate_groups("multivar", methods, triples, n_runs)
        return dataset, groups, None
    if grid_type == "prediction":
        train_rates = grid_cfg.get("train_rates")
        test_rates = grid_cfg.get("test_rates")
        if not train_rates or not test_rates:
            raise ConfigError(
                "config error at $.grid: prediction grids need train_rates and test_rates"
            )
        dataset = _build_single_dataset(data_cfg, cfg["seed"])
        groups = enumerate_groups("prediction", methods, [float(r) for r in train_rates], n_runs)
        return dataset, groups, [float(r) for r in test_rates]
    rates = grid_cfg.get("rates")
    if not rates:
        raise ConfigError("config error at $.grid.rates: imputation grids need rates")
    dataset = _build_single_dataset(data_cfg, cfg["seed"])
    groups = enumerate_groups("imputation", methods, [float(r) for r in rates], n_runs)
    return dataset, groups, None


def _write_canonical_metrics(groups, done: dict, metrics_path: Path) -> None:
    records = []
    for group in groups:
        records.extend(done.get(group.key, []))
    _atomic_write_metrics(MetricsTable(records), metrics_path)


def cmd_grid(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    out_dir = _output_dir(args, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    tc = _train_config(cfg)
    dataset, groups, test_rates = _grid_plan(cfg)
    grid_cfg = cfg["grid"]
    grid_type = grid_cfg["type"]

    metrics_path = out_dir / "metrics.csv"
    done = {} if args.overwrite else _load_done_groups(metrics_path, grid_type, groups, test_rates)
    pending = [g for g in groups if g.key not in done]
    if args.max_groups is not None:
        pending = pending[: args.max_groups]
    print(f"grid status=plan groups={len(groups)} cached={len(done)} pending={len(pending)}")
    for group in groups:
        if group.key in done:
            print(f"grid status=cached group={group.key}")

    # Dump per-feature errors once per method, for the first rate cell of run 0.
    per_sample_keys: set[str] = set()
    if grid_cfg.get("per_sample", False):
        first_rates: dict[str, tuple] = {}
        for group in groups:
            first_rates.setdefault(group.method, group.rates)
            if group.run_id == 0 and group.rates == first_rates[group.method]:
                per_sample_keys.add(group.key)

    per_sample_rows: list[tuple[str, int, int, float]] = []

    def finish(group: GridGroup, records, extras) -> None:
        done[group.key] = records
        per_sample_rows.extend((group.method, row, j, err) for row, j, err in extras)
        _write_canonical_metrics(groups, done, metrics_path)
        print(f"grid status=done records={len(records)} group={group.key}")

    if args.jobs > 1 and pending:
        context = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=args.jobs, mp_context=context) as pool:
            futures = {
                pool.submit(compute_group, dataset, group, tc, test_rates, group.key in per_sample_keys): group
                for group in pending
            }
            remaining = set(futures)
            while remaining:
                finished, remaining = wait(remaining, return_when=FIRST_COMPLETED)
                for future in finished:
                    records, extras = future.result()
                    finish(futures[future], records, extras)
    else:
        for group in pending:
            records, extras = compute_group(
                dataset, group, tc, test_rates, group.key in per_sample_keys
            )
            finish(group, records, extras)

    if not metrics_path.exists() or (pending or args.overwrite):
        _write_canonical_metrics(groups, done, metrics_path)
    if per_sample_rows:
        lines = ["method,row,feature_index,abs_error"]
        lines += [f"{m},{row},{j},{err!r}" for m, row, j, err in per_sample_rows]
        _atomic_write_text(out_dir / "per_sample.csv", "\n".join(lines) + "\n")
    _write_resolved_config(cfg, out_dir)
    complete = sum(1 for g in groups if g.key in done)
    print(f"grid status=complete groups={complete}/{len(groups)} metrics={metrics_path}")
    return 0


# --- plot -------------------------------------------------------------------

def cmd_plot(args: argparse.Namespace) -> int:
    out_path = Path(args.out)
    if args.kind == "per_sample":
        rows = read_per_sample_csv(args.metrics)
        plot_per_sample(rows, out_path)
    else:
        table = MetricsTable.read_csv(args.metrics)
        if args.kind == "mae_vs_rate":
            plot_mae_vs_rate(table, out_path, rate_field=args.rate_field)
        else:
            plot_grid_heatmap(table, out_path)
    print(f"plot status=done kind={args.kind} out={out_path}")
    return 0


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ganimpute",
        description="Train, apply, and evaluate generative imputers for traffic-style matrices.",
    )
    sub = parser.add_subparsers(dest="command")

    train = sub.add_parser("train", help="train imputers and write checkpoint directories")
    train.add_argument("--config", required=True, help="JSON config file")
    train.add_argument("--seed", type=int, default=None, help="override the config seed")
    train.add_argument("--output", default=None, help="output directory")
    train.add_argument("--overwrite", action="store_true", help="replace existing checkpoints")
    train.set_defaults(func=cmd_train)

    imp = sub.add_parser("impute", help="impute a CSV with a trained checkpoint")
    imp.add_argument("--checkpoint", required=True, help="checkpoint directory from `train`")
    imp.add_argument("--data", required=True, help="data file (original units)")
    imp.add_argument("--mask", required=True, help="mask file (1 observed, 0 missing)")
    imp.add_argument("--out", required=True, help="output CSV path")
    imp.add_argument("--seed", type=int, default=None, help="noise seed (default: checkpoint seed)")
    imp.set_defaults(func=cmd_impute)

    grid = sub.add_parser("grid", help="run an experiment grid with resumable groups")
    grid.add_argument("--config", required=True, help="JSON config file")
    grid.add_argument("--seed", type=int, default=None, help="override the config seed")
    grid.add_argument("--output", default=None, help="output directory")
    grid.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    grid.add_argument("--overwrite", action="store_true", help="recompute cached groups")
    grid.add_argument("--max-groups", type=int, default=None, help=argparse.SUPPRESS)
    grid.set_defaults(func=cmd_grid)

    plot = sub.add_parser("plot", help="render figures from grid outputs")
    plot.add_argument("--kind", required=True, choices=["mae_vs_rate", "heatmap", "per_sample"])
    plot.add_argument("--metrics", required=True, help="metrics or per-sample CSV")
    plot.add_argument("--out", required=True, help="output figure path (e.g. .svg)")
    plot.add_argument(
        "--rate-field",
        default="train_missing_rate",
        choices=["train_missing_rate", "test_missing_rate"],
        help="x axis for mae_vs_rate",
    )
    plot.set_defaults(func=cmd_plot)

    parser.set_defaults(func=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.func is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        return args.func(args)
    except TrainingDivergedError as exc:
        print(f"error: training diverged: {exc} (epoch={exc.epoch}, batch={exc.batch})",
              file=sys.stderr)
        return 4
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
