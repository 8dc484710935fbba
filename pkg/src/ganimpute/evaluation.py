"""Metrics, experiment grids, and their tabular records.

Three grid shapes are supported, all built from the same group machinery so
callers (and the CLI's resumable runner) can enumerate, skip, and persist
work per training group:

* ``imputation``: train at rate r on the imputer-train split, score masked MAE
  of the imputed remaining splits at the same rate (one record per group);
* ``prediction``: train an imputer at a train rate, train a one-step predictor
  on the imputed predictor-train split, score prediction MAE on the
  predictor-test split imputed at each test rate (one record per test rate);
* ``multivar``: per-variable-block masks at a rate triple on a three-variable
  dataset, masked MAE per variable block (three records per group).

Every group derives its own seed from the base config seed and the group
coordinates, so results are independent of execution order and safe to
compute in parallel.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .baselines import MeanImputer, fit_mean_imputer, mean_impute
from .data import (
    DataMatrix,
    MaskMatrix,
    NoiseSource,
    _derive_seed,
    fit_normalizer,
    generate_mcar_mask,
    transform,
)
from .datasets import MultiVarDataset, SingleVarDataset, VARIABLE_NAMES, per_variable_mask
from .errors import ConfigError, DataError, GanImputeError
from .imputer import impute
from .trainers import TRAINERS, TrainConfig, predict, train_predictor

GRID_METHODS = ("igani", "gain", "misgan", "mean")
GRID_TYPES = ("imputation", "prediction", "multivar")

CSV_COLUMNS = (
    "method", "split", "train_missing_rate", "test_missing_rate",
    "vmr", "omr", "smr", "variable", "mae", "run_id", "seed",
)


def masked_mae(truth, imputed, m) -> float | None:
    """Mean absolute error over the missing entries only.

    Returns ``None`` (an explicit not-a-result marker) when the mask has no
    missing entries, rather than a silent zero.
    """
    truth_arr = truth.values if isinstance(truth, DataMatrix) else np.asarray(truth, dtype=np.float64)
    imp_arr = imputed.values if isinstance(imputed, DataMatrix) else np.asarray(imputed, dtype=np.float64)
    m_arr = m.values if isinstance(m, MaskMatrix) else np.asarray(m, dtype=np.float64)
    if truth_arr.shape != imp_arr.shape or truth_arr.shape != m_arr.shape:
        raise DataError(
            f"masked_mae shapes disagree: {truth_arr.shape}, {imp_arr.shape}, {m_arr.shape}"
        )
    missing = m_arr < 0.5
    if not missing.any():
        return None
    return float(np.abs(truth_arr[missing] - imp_arr[missing]).mean())


def per_sample_errors(truth, imputed, m, row: int) -> tuple[np.ndarray, np.ndarray]:
    """Absolute errors at one row's missing slots, plus those feature indices."""
    truth_arr = truth.values if isinstance(truth, DataMatrix) else np.asarray(truth, dtype=np.float64)
    imp_arr = imputed.values if isinstance(imputed, DataMatrix) else np.asarray(imputed, dtype=np.float64)
    m_arr = m.values if isinstance(m, MaskMatrix) else np.asarray(m, dtype=np.float64)
    if not 0 <= row < truth_arr.shape[0]:
        raise DataError(f"row {row} out of range for {truth_arr.shape[0]} rows")
    missing_idx = np.flatnonzero(m_arr[row] < 0.5)
    errors = np.abs(truth_arr[row, missing_idx] - imp_arr[row, missing_idx])
    return errors, missing_idx


def energy_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Energy distance between two scalar samples.

    ``2 E|A - B| - E|A - A'| - E|B - B'|``; zero iff the distributions match.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise DataError("energy_distance needs non-empty samples")
    cross = np.abs(a[:, None] - b[None, :]).mean()
    within_a = np.abs(a[:, None] - a[None, :]).mean()
    within_b = np.abs(b[:, None] - b[None, :]).mean()
    return float(2.0 * cross - within_a - within_b)


@dataclass(frozen=True)
class MetricsRecord:
    """One grid measurement: identifying coordinates plus the MAE."""

    method: str
    split: str
    mae: float
    run_id: int
    seed: int
    train_missing_rate: float | None = None
    test_missing_rate: float | None = None
    vmr: float | None = None
    omr: float | None = None
    smr: float | None = None
    variable: str | None = None

    def __post_init__(self) -> None:
        if not self.method or not self.split:
            raise DataError("method and split must be non-empty")
        if not math.isfinite(self.mae) or self.mae < 0.0:
            raise DataError(f"mae must be finite and non-negative, got {self.mae}")
        if self.run_id < 0:
            raise DataError("run_id must be non-negative")

    def cell_key(self) -> tuple:
        """Identifying coordinates without the per-run fields."""
        return (
            self.method, self.split, self.train_missing_rate, self.test_missing_rate,
            self.vmr, self.omr, self.smr, self.variable,
        )


@dataclass
class MetricsTable:
    """A list of records with aggregation and CSV persistence."""

    records: list[MetricsRecord]

    def aggregate(self) -> dict[tuple, dict[str, float]]:
        """Per-cell mean/std (population) and count over runs."""
        cells: dict[tuple, list[float]] = {}
        for rec in self.records:
            cells.setdefault(rec.cell_key(), []).append(rec.mae)
        return {
            key: {
                "mean": float(np.mean(values)),
                "std": float(np.std(values)),
                "count": len(values),
            }
            for key, values in cells.items()
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for rec in self.records:
                row = []
                for col in CSV_COLUMNS:
                    value = getattr(rec, col)
                    if value is None:
                        row.append("")
                    elif isinstance(value, float):
                        row.append(repr(value))
                    else:
                        row.append(str(value))
                writer.writerow(row)

    @staticmethod
    def read_csv(path: str | Path) -> "MetricsTable":
        path = Path(path)
        if not path.exists():
            raise DataError(f"metrics CSV not found: {path}")
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
                raise DataError(f"{path} does not have the metrics CSV header")
            records = []
            for row in reader:
                records.append(MetricsRecord(
                    method=row["method"],
                    split=row["split"],
                    mae=float(row["mae"]),
                    run_id=int(row["run_id"]),
                    seed=int(row["seed"]),
                    train_missing_rate=float(row["train_missing_rate"]) if row["train_missing_rate"] else None,
                    test_missing_rate=float(row["test_missing_rate"]) if row["test_missing_rate"] else None,
                    vmr=float(row["vmr"]) if row["vmr"] else None,
                    omr=float(row["omr"]) if row["omr"] else None,
                    smr=float(row["smr"]) if row["smr"] else None,
                    variable=row["variable"] or None,
                ))
        return MetricsTable(records)


@dataclass(frozen=True)
class GridGroup:
    """One unit of grid work: a (method, rates, run) training with its records."""

    grid_type: str
    method: str
    rates: tuple[float, ...]
    run_id: int

    @property
    def key(self) -> str:
        rates = ",".join(repr(float(r)) for r in self.rates)
        return f"{self.grid_type}|{self.method}|{rates}|run={self.run_id}"


def _validate_grid_args(grid_type: str, methods: Sequence[str], rate_lists: Iterable[Sequence[float]], n_runs: int) -> None:
    if grid_type not in GRID_TYPES:
        raise ConfigError(f"unknown grid type {grid_type!r}")
    if not methods:
        raise ConfigError("need at least one method")
    for method in methods:
        if method not in GRID_METHODS:
            raise ConfigError(f"unknown method {method!r}; expected one of {GRID_METHODS}")
    for rates in rate_lists:
        if len(rates) == 0:
            raise ConfigError("rate lists must be non-empty")
        for rate in rates:
            if not 0.0 <= float(rate) < 1.0:
                raise ConfigError(f"missing rates must lie in [0, 1), got {rate}")
    if n_runs < 1:
        raise ConfigError("n_runs must be at least 1")


def enumerate_groups(
    grid_type: str,
    methods: Sequence[str],
    rate_axis: Sequence[float] | Sequence[tuple[float, float, float]],
    n_runs: int,
) -> list[GridGroup]:
    """All groups of a grid in deterministic order: methods, then rates, then runs."""
    groups = []
    for method in methods:
        for rates in rate_axis:
            tup = tuple(float(r) for r in (rates if isinstance(rates, (tuple, list)) else (rates,)))
            for run_id in range(n_runs):
                groups.append(GridGroup(grid_type, method, tup, run_id))
    return groups


def records_per_group(group: GridGroup, test_rates: Sequence[float] | None) -> int:
    if group.grid_type == "prediction":
        if not test_rates:
            raise ConfigError("prediction grids need test rates")
        return len(test_rates)
    if group.grid_type == "multivar":
        return len(VARIABLE_NAMES)
    return 1


def _group_noise(group: GridGroup, cfg: TrainConfig) -> NoiseSource:
    return NoiseSource(cfg.noise, _derive_seed(cfg.seed, group.key))


def _fit_group_imputer(method: str, x_norm: DataMatrix, mask: MaskMatrix, cfg: TrainConfig, seed: int):
    if method == "mean":
        return fit_mean_imputer(x_norm, mask)
    run_cfg = dataclasses.replace(cfg, seed=seed)
    return TRAINERS[method](x_norm, mask, run_cfg)


def _apply_imputer(model, method: str, x_norm: DataMatrix, mask: MaskMatrix, rng: NoiseSource) -> DataMatrix:
    if method == "mean":
        assert isinstance(model, MeanImputer)
        return mean_impute(x_norm, mask, model)
    z = model.config.noise_scale * rng.noise(x_norm.n_samples, x_norm.n_features)
    _, v = impute(model.imputer, x_norm, mask, z)
    return v


def compute_group(
    dataset: SingleVarDataset | MultiVarDataset,
    group: GridGroup,
    cfg: TrainConfig,
    test_rates: Sequence[float] | None = None,
    include_per_sample: bool = False,
) -> tuple[list[MetricsRecord], list[tuple[int, int, float]]]:
    """Run one group; returns its records and optional per-sample error rows
    ``(row, feature_index, abs_error)`` from the evaluation portion.

    Failures are re-raised with the group coordinates prepended.
    """
    try:
        if group.grid_type == "prediction":
            return _compute_prediction_group(dataset, group, cfg, test_rates, include_per_sample)
        if group.grid_type == "multivar":
            return _compute_multivar_group(dataset, group, cfg, include_per_sample)
        return _compute_imputation_group(dataset, group, cfg, include_per_sample)
    except GanImputeError as exc:
        exc.args = (f"[{group.key}] {exc.args[0]}",) + exc.args[1:]
        raise


def _per_sample_rows(truth: DataMatrix, imputed: DataMatrix, mask: MaskMatrix) -> list[tuple[int, int, float]]:
    """Errors for the first row that actually has missing entries."""
    missing_rows = np.flatnonzero((mask.values < 0.5).any(axis=1))
    if missing_rows.size == 0:
        return []
    row = int(missing_rows[0])
    errors, idx = per_sample_errors(truth, imputed, mask, row)
    return [(row, int(j), float(e)) for j, e in zip(idx, errors)]


def _require_single_split(dataset) -> SingleVarDataset:
    if not isinstance(dataset, SingleVarDataset):
        raise DataError("this grid needs a single-variable dataset")
    if dataset.split is None:
        raise DataError("dataset has no split; call split_single_var first")
    return dataset


def _compute_imputation_group(dataset, group, cfg, include_per_sample):
    dataset = _require_single_split(dataset)
    rate = group.rates[0]
    rng = _group_noise(group, cfg)
    x_fit = dataset.rows("imputer_train")
    x_eval_parts = [dataset.rows("predictor_train"), dataset.rows("predictor_test")]
    d = x_fit.n_features
    mask_fit = generate_mcar_mask(x_fit.n_samples, d, rate, rng.child("mask-fit"))
    masks_eval = [
        generate_mcar_mask(part.n_samples, d, rate, rng.child(f"mask-eval-{i}"))
        for i, part in enumerate(x_eval_parts)
    ]
    stats = fit_normalizer(x_fit, mask_fit)
    xn_fit = transform(x_fit, stats)
    model = _fit_group_imputer(group.method, xn_fit, mask_fit, cfg, _derive_seed(cfg.seed, group.key + "/train"))
    truth_rows, imputed_rows, mask_rows = [], [], []
    for i, (part, mask) in enumerate(zip(x_eval_parts, masks_eval)):
        xn_part = transform(part, stats)
        v = _apply_imputer(model, group.method, xn_part, mask, rng.child(f"z-eval-{i}"))
        truth_rows.append(xn_part.values)
        imputed_rows.append(v.values)
        mask_rows.append(mask.values)
    truth = DataMatrix(np.vstack(truth_rows), normalized=True)
    imputed = DataMatrix(np.vstack(imputed_rows), normalized=True)
    mask_all = MaskMatrix(np.vstack(mask_rows))
    mae = masked_mae(truth, imputed, mask_all)
    if mae is None:
        raise DataError("evaluation mask has no missing entries; no imputation error to report")
    record = MetricsRecord(
        method=group.method,
        split="imputation_eval",
        mae=mae,
        run_id=group.run_id,
        seed=_derive_seed(cfg.seed, group.key),
        train_missing_rate=rate,
        test_missing_rate=rate,
    )
    per_sample = _per_sample_rows(truth, imputed, mask_all) if include_per_sample else []
    return [record], per_sample


def _compute_prediction_group(dataset, group, cfg, test_rates, include_per_sample):
    dataset = _require_single_split(dataset)
    if not test_rates:
        raise ConfigError("prediction grids need test rates")
    train_rate = group.rates[0]
    rng = _group_noise(group, cfg)
    x_imp = dataset.rows("imputer_train")
    x_ptrain = dataset.rows("predictor_train")
    x_ptest = dataset.rows("predictor_test")
    if x_ptrain.n_samples < 2 or x_ptest.n_samples < 2:
        raise DataError("predictor splits need at least two rows to form pairs")
    d = x_imp.n_features
    mask_imp = generate_mcar_mask(x_imp.n_samples, d, train_rate, rng.child("mask-imputer-train"))
    mask_ptrain = generate_mcar_mask(x_ptrain.n_samples, d, train_rate, rng.child("mask-predictor-train"))
    stats = fit_normalizer(x_imp, mask_imp)
    xn_imp = transform(x_imp, stats)
    xn_ptrain = transform(x_ptrain, stats)
    xn_ptest = transform(x_ptest, stats)
    model = _fit_group_imputer(group.method, xn_imp, mask_imp, cfg, _derive_seed(cfg.seed, group.key + "/train"))
    v_ptrain = _apply_imputer(model, group.method, xn_ptrain, mask_ptrain, rng.child("z-predictor-train"))
    predictor_cfg = dataclasses.replace(cfg, seed=_derive_seed(cfg.seed, group.key + "/predictor"))
    predictor = train_predictor(v_ptrain, predictor_cfg)
    records = []
    per_sample: list[tuple[int, int, float]] = []
    for test_rate in test_rates:
        test_rate = float(test_rate)
        tag = f"test-{test_rate!r}"
        mask_test = generate_mcar_mask(x_ptest.n_samples, d, test_rate, rng.child(f"mask-{tag}"))
        v_test = _apply_imputer(model, group.method, xn_ptest, mask_test, rng.child(f"z-{tag}"))
        preds = predict(predictor, v_test.with_values(v_test.values[:-1]))
        mae = float(np.abs(preds.values - xn_ptest.values[1:]).mean())
        records.append(MetricsRecord(
            method=group.method,
            split="predictor_test",
            mae=mae,
            run_id=group.run_id,
            seed=_derive_seed(cfg.seed, group.key),
            train_missing_rate=train_rate,
            test_missing_rate=test_rate,
        ))
        if include_per_sample and not per_sample:
            per_sample = _per_sample_rows(xn_ptest, v_test, mask_test)
    return records, per_sample


def _compute_multivar_group(dataset, group, cfg, include_per_sample):
    if not isinstance(dataset, MultiVarDataset):
        raise DataError("multivar grids need a multi-variable dataset")
    rates = group.rates
    if len(rates) != 3:
        raise ConfigError(f"multivar groups need a rate triple, got {rates}")
    rng = _group_noise(group, cfg)
    x_train = dataset.rows("train")
    x_test = dataset.rows("test")
    block = dataset.block_width
    mask_train = per_variable_mask(x_train.n_samples, block, rates, rng.child("mask-train"))
    mask_test = per_variable_mask(x_test.n_samples, block, rates, rng.child("mask-test"))
    stats = fit_normalizer(x_train, mask_train)
    xn_train = transform(x_train, stats)
    xn_test = transform(x_test, stats)
    model = _fit_group_imputer(group.method, xn_train, mask_train, cfg, _derive_seed(cfg.seed, group.key + "/train"))
    v_test = _apply_imputer(model, group.method, xn_test, mask_test, rng.child("z-test"))
    records = []
    for k, variable in enumerate(VARIABLE_NAMES):
        cols = slice(k * block, (k + 1) * block)
        mae = masked_mae(xn_test.values[:, cols], v_test.values[:, cols], mask_test.values[:, cols])
        if mae is None:
            raise DataError(f"variable {variable!r} has no missing test entries at rates {rates}")
        records.append(MetricsRecord(
            method=group.method,
            split="test",
            mae=mae,
            run_id=group.run_id,
            seed=_derive_seed(cfg.seed, group.key),
            vmr=rates[0],
            omr=rates[1],
            smr=rates[2],
            variable=variable,
        ))
    per_sample = _per_sample_rows(xn_test, v_test, mask_test) if include_per_sample else []
    return records, per_sample


SkipFn = Callable[[GridGroup], bool]
GroupSink = Callable[[GridGroup, list[MetricsRecord]], None]


def _run_grid(
    dataset,
    groups: list[GridGroup],
    cfg: TrainConfig,
    test_rates: Sequence[float] | None,
    skip_group: SkipFn | None,
    on_group: GroupSink | None,
) -> MetricsTable:
    records: list[MetricsRecord] = []
    for group in groups:
        if skip_group is not None and skip_group(group):
            continue
        group_records, _ = compute_group(dataset, group, cfg, test_rates=test_rates)
        records.extend(group_records)
        if on_group is not None:
            on_group(group, group_records)
    return MetricsTable(records)


def run_imputation_grid(
    dataset: SingleVarDataset,
    methods: Sequence[str],
    rates: Sequence[float],
    n_runs: int,
    cfg: TrainConfig,
    skip_group: SkipFn | None = None,
    on_group: GroupSink | None = None,
) -> MetricsTable:
    """Imputation accuracy per (method, rate, run): one record each."""
    _validate_grid_args("imputation", methods, [rates], n_runs)
    groups = enumerate_groups("imputation", methods, list(rates), n_runs)
    return _run_grid(dataset, groups, cfg, None, skip_group, on_group)


def run_prediction_grid(
    dataset: SingleVarDataset,
    methods: Sequence[str],
    train_rates: Sequence[float],
    test_rates: Sequence[float],
    n_runs: int,
    cfg: TrainConfig,
    skip_group: SkipFn | None = None,
    on_group: GroupSink | None = None,
) -> MetricsTable:
    """Downstream prediction MAE per (method, train rate, test rate, run)."""
    _validate_grid_args("prediction", methods, [train_rates, test_rates], n_runs)
    groups = enumerate_groups("prediction", methods, list(train_rates), n_runs)
    return _run_grid(dataset, groups, cfg, list(test_rates), skip_group, on_group)


def run_multivar_grid(
    dataset: MultiVarDataset,
    methods: Sequence[str],
    rates: Sequence[float],
    n_runs: int,
    cfg: TrainConfig,
    skip_group: SkipFn | None = None,
    on_group: GroupSink | None = None,
) -> MetricsTable:
    """Per-variable masked MAE over every rate triple in ``rates``^3."""
    _validate_grid_args("multivar", methods, [rates], n_runs)
    triples = [
        (float(v), float(o), float(s))
        for v in rates for o in rates for s in rates
    ]
    groups = enumerate_groups("multivar", methods, triples, n_runs)
    return _run_grid(dataset, groups, cfg, None, skip_group, on_group)
