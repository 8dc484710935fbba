"""Dataset loading, splitting, multi-variable assembly, and synthetic generators.

File formats: headerless numeric CSV, or raw little-endian float64 binary with
a ``<file>.json`` sidecar holding ``{"shape": [...], "order": "row_major"}``.
Values may contain NaN to mark originally-missing entries; those are completed
with the round-robin ridge imputer at load time so downstream code always sees
a complete reference matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .baselines import iterative_impute
from .data import DataMatrix, MaskMatrix, NoiseSource, generate_mcar_mask
from .errors import DataError

SINGLE_SPLIT_NAMES = ("imputer_train", "predictor_train", "predictor_test")
MULTI_SPLIT_NAMES = ("train", "test")
VARIABLE_NAMES = ("volume", "occupancy", "speed")


def read_matrix_file(path: str | Path) -> np.ndarray:
    """Read a CSV or sidecar-described binary file as a float64 array."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    if path.suffix.lower() == ".csv":
        try:
            arr = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
        except ValueError as exc:
            raise DataError(f"could not parse CSV {path}: {exc}") from exc
        return arr
    sidecar_path = Path(str(path) + ".json")
    if not sidecar_path.exists():
        raise DataError(f"binary file {path} has no {sidecar_path.name} sidecar")
    sidecar = json.loads(sidecar_path.read_text())
    if sidecar.get("order") != "row_major":
        raise DataError(f"{sidecar_path}: only row_major order is supported")
    shape = tuple(int(s) for s in sidecar["shape"])
    raw = np.frombuffer(path.read_bytes(), dtype="<f8")
    expected = int(np.prod(shape))
    if raw.size != expected:
        raise DataError(
            f"{path}: sidecar shape {shape} needs {expected} values, file holds {raw.size}"
        )
    return raw.reshape(shape).astype(np.float64)


def write_matrix_csv(values: np.ndarray, path: str | Path) -> None:
    np.savetxt(path, np.asarray(values, dtype=np.float64), delimiter=",")


def write_matrix_binary(values: np.ndarray, path: str | Path) -> None:
    values = np.asarray(values, dtype=np.float64)
    Path(path).write_bytes(values.astype("<f8").tobytes())
    sidecar = {"shape": list(values.shape), "order": "row_major"}
    Path(str(path) + ".json").write_text(json.dumps(sidecar) + "\n")


def _complete_reference(values: np.ndarray, completion_rounds: int) -> tuple[DataMatrix, float]:
    """Complete NaN-marked entries so the reference matrix is fully observed."""
    nan_mask = np.isnan(values)
    fraction = float(nan_mask.mean())
    if fraction == 0.0:
        return DataMatrix(values), 0.0
    if nan_mask.all(axis=0).any():
        bad = int(np.flatnonzero(nan_mask.all(axis=0))[0])
        raise DataError(f"feature {bad} is entirely missing; cannot build a reference")
    observed = MaskMatrix((~nan_mask).astype(np.float64))
    filled = DataMatrix(np.where(nan_mask, 0.0, values))
    completed = iterative_impute(filled, observed, n_rounds=completion_rounds)
    return completed, fraction


def _check_split_ranges(split: dict[str, tuple[int, int]], names: tuple[str, ...], n_rows: int) -> None:
    if set(split) != set(names):
        raise DataError(f"split names must be exactly {names}, got {sorted(split)}")
    cursor = 0
    for name in names:
        start, stop = split[name]
        if (start, stop) != (cursor, stop) or stop < start:
            raise DataError(f"split ranges must be contiguous and ordered; bad range for {name!r}")
        cursor = stop
    if cursor != n_rows:
        raise DataError(f"split ranges cover {cursor} rows, matrix has {n_rows}")


@dataclass(frozen=True)
class SingleVarDataset:
    """A single-variable time-by-location matrix with optional contiguous splits."""

    matrix: DataMatrix
    time_step_minutes: int = 10
    split: dict[str, tuple[int, int]] | None = None
    original_missing_fraction: float = 0.0

    def __post_init__(self) -> None:
        if self.time_step_minutes < 1:
            raise DataError("time_step_minutes must be positive")
        if self.split is not None:
            _check_split_ranges(self.split, SINGLE_SPLIT_NAMES, self.matrix.n_samples)

    def rows(self, part: str) -> DataMatrix:
        if self.split is None:
            raise DataError("dataset has no split; call split_single_var first")
        if part not in self.split:
            raise DataError(f"unknown split part {part!r}")
        start, stop = self.split[part]
        return self.matrix.with_values(self.matrix.values[start:stop])


def load_single_var(
    path: str | Path,
    layout: tuple[int, int, int],
    time_step_minutes: int = 10,
    completion_rounds: int = 10,
) -> SingleVarDataset:
    """Load a (days, steps_per_day, locations) file as a (days*steps) x locations matrix.

    Values are consumed in row-major day/time/location order, so a file that is
    already (days*steps) x locations loads unchanged.
    """
    days, steps, locations = (int(v) for v in layout)
    if min(days, steps, locations) < 1:
        raise DataError(f"layout entries must be positive, got {layout}")
    raw = read_matrix_file(path)
    expected = days * steps * locations
    if raw.size != expected:
        raise DataError(
            f"{path}: layout {layout} needs {expected} values, file holds {raw.size}"
        )
    values = raw.reshape(days * steps, locations)
    matrix, fraction = _complete_reference(values, completion_rounds)
    return SingleVarDataset(
        matrix,
        time_step_minutes=time_step_minutes,
        original_missing_fraction=fraction,
    )


def split_single_var(ds: SingleVarDataset, fractions: tuple[float, float, float]) -> SingleVarDataset:
    """Contiguous floor-based three-way split (imputer / predictor-train / predictor-test)."""
    fracs = tuple(float(f) for f in fractions)
    if len(fracs) != 3 or any(f < 0.0 for f in fracs):
        raise DataError(f"need three non-negative fractions, got {fractions}")
    if abs(sum(fracs) - 1.0) > 1e-9:
        raise DataError(f"fractions must sum to 1, got {sum(fracs)}")
    n = ds.matrix.n_samples
    first = int(np.floor(n * fracs[0]))
    second = int(np.floor(n * (fracs[0] + fracs[1])))
    split = {
        "imputer_train": (0, first),
        "predictor_train": (first, second),
        "predictor_test": (second, n),
    }
    for name, (start, stop) in split.items():
        if stop <= start:
            raise DataError(f"split {name!r} is empty for fractions {fractions} on {n} rows")
    return replace(ds, split=split)


@dataclass(frozen=True)
class MultiVarDataset:
    """Volume/occupancy/speed blocks over the same time-by-location grid."""

    volume: DataMatrix
    occupancy: DataMatrix
    speed: DataMatrix
    assembled: DataMatrix
    split: dict[str, tuple[int, int]]
    time_step_minutes: int = 15
    per_variable_rates: tuple[float, float, float] | None = None
    original_missing_fraction: float = 0.0

    def __post_init__(self) -> None:
        shape = self.volume.values.shape
        if self.occupancy.values.shape != shape or self.speed.values.shape != shape:
            raise DataError("volume/occupancy/speed must share one shape")
        if self.assembled.values.shape != (shape[0], 3 * shape[1]):
            raise DataError("assembled matrix must be the three blocks side by side")
        _check_split_ranges(self.split, MULTI_SPLIT_NAMES, shape[0])

    @property
    def block_width(self) -> int:
        return self.volume.n_features

    def rows(self, part: str) -> DataMatrix:
        if part not in self.split:
            raise DataError(f"unknown split part {part!r}")
        start, stop = self.split[part]
        return self.assembled.with_values(self.assembled.values[start:stop])


def load_multi_var(
    volume_path: str | Path,
    occupancy_path: str | Path,
    speed_path: str | Path,
    train_fraction: float = 0.85,
    time_step_minutes: int = 15,
    completion_rounds: int = 10,
) -> MultiVarDataset:
    """Load three same-shape matrices and assemble them feature-wise."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must be in (0, 1), got {train_fraction}")
    blocks = []
    shapes = []
    for path in (volume_path, occupancy_path, speed_path):
        raw = read_matrix_file(path)
        if raw.ndim != 2:
            raise DataError(f"{path}: expected a 2-D matrix, got shape {raw.shape}")
        blocks.append(raw)
        shapes.append(raw.shape)
    if len(set(shapes)) != 1:
        raise DataError(f"variable matrices disagree on shape: {shapes}")
    stacked = np.hstack(blocks)
    assembled, fraction = _complete_reference(stacked, completion_rounds)
    n, width = assembled.values.shape
    block = width // 3
    n_train = int(np.floor(n * train_fraction))
    if n_train < 1 or n_train >= n:
        raise DataError(f"train_fraction {train_fraction} leaves an empty split for {n} rows")
    vol, occ, spd = (
        DataMatrix(assembled.values[:, i * block:(i + 1) * block]) for i in range(3)
    )
    return MultiVarDataset(
        volume=vol,
        occupancy=occ,
        speed=spd,
        assembled=assembled,
        split={"train": (0, n_train), "test": (n_train, n)},
        time_step_minutes=time_step_minutes,
        original_missing_fraction=fraction,
    )


def per_variable_mask(
    n_rows: int,
    block_width: int,
    rates: tuple[float, float, float],
    rng: NoiseSource,
) -> MaskMatrix:
    """Independent MCAR masks per variable block, concatenated feature-wise."""
    if len(rates) != 3:
        raise DataError(f"need three per-variable rates, got {rates}")
    parts = [
        generate_mcar_mask(n_rows, block_width, float(rate), rng.child(f"block-{i}")).values
        for i, rate in enumerate(rates)
    ]
    return MaskMatrix(np.hstack(parts))


def make_synthetic(
    kind: str,
    n_rows: int,
    n_features: int,
    params: dict | None = None,
    seed: int = 0,
) -> SingleVarDataset:
    """Synthetic single-variable datasets: ``low_rank``, ``ar1``, or ``uniform``."""
    params = dict(params or {})
    if n_rows < 2 or n_features < 1:
        raise DataError(f"need n_rows >= 2 and n_features >= 1, got {n_rows}x{n_features}")
    rng = NoiseSource("standard_normal", seed)
    if kind == "low_rank":
        rank = int(params.pop("rank", 2))
        sigma = float(params.pop("sigma", 0.0))
        if params:
            raise DataError(f"unknown low_rank params: {sorted(params)}")
        if not 1 <= rank < min(n_rows, n_features):
            raise DataError(f"rank must be in [1, {min(n_rows, n_features) - 1}], got {rank}")
        if sigma < 0.0:
            raise DataError("sigma must be non-negative")
        left = rng.standard_normal(n_rows, rank)
        right = rng.standard_normal(rank, n_features)
        values = left @ right
        if sigma > 0.0:
            values = values + sigma * rng.standard_normal(n_rows, n_features)
    elif kind == "ar1":
        rho = float(params.pop("rho", 0.9))
        sigma = float(params.pop("sigma", 0.1))
        if params:
            raise DataError(f"unknown ar1 params: {sorted(params)}")
        if not abs(rho) < 1.0:
            raise DataError(f"ar1 needs |rho| < 1, got {rho}")
        if sigma < 0.0:
            raise DataError("sigma must be non-negative")
        values = np.empty((n_rows, n_features))
        values[0] = rng.standard_normal(1, n_features)[0]
        for t in range(1, n_rows):
            step = sigma * rng.standard_normal(1, n_features)[0] if sigma > 0.0 else 0.0
            values[t] = rho * values[t - 1] + step
    elif kind == "uniform":
        if params:
            raise DataError(f"unknown uniform params: {sorted(params)}")
        values = rng.uniform(n_rows, n_features)
    else:
        raise DataError(f"unknown synthetic kind {kind!r}")
    return SingleVarDataset(DataMatrix(values))
