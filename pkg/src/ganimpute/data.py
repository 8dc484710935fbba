"""Core data containers, randomness source, masks, and normalization.

Conventions used throughout the package:

* data matrices are samples-by-features, float64;
* mask entries are 1.0 where a value is observed and 0.0 where it is missing;
* all randomness flows through :class:`NoiseSource` so that every pipeline is
  reproducible bitwise from a single integer seed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

_NOISE_DISTRIBUTIONS = ("uniform01", "standard_normal")


def _as_float_matrix(values: object, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"{what} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DataError(f"{what} must be non-empty, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class DataMatrix:
    """Immutable samples-by-features matrix of finite float64 values."""

    values: np.ndarray
    feature_names: tuple[str, ...] | None = None
    normalized: bool = False

    def __post_init__(self) -> None:
        arr = _as_float_matrix(self.values, "DataMatrix values")
        if not np.isfinite(arr).all():
            raise DataError("DataMatrix values must be finite (no NaN/inf)")
        if self.feature_names is not None:
            names = tuple(self.feature_names)
            if len(names) != arr.shape[1]:
                raise DataError(
                    f"feature_names has {len(names)} entries for "
                    f"{arr.shape[1]} features"
                )
            object.__setattr__(self, "feature_names", names)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray, *, normalized: bool | None = None) -> "DataMatrix":
        """A copy of this matrix with new values (metadata preserved)."""
        return DataMatrix(
            values,
            feature_names=self.feature_names,
            normalized=self.normalized if normalized is None else normalized,
        )


@dataclass(frozen=True)
class MaskMatrix:
    """Binary observation mask: 1.0 = observed, 0.0 = missing."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_float_matrix(self.values, "MaskMatrix values")
        if not np.isin(arr, (0.0, 1.0)).all():
            raise DataError("MaskMatrix entries must be exactly 0.0 or 1.0")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def missing_fraction(self) -> float:
        return float(1.0 - self.values.mean())


def check_paired(x: DataMatrix, m: MaskMatrix) -> None:
    """Raise :class:`DataError` unless data and mask shapes agree."""
    if x.values.shape != m.values.shape:
        raise DataError(
            f"data shape {x.values.shape} does not match mask shape {m.values.shape}"
        )


def _derive_seed(seed: int, tag: str) -> int:
    """Stable 64-bit child seed from a parent seed and a string tag."""
    digest = hashlib.blake2b(f"{seed}/{tag}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass
class NoiseSource:
    """Seeded random stream with a declared sampling distribution.

    Two instances constructed with the same seed produce identical draw
    sequences. ``child(tag)`` derives an independent, reproducible stream for a
    sub-task so parallel work never shares generator state.
    """

    distribution: str = "uniform01"
    seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.distribution not in _NOISE_DISTRIBUTIONS:
            raise DataError(
                f"unknown noise distribution {self.distribution!r}; "
                f"expected one of {_NOISE_DISTRIBUTIONS}"
            )
        self._rng = np.random.default_rng(self.seed)

    def child(self, tag: str) -> "NoiseSource":
        """An independent stream derived deterministically from this seed."""
        return NoiseSource(self.distribution, _derive_seed(self.seed, tag))

    def noise(self, n_samples: int, n_features: int) -> np.ndarray:
        """Draw an (n_samples, n_features) matrix from the declared distribution."""
        if self.distribution == "uniform01":
            return self._rng.random((n_samples, n_features))
        return self._rng.standard_normal((n_samples, n_features))

    def uniform(self, *shape: int) -> np.ndarray:
        """Uniform [0, 1) draws, independent of the declared distribution."""
        return self._rng.random(shape)

    def standard_normal(self, *shape: int) -> np.ndarray:
        return self._rng.standard_normal(shape)

    def integers(self, low: int, high: int, size: int | tuple[int, ...] | None = None) -> np.ndarray:
        return self._rng.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._rng.permutation(n)


def generate_mcar_mask(n_samples: int, n_features: int, missing_rate: float, rng: NoiseSource) -> MaskMatrix:
    """Independent Bernoulli mask: each entry missing with probability ``missing_rate``."""
    if not 0.0 <= missing_rate <= 1.0:
        raise DataError(f"missing_rate must be in [0, 1], got {missing_rate}")
    if n_samples < 1 or n_features < 1:
        raise DataError("mask dimensions must be positive")
    draws = rng.uniform(n_samples, n_features)
    return MaskMatrix((draws >= missing_rate).astype(np.float64))


def reshuffle_mask(m: MaskMatrix, rng: NoiseSource) -> MaskMatrix:
    """Permute each row's entries independently and uniformly.

    Row-wise counts of observed/missing entries are preserved exactly; only
    the positions move.
    """
    keys = rng.uniform(m.n_samples, m.n_features)
    order = np.argsort(keys, axis=1)
    return MaskMatrix(np.take_along_axis(m.values, order, axis=1))


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature minimum and maximum used for min-max scaling to [0, 1]."""

    per_feature_min: np.ndarray
    per_feature_max: np.ndarray

    def __post_init__(self) -> None:
        mn = np.asarray(self.per_feature_min, dtype=np.float64).copy()
        mx = np.asarray(self.per_feature_max, dtype=np.float64).copy()
        if mn.ndim != 1 or mx.shape != mn.shape:
            raise DataError("normalization stats must be matching 1-D vectors")
        if not (np.isfinite(mn).all() and np.isfinite(mx).all()):
            raise DataError("normalization stats must be finite")
        if (mx < mn).any():
            raise DataError("per-feature max must be >= per-feature min")
        mn.setflags(write=False)
        mx.setflags(write=False)
        object.__setattr__(self, "per_feature_min", mn)
        object.__setattr__(self, "per_feature_max", mx)

    @property
    def n_features(self) -> int:
        return self.per_feature_min.shape[0]


def fit_normalizer(x: DataMatrix, m: MaskMatrix) -> NormalizationStats:
    """Per-feature min/max over the observed entries only."""
    check_paired(x, m)
    observed = m.values > 0.5
    counts = observed.sum(axis=0)
    if (counts == 0).any():
        bad = int(np.flatnonzero(counts == 0)[0])
        raise DataError(f"feature {bad} has no observed entries; cannot fit normalizer")
    vals = x.values
    mn = np.where(observed, vals, np.inf).min(axis=0)
    mx = np.where(observed, vals, -np.inf).max(axis=0)
    return NormalizationStats(mn, mx)


def transform(x: DataMatrix, stats: NormalizationStats, direction: str = "forward") -> DataMatrix:
    """Min-max scale to [0, 1] (``forward``) or invert the scaling (``inverse``).

    Forward output is clamped to [0, 1]; a degenerate feature (max == min) maps
    to 0.0 forward and back to its minimum on the inverse.
    """
    if direction not in ("forward", "inverse"):
        raise DataError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    if stats.n_features != x.n_features:
        raise DataError(
            f"stats cover {stats.n_features} features, data has {x.n_features}"
        )
    mn = stats.per_feature_min
    span = stats.per_feature_max - stats.per_feature_min
    degenerate = span == 0.0
    safe_span = np.where(degenerate, 1.0, span)
    if direction == "forward":
        scaled = (x.values - mn) / safe_span
        scaled = np.where(degenerate, 0.0, scaled)
        scaled = np.clip(scaled, 0.0, 1.0)
        return x.with_values(scaled, normalized=True)
    restored = mn + x.values * safe_span
    restored = np.where(degenerate, mn, restored)
    return x.with_values(restored, normalized=False)
