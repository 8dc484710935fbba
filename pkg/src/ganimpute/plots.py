"""Matplotlib figures for grid results.

All functions render straight to a file with the ``Agg`` backend, so they are
safe to call headless. Mean curves and uncertainty bands carry stable SVG
``gid`` attributes (``mean-<method>``, ``band-<method>``) so rendered output
can be parsed back in tests and downstream tooling.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ConfigError, DataError
from .evaluation import MetricsTable

PER_SAMPLE_COLUMNS = ("method", "row", "feature_index", "abs_error")

_METHOD_COLORS = {
    "igani": "tab:blue",
    "gain": "tab:orange",
    "misgan": "tab:green",
    "mean": "black",
}


def _method_color(method: str) -> str:
    return _METHOD_COLORS.get(method, "tab:gray")


def _require_records(table: MetricsTable, context: str) -> None:
    if not table.records:
        raise ConfigError(f"no records to plot for {context}")


def plot_mae_vs_rate(
    table: MetricsTable,
    out_path: str | Path,
    rate_field: str = "train_missing_rate",
    band_sigmas: float = 3.0,
) -> None:
    """MAE against missing rate, one mean curve per method with ±kσ bands.

    The baseline ``mean`` method is drawn as unconnected black stars; every
    other method gets a line plus a shaded band. Bands and mean artists carry
    ``gid`` values for SVG round-tripping.
    """
    _require_records(table, "mae-vs-rate plot")
    if rate_field not in ("train_missing_rate", "test_missing_rate"):
        raise ConfigError(f"unsupported rate field {rate_field!r}")
    cells = table.aggregate()
    per_method: dict[str, list[tuple[float, float, float]]] = {}
    for key, stats in cells.items():
        method, _split, train_rate, test_rate = key[0], key[1], key[2], key[3]
        rate = train_rate if rate_field == "train_missing_rate" else test_rate
        if rate is None:
            raise ConfigError(
                f"record for method {method!r} has no {rate_field}; "
                "is this the right grid type for this plot?"
            )
        per_method.setdefault(method, []).append((rate, stats["mean"], stats["std"]))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method in sorted(per_method):
        points = sorted(per_method[method])
        rates = np.array([p[0] for p in points])
        means = np.array([p[1] for p in points])
        stds = np.array([p[2] for p in points])
        color = _method_color(method)
        if method == "mean":
            line, = ax.plot(rates, means, linestyle="none", marker="*", markersize=11,
                            color="black", label=method)
            line.set_gid(f"mean-{method}")
        else:
            line, = ax.plot(rates, means, marker="o", color=color, label=method)
            line.set_gid(f"mean-{method}")
            band = ax.fill_between(rates, means - band_sigmas * stds,
                                   means + band_sigmas * stds,
                                   color=color, alpha=0.2)
            band.set_gid(f"band-{method}")
    ax.set_xlabel("missing rate")
    ax.set_ylabel("MAE")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def plot_grid_heatmap(table: MetricsTable, out_path: str | Path) -> None:
    """Train-rate x test-rate MAE heatmap, one panel per method."""
    _require_records(table, "heatmap")
    cells = table.aggregate()
    per_method: dict[str, dict[tuple[float, float], float]] = {}
    train_rates: set[float] = set()
    test_rates: set[float] = set()
    for key, stats in cells.items():
        method, _split, train_rate, test_rate = key[0], key[1], key[2], key[3]
        if train_rate is None or test_rate is None:
            raise ConfigError(
                "heatmap needs records with both train and test rates "
                f"(method {method!r} is missing one)"
            )
        per_method.setdefault(method, {})[(train_rate, test_rate)] = stats["mean"]
        train_rates.add(train_rate)
        test_rates.add(test_rate)
    trains = sorted(train_rates)
    tests = sorted(test_rates)
    methods = sorted(per_method)
    fig, axes = plt.subplots(1, len(methods), figsize=(4.0 * len(methods), 3.6),
                             squeeze=False)
    for ax, method in zip(axes[0], methods):
        grid = np.full((len(trains), len(tests)), np.nan)
        for (tr, te), value in per_method[method].items():
            grid[trains.index(tr), tests.index(te)] = value
        image = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
        ax.set_xticks(range(len(tests)), [f"{t:g}" for t in tests])
        ax.set_yticks(range(len(trains)), [f"{t:g}" for t in trains])
        ax.set_xlabel("test missing rate")
        ax.set_ylabel("train missing rate")
        ax.set_title(method)
        fig.colorbar(image, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def read_per_sample_csv(path: str | Path) -> list[dict]:
    """Load a per-sample error dump, validating its header."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"per-sample CSV not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != PER_SAMPLE_COLUMNS:
            raise ConfigError(
                f"{path} columns {reader.fieldnames} do not match {PER_SAMPLE_COLUMNS}"
            )
        rows = []
        for row in reader:
            rows.append({
                "method": row["method"],
                "row": int(row["row"]),
                "feature_index": int(row["feature_index"]),
                "abs_error": float(row["abs_error"]),
            })
    if not rows:
        raise ConfigError(f"{path} has no per-sample rows")
    return rows


def plot_per_sample(rows: list[dict], out_path: str | Path) -> None:
    """Per-feature absolute error (log scale) plus an error histogram.

    Vertical dotted lines mark the feature indices that were missing (i.e.
    every feature with an error row).
    """
    if not rows:
        raise ConfigError("no per-sample rows to plot")
    methods = sorted({r["method"] for r in rows})
    fig, (ax_scatter, ax_hist) = plt.subplots(1, 2, figsize=(9.0, 3.8))
    all_indices = sorted({r["feature_index"] for r in rows})
    for idx in all_indices:
        ax_scatter.axvline(idx, color="0.85", linestyle=":", linewidth=0.8)
    floor = 1e-12
    for method in methods:
        sel = [r for r in rows if r["method"] == method]
        xs = [r["feature_index"] for r in sel]
        ys = [max(r["abs_error"], floor) for r in sel]
        ax_scatter.plot(xs, ys, linestyle="none", marker="o", markersize=4,
                        color=_method_color(method), label=method)
        ax_hist.hist([r["abs_error"] for r in sel], bins=20, alpha=0.5,
                     color=_method_color(method), label=method)
    ax_scatter.set_yscale("log")
    ax_scatter.set_xlabel("feature index")
    ax_scatter.set_ylabel("absolute error")
    ax_scatter.legend()
    ax_hist.set_xlabel("absolute error")
    ax_hist.set_ylabel("count")
    ax_hist.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
