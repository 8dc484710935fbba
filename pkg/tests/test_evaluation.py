from __future__ import annotations

import numpy as np
import pytest

from ganimpute.data import DataMatrix, MaskMatrix, NoiseSource
from ganimpute.datasets import MultiVarDataset, make_synthetic, split_single_var
from ganimpute.errors import ConfigError, DataError
from ganimpute.evaluation import (
    GridGroup,
    MetricsRecord,
    MetricsTable,
    compute_group,
    energy_distance,
    enumerate_groups,
    masked_mae,
    per_sample_errors,
    records_per_group,
    run_imputation_grid,
    run_multivar_grid,
    run_prediction_grid,
)
from ganimpute.trainers import TrainConfig


def _record(**overrides) -> MetricsRecord:
    base = dict(method="mean", split="test", mae=0.5, run_id=0, seed=1)
    base.update(overrides)
    return MetricsRecord(**base)


def _split_dataset(n=40, d=4, seed=0):
    ds = make_synthetic("low_rank", n, d, {"rank": 2, "sigma": 0.05}, seed=seed)
    return split_single_var(ds, (0.4, 0.4, 0.2))


def _multivar_dataset(n=80, block=4, seed=1) -> MultiVarDataset:
    rng = NoiseSource("uniform01", seed)
    blocks = [DataMatrix(rng.noise(n, block)) for _ in range(3)]
    assembled = DataMatrix(np.hstack([b.values for b in blocks]))
    return MultiVarDataset(
        volume=blocks[0], occupancy=blocks[1], speed=blocks[2],
        assembled=assembled, split={"train": (0, 50), "test": (50, n)},
    )


def _grid_cfg(**overrides) -> TrainConfig:
    base = dict(
        n_epochs=1, batch_size=16, critic_updates_base=1,
        critic_updates_epoch_div=1, seed=3, energy_distance_samples=8,
        predictor_epochs=2, predictor_val_fraction=0.0,
    )
    base.update(overrides)
    return TrainConfig(**base)


class TestMaskedMae:
    def test_worked_example(self):
        truth = np.array([[1.0, 2.0], [3.0, 4.0]])
        imputed = np.array([[1.0, 2.5], [1.0, 4.0]])
        m = np.array([[1.0, 0.0], [0.0, 1.0]])
        # errors at missing slots: |2 - 2.5| = 0.5 and |3 - 1| = 2
        assert masked_mae(truth, imputed, m) == pytest.approx(1.25)

    def test_accepts_wrapped_matrices(self):
        truth = DataMatrix([[1.0, 2.0]])
        imputed = DataMatrix([[0.0, 2.0]])
        m = MaskMatrix([[0.0, 1.0]])
        assert masked_mae(truth, imputed, m) == pytest.approx(1.0)

    def test_none_when_nothing_missing(self):
        x = np.zeros((2, 2))
        assert masked_mae(x, x, np.ones((2, 2))) is None

    def test_shape_mismatch(self):
        with pytest.raises(DataError, match="disagree"):
            masked_mae(np.zeros((2, 2)), np.zeros((2, 2)), np.ones((3, 2)))


class TestPerSampleErrors:
    def test_worked_example(self):
        truth = np.array([[1.0, 2.0, 3.0]])
        imputed = np.array([[1.0, 5.0, 2.0]])
        m = np.array([[1.0, 0.0, 0.0]])
        errors, idx = per_sample_errors(truth, imputed, m, 0)
        np.testing.assert_array_equal(idx, [1, 2])
        np.testing.assert_allclose(errors, [3.0, 1.0])

    def test_row_bounds(self):
        x = np.zeros((2, 2))
        with pytest.raises(DataError, match="out of range"):
            per_sample_errors(x, x, np.ones((2, 2)), 2)


class TestEnergyDistance:
    def test_identical_samples_give_zero(self):
        a = np.array([0.1, 0.5, 0.9])
        assert energy_distance(a, a) == pytest.approx(0.0, abs=1e-12)

    def test_point_masses(self):
        # A = {0}, B = {1}: 2*1 - 0 - 0 = 2
        assert energy_distance(np.zeros(4), np.ones(5)) == pytest.approx(2.0)

    def test_symmetric(self):
        rng = NoiseSource("uniform01", 2)
        a = rng.noise(20, 1)
        b = rng.noise(30, 1) + 0.3
        assert energy_distance(a, b) == pytest.approx(energy_distance(b, a))

    def test_sensitive_to_distribution_shift(self):
        rng = NoiseSource("uniform01", 3)
        a = rng.noise(200, 1)
        near = rng.noise(200, 1)
        far = rng.noise(200, 1) + 1.0
        assert energy_distance(a, far) > energy_distance(a, near)

    def test_empty_rejected(self):
        with pytest.raises(DataError, match="non-empty"):
            energy_distance(np.array([]), np.ones(3))


class TestMetricsRecord:
    def test_validation(self):
        with pytest.raises(DataError, match="non-empty"):
            _record(method="")
        with pytest.raises(DataError, match="mae"):
            _record(mae=-0.5)
        with pytest.raises(DataError, match="mae"):
            _record(mae=float("nan"))
        with pytest.raises(DataError, match="run_id"):
            _record(run_id=-1)

    def test_cell_key_ignores_run_and_seed(self):
        a = _record(run_id=0, seed=1, train_missing_rate=0.2)
        b = _record(run_id=7, seed=9, mae=0.9, train_missing_rate=0.2)
        assert a.cell_key() == b.cell_key()
        assert a.cell_key() != _record(train_missing_rate=0.5).cell_key()


class TestMetricsTable:
    def test_aggregate_mean_std_count(self):
        table = MetricsTable([
            _record(mae=0.2, run_id=0),
            _record(mae=0.4, run_id=1),
            _record(mae=0.9, run_id=0, method="igani"),
        ])
        cells = table.aggregate()
        mean_cell = cells[_record(mae=0.2).cell_key()]
        assert mean_cell["mean"] == pytest.approx(0.3)
        assert mean_cell["std"] == pytest.approx(0.1)  # population std
        assert mean_cell["count"] == 2
        assert cells[_record(mae=0.9, method="igani").cell_key()]["count"] == 1

    def test_csv_round_trip_is_exact(self, tmp_path):
        table = MetricsTable([
            _record(mae=1.0 / 3.0, train_missing_rate=0.2, test_missing_rate=0.8),
            _record(method="igani", split="test", vmr=0.1, omr=0.2, smr=0.3,
                    variable="speed", mae=0.125, run_id=2, seed=42),
        ])
        path = tmp_path / "metrics.csv"
        table.write_csv(path)
        loaded = MetricsTable.read_csv(path)
        assert loaded.records == table.records
        assert loaded.records[0].mae == 1.0 / 3.0  # repr round trip, no rounding

    def test_read_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "metrics.csv"
        path.write_text("method,mae\nmean,0.5\n")
        with pytest.raises(DataError, match="header"):
            MetricsTable.read_csv(path)

    def test_read_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            MetricsTable.read_csv(tmp_path / "nope.csv")


class TestGroupEnumeration:
    def test_key_format(self):
        group = GridGroup("prediction", "igani", (0.2,), 1)
        assert group.key == "prediction|igani|0.2|run=1"
        triple = GridGroup("multivar", "mean", (0.1, 0.2, 0.3), 0)
        assert triple.key == "multivar|mean|0.1,0.2,0.3|run=0"

    def test_enumeration_order_and_count(self):
        groups = enumerate_groups("imputation", ["igani", "mean"], [0.2, 0.5], 2)
        assert len(groups) == 8
        assert [g.method for g in groups[:4]] == ["igani"] * 4
        assert groups[0].rates == (0.2,) and groups[0].run_id == 0
        assert groups[1].run_id == 1
        assert groups[2].rates == (0.5,)

    def test_records_per_group(self):
        assert records_per_group(GridGroup("imputation", "mean", (0.2,), 0), None) == 1
        assert records_per_group(GridGroup("prediction", "mean", (0.2,), 0), [0.1, 0.2]) == 2
        assert records_per_group(GridGroup("multivar", "mean", (0.1, 0.2, 0.3), 0), None) == 3
        with pytest.raises(ConfigError, match="test rates"):
            records_per_group(GridGroup("prediction", "mean", (0.2,), 0), None)


class TestImputationGrid:
    def test_mean_grid_structure(self):
        table = run_imputation_grid(_split_dataset(), ["mean"], [0.3, 0.6], 2, _grid_cfg())
        assert len(table.records) == 4
        for rec in table.records:
            assert rec.method == "mean"
            assert rec.split == "imputation_eval"
            assert rec.train_missing_rate in (0.3, 0.6)
            assert np.isfinite(rec.mae)

    def test_deterministic_per_seed(self):
        ds = _split_dataset()
        a = run_imputation_grid(ds, ["mean"], [0.3], 2, _grid_cfg())
        b = run_imputation_grid(ds, ["mean"], [0.3], 2, _grid_cfg())
        c = run_imputation_grid(ds, ["mean"], [0.3], 2, _grid_cfg(seed=99))
        assert a.records == b.records
        assert a.records != c.records

    def test_runs_differ_within_one_seed(self):
        table = run_imputation_grid(_split_dataset(), ["mean"], [0.3], 3, _grid_cfg())
        maes = [rec.mae for rec in table.records]
        assert len(set(maes)) > 1

    def test_skip_and_sink_hooks(self):
        seen = []
        table = run_imputation_grid(
            _split_dataset(), ["mean"], [0.3, 0.6], 1, _grid_cfg(),
            skip_group=lambda g: g.rates[0] == 0.6,
            on_group=lambda g, recs: seen.append((g.key, len(recs))),
        )
        assert len(table.records) == 1
        assert seen == [("imputation|mean|0.3|run=0", 1)]

    def test_zero_rate_fails_with_group_key(self):
        with pytest.raises(DataError) as info:
            run_imputation_grid(_split_dataset(), ["mean"], [0.0], 1, _grid_cfg())
        assert "[imputation|mean|0.0|run=0]" in str(info.value)

    def test_trained_method_in_grid(self):
        table = run_imputation_grid(_split_dataset(), ["igani"], [0.3], 1, _grid_cfg())
        assert len(table.records) == 1
        assert np.isfinite(table.records[0].mae)

    def test_argument_validation(self):
        ds = _split_dataset()
        with pytest.raises(ConfigError, match="unknown method"):
            run_imputation_grid(ds, ["knn"], [0.3], 1, _grid_cfg())
        with pytest.raises(ConfigError, match="rates must lie"):
            run_imputation_grid(ds, ["mean"], [1.0], 1, _grid_cfg())
        with pytest.raises(ConfigError, match="n_runs"):
            run_imputation_grid(ds, ["mean"], [0.3], 0, _grid_cfg())
        with pytest.raises(ConfigError, match="at least one method"):
            run_imputation_grid(ds, [], [0.3], 1, _grid_cfg())
        with pytest.raises(ConfigError, match="non-empty"):
            run_imputation_grid(ds, ["mean"], [], 1, _grid_cfg())

    def test_unsplit_dataset_rejected(self):
        ds = make_synthetic("uniform", 20, 3, seed=5)
        with pytest.raises(DataError, match="no split"):
            run_imputation_grid(ds, ["mean"], [0.3], 1, _grid_cfg())


class TestPredictionGrid:
    def test_record_count_and_coordinates(self):
        table = run_prediction_grid(
            _split_dataset(n=60), ["mean"], [0.2, 0.5], [0.2, 0.5], 2, _grid_cfg()
        )
        # 1 method x 2 train rates x 2 runs -> 4 groups x 2 test rates
        assert len(table.records) == 8
        coords = {(r.train_missing_rate, r.test_missing_rate, r.run_id) for r in table.records}
        assert len(coords) == 8
        assert all(rec.split == "predictor_test" for rec in table.records)

    def test_per_group_seed_isolation(self):
        # A group's records must not depend on which other groups ran.
        ds = _split_dataset(n=60)
        full = run_prediction_grid(ds, ["mean"], [0.2, 0.5], [0.3], 1, _grid_cfg())
        only = run_prediction_grid(ds, ["mean"], [0.5], [0.3], 1, _grid_cfg())
        full_cell = [r for r in full.records if r.train_missing_rate == 0.5]
        assert full_cell == only.records


class TestMultivarGrid:
    def test_three_records_per_group_with_variable_names(self):
        table = run_multivar_grid(_multivar_dataset(), ["mean"], [0.2, 0.5], 1, _grid_cfg())
        # 2^3 rate triples x 3 variables
        assert len(table.records) == 24
        variables = {rec.variable for rec in table.records}
        assert variables == {"volume", "occupancy", "speed"}
        triples = {(r.vmr, r.omr, r.smr) for r in table.records}
        assert len(triples) == 8

    def test_single_var_dataset_rejected(self):
        with pytest.raises(DataError, match="multi-variable"):
            run_multivar_grid(_split_dataset(), ["mean"], [0.3], 1, _grid_cfg())


class TestComputeGroup:
    def test_per_sample_rows_returned_on_request(self):
        ds = _split_dataset()
        group = GridGroup("imputation", "mean", (0.4,), 0)
        records, rows = compute_group(ds, group, _grid_cfg(), include_per_sample=True)
        assert len(records) == 1
        assert rows, "expected per-sample error rows"
        row_ids = {r for r, _, _ in rows}
        assert len(row_ids) == 1  # one focal row
        for _, feature_idx, err in rows:
            assert 0 <= feature_idx < 4  # _split_dataset feature count
            assert err >= 0.0

    def test_failure_is_tagged_with_group_key(self):
        ds = _split_dataset()
        group = GridGroup("prediction", "mean", (0.3,), 0)
        with pytest.raises(ConfigError) as info:
            compute_group(ds, group, _grid_cfg(), test_rates=None)
        assert "[prediction|mean|0.3|run=0]" in str(info.value)
