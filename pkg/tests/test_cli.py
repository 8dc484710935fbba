from __future__ import annotations

import json

import numpy as np
import pytest

from ganimpute.cli import OUTPUT_DIR_ENV, _read_stats, main
from ganimpute.data import DataMatrix, MaskMatrix, NoiseSource, _derive_seed, transform
from ganimpute.datasets import read_matrix_file, write_matrix_csv
from ganimpute.evaluation import MetricsTable
from ganimpute.imputer import impute
from ganimpute.trainers import load_trained_imputer


def _write_config(path, **sections):
    path.write_text(json.dumps(sections))
    return str(path)


def _train_section(**overrides):
    base = dict(
        n_epochs=1, batch_size=16, critic_updates_base=1,
        critic_updates_epoch_div=1, energy_distance_samples=4,
        predictor_epochs=2, predictor_val_fraction=0.0,
    )
    base.update(overrides)
    return base


def _synthetic_data(n_rows=24, **overrides):
    base = dict(kind="synthetic", synthetic_kind="uniform",
                n_rows=n_rows, n_features=4, data_seed=11)
    base.update(overrides)
    return base


def _train_config_file(tmp_path, methods=("igani",), name="config.json", **extra):
    return _write_config(
        tmp_path / name,
        seed=5,
        methods=list(methods),
        data=_synthetic_data(),
        train=_train_section(),
        mask={"missing_rate": 0.3},
        **extra,
    )


def _grid_config_file(tmp_path, name="grid.json", grid=None, methods=("mean",), n_rows=40):
    return _write_config(
        tmp_path / name,
        seed=5,
        methods=list(methods),
        data=_synthetic_data(n_rows=n_rows, split_fractions=[0.4, 0.4, 0.2]),
        train=_train_section(),
        grid=grid or {"type": "imputation", "rates": [0.3, 0.6], "n_runs": 2},
    )


class TestConfigValidation:
    def test_missing_config_file(self, tmp_path, capsys):
        code = main(["train", "--config", str(tmp_path / "nope.json")])
        assert code == 2
        assert "config file not found" in capsys.readouterr().err

    def test_invalid_json(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["train", "--config", str(path)]) == 2
        assert "not valid JSON" in capsys.readouterr().err

    def test_unknown_top_level_key(self, tmp_path, capsys):
        cfg = _write_config(tmp_path / "c.json", bogus=1)
        assert main(["train", "--config", cfg]) == 2
        err = capsys.readouterr().err
        assert "config error at $" in err
        assert "bogus" in err

    def test_bad_nested_value_reports_json_path(self, tmp_path, capsys):
        cfg = _write_config(tmp_path / "c.json", train={"learning_rate": -1.0})
        assert main(["train", "--config", cfg]) == 2
        assert "$.train.learning_rate" in capsys.readouterr().err

    def test_mask_rate_and_path_conflict(self, tmp_path, capsys):
        cfg = _write_config(
            tmp_path / "c.json",
            data=_synthetic_data(),
            mask={"missing_rate": 0.2, "path": "mask.csv"},
        )
        assert main(["train", "--config", cfg]) == 2
        assert "either missing_rate or path" in capsys.readouterr().err

    def test_train_needs_data_section(self, tmp_path, capsys):
        cfg = _write_config(tmp_path / "c.json", seed=1)
        assert main(["train", "--config", cfg]) == 2
        assert "$.data" in capsys.readouterr().err

    def test_grid_needs_grid_section(self, tmp_path, capsys):
        cfg = _write_config(tmp_path / "c.json", data=_synthetic_data())
        assert main(["grid", "--config", cfg]) == 2
        assert "$.grid" in capsys.readouterr().err

    def test_no_subcommand_prints_help(self, capsys):
        assert main([]) == 2
        assert "usage:" in capsys.readouterr().err


class TestTrain:
    def test_writes_checkpoint_artifacts(self, tmp_path, capsys):
        cfg = _train_config_file(tmp_path, methods=("mean", "igani"))
        out = tmp_path / "out"
        assert main(["train", "--config", cfg, "--output", str(out)]) == 0
        for method in ("mean", "igani"):
            assert (out / method / "method.json").exists()
            assert (out / method / "stats.json").exists()
        assert (out / "igani" / "generator.bin").exists()
        assert (out / "mask.csv").exists()
        resolved = json.loads((out / "resolved_config.json").read_text())
        assert resolved["seed"] == 5
        assert resolved["train"]["lambda_gp"] == 10.0  # defaults materialized
        stdout = capsys.readouterr().out
        assert "train status=done method=igani" in stdout
        assert "train status=epoch method=igani epoch=0" in stdout

    def test_bitwise_deterministic_across_runs(self, tmp_path):
        cfg = _train_config_file(tmp_path)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["train", "--config", cfg, "--output", str(out1)]) == 0
        assert main(["train", "--config", cfg, "--output", str(out2)]) == 0
        first = (out1 / "igani" / "generator.bin").read_bytes()
        assert first == (out2 / "igani" / "generator.bin").read_bytes()
        assert (out1 / "mask.csv").read_bytes() == (out2 / "mask.csv").read_bytes()
        loss1 = (out1 / "igani" / "loss_history.csv").read_bytes()
        assert loss1 == (out2 / "igani" / "loss_history.csv").read_bytes()

    def test_seed_override_changes_weights(self, tmp_path):
        cfg = _train_config_file(tmp_path)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["train", "--config", cfg, "--output", str(out1)]) == 0
        assert main(["train", "--config", cfg, "--output", str(out2), "--seed", "6"]) == 0
        first = (out1 / "igani" / "generator.bin").read_bytes()
        assert first != (out2 / "igani" / "generator.bin").read_bytes()

    def test_refuses_overwrite_without_flag(self, tmp_path, capsys):
        cfg = _train_config_file(tmp_path)
        out = tmp_path / "out"
        assert main(["train", "--config", cfg, "--output", str(out)]) == 0
        assert main(["train", "--config", cfg, "--output", str(out)]) == 2
        assert "already exists" in capsys.readouterr().err
        assert main(["train", "--config", cfg, "--output", str(out), "--overwrite"]) == 0

    def test_output_dir_env_var(self, tmp_path, monkeypatch):
        cfg = _train_config_file(tmp_path, methods=("mean",))
        env_out = tmp_path / "env-out"
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(env_out))
        assert main(["train", "--config", cfg]) == 0
        assert (env_out / "mean" / "method.json").exists()

    def test_missing_data_file_is_a_data_error(self, tmp_path, capsys):
        cfg = _write_config(
            tmp_path / "c.json",
            data={"kind": "csv", "path": str(tmp_path / "absent.csv")},
            train=_train_section(),
        )
        assert main(["train", "--config", cfg, "--output", str(tmp_path / "o")]) == 3
        assert "error:" in capsys.readouterr().err

    def test_divergence_exits_4(self, tmp_path, capsys):
        cfg = _write_config(
            tmp_path / "c.json",
            seed=5,
            methods=["igani"],
            data=_synthetic_data(),
            train=_train_section(learning_rate=1e150),
        )
        assert main(["train", "--config", cfg, "--output", str(tmp_path / "o")]) == 4
        assert "training diverged" in capsys.readouterr().err


class TestImpute:
    @pytest.fixture()
    def checkpoint(self, tmp_path):
        cfg = _train_config_file(tmp_path, methods=("mean", "igani"))
        out = tmp_path / "ckpt"
        assert main(["train", "--config", cfg, "--output", str(out)]) == 0
        return out

    @pytest.fixture()
    def impute_inputs(self, tmp_path):
        rng = NoiseSource("uniform01", 77)
        x = 3.0 * rng.noise(10, 4) + 1.0
        m = (rng.uniform(10, 4) > 0.4).astype(np.float64)
        m[0, 0] = 0.0  # make sure something is missing
        data_path = tmp_path / "newdata.csv"
        mask_path = tmp_path / "newmask.csv"
        write_matrix_csv(x, data_path)
        write_matrix_csv(m, mask_path)
        return x, m, str(data_path), str(mask_path)

    def test_observed_entries_pass_through_bitwise(self, checkpoint, impute_inputs, tmp_path, capsys):
        x, m, data_path, mask_path = impute_inputs
        out_path = tmp_path / "imputed.csv"
        code = main(["impute", "--checkpoint", str(checkpoint / "igani"),
                     "--data", data_path, "--mask", mask_path, "--out", str(out_path)])
        assert code == 0
        result = read_matrix_file(out_path)
        observed = m > 0.5
        assert np.array_equal(result[observed], x[observed])
        assert np.all(np.isfinite(result))
        assert not np.array_equal(result[~observed], x[~observed])
        assert "impute status=done method=igani" in capsys.readouterr().out

    def test_matches_library_pipeline(self, checkpoint, impute_inputs, tmp_path):
        x, m, data_path, mask_path = impute_inputs
        out_path = tmp_path / "imputed.csv"
        assert main(["impute", "--checkpoint", str(checkpoint / "igani"),
                     "--data", data_path, "--mask", mask_path, "--out", str(out_path)]) == 0

        trained = load_trained_imputer(checkpoint / "igani")
        stats = _read_stats(checkpoint / "igani" / "stats.json")
        x_norm = transform(DataMatrix(x), stats)
        z_rng = NoiseSource(trained.config.noise,
                            _derive_seed(trained.config.seed, "cli-impute"))
        z = trained.config.noise_scale * z_rng.noise(10, 4)
        _, v = impute(trained.imputer, x_norm, MaskMatrix(m), z)
        restored = transform(v, stats, "inverse")
        expected = np.where(m > 0.5, x, restored.values)
        np.testing.assert_array_equal(read_matrix_file(out_path), expected)

    def test_mean_checkpoint_imputes_feature_means(self, checkpoint, impute_inputs, tmp_path):
        x, m, data_path, mask_path = impute_inputs
        out_path = tmp_path / "imputed.csv"
        assert main(["impute", "--checkpoint", str(checkpoint / "mean"),
                     "--data", data_path, "--mask", mask_path, "--out", str(out_path)]) == 0
        result = read_matrix_file(out_path)
        missing = m < 0.5
        # A mean imputer fills every missing slot of a feature with one value.
        for j in range(4):
            column = result[missing[:, j], j]
            if column.size > 1:
                assert np.all(column == column[0])

    def test_not_a_checkpoint_dir(self, impute_inputs, tmp_path, capsys):
        _, _, data_path, mask_path = impute_inputs
        code = main(["impute", "--checkpoint", str(tmp_path),
                     "--data", data_path, "--mask", mask_path,
                     "--out", str(tmp_path / "o.csv")])
        assert code == 3
        assert "not a checkpoint directory" in capsys.readouterr().err

    def test_data_mask_shape_mismatch(self, checkpoint, tmp_path, capsys):
        data_path = tmp_path / "d.csv"
        mask_path = tmp_path / "m.csv"
        write_matrix_csv(np.ones((3, 4)), data_path)
        write_matrix_csv(np.ones((2, 4)), mask_path)
        code = main(["impute", "--checkpoint", str(checkpoint / "igani"),
                     "--data", str(data_path), "--mask", str(mask_path),
                     "--out", str(tmp_path / "o.csv")])
        assert code == 3


class TestGrid:
    def test_imputation_grid_end_to_end(self, tmp_path, capsys):
        cfg = _grid_config_file(tmp_path)
        out = tmp_path / "out"
        assert main(["grid", "--config", cfg, "--output", str(out)]) == 0
        table = MetricsTable.read_csv(out / "metrics.csv")
        assert len(table.records) == 4  # 2 rates x 2 runs x 1 method
        stdout = capsys.readouterr().out
        assert "grid status=plan groups=4 cached=0 pending=4" in stdout
        assert "grid status=complete groups=4/4" in stdout

    def test_resume_matches_fresh_run(self, tmp_path, capsys):
        cfg = _grid_config_file(tmp_path)
        fresh, resumed = tmp_path / "fresh", tmp_path / "resumed"
        assert main(["grid", "--config", cfg, "--output", str(fresh)]) == 0
        # Interrupt after one group, then resume.
        assert main(["grid", "--config", cfg, "--output", str(resumed),
                     "--max-groups", "1"]) == 0
        assert main(["grid", "--config", cfg, "--output", str(resumed)]) == 0
        stdout = capsys.readouterr().out
        assert "grid status=plan groups=4 cached=1 pending=3" in stdout
        assert (fresh / "metrics.csv").read_bytes() == (resumed / "metrics.csv").read_bytes()

    def test_parallel_jobs_match_serial(self, tmp_path):
        cfg = _grid_config_file(tmp_path)
        serial, parallel = tmp_path / "serial", tmp_path / "parallel"
        assert main(["grid", "--config", cfg, "--output", str(serial)]) == 0
        assert main(["grid", "--config", cfg, "--output", str(parallel), "--jobs", "2"]) == 0
        assert (serial / "metrics.csv").read_bytes() == (parallel / "metrics.csv").read_bytes()

    def test_overwrite_recomputes(self, tmp_path, capsys):
        cfg = _grid_config_file(tmp_path)
        out = tmp_path / "out"
        assert main(["grid", "--config", cfg, "--output", str(out)]) == 0
        capsys.readouterr()
        assert main(["grid", "--config", cfg, "--output", str(out), "--overwrite"]) == 0
        assert "grid status=plan groups=4 cached=0 pending=4" in capsys.readouterr().out

    def test_prediction_grid_record_count(self, tmp_path):
        grid = {"type": "prediction", "train_rates": [0.2, 0.5],
                "test_rates": [0.3], "n_runs": 1}
        cfg = _grid_config_file(tmp_path, grid=grid, n_rows=60)
        out = tmp_path / "out"
        assert main(["grid", "--config", cfg, "--output", str(out)]) == 0
        table = MetricsTable.read_csv(out / "metrics.csv")
        assert len(table.records) == 2
        assert all(rec.test_missing_rate == 0.3 for rec in table.records)

    def test_per_sample_csv(self, tmp_path):
        grid = {"type": "imputation", "rates": [0.3], "n_runs": 1, "per_sample": True}
        cfg = _grid_config_file(tmp_path, grid=grid)
        out = tmp_path / "out"
        assert main(["grid", "--config", cfg, "--output", str(out)]) == 0
        lines = (out / "per_sample.csv").read_text().splitlines()
        assert lines[0] == "method,row,feature_index,abs_error"
        assert len(lines) > 1
        assert lines[1].startswith("mean,")


class TestPlot:
    @pytest.fixture()
    def grid_out(self, tmp_path):
        cfg = _grid_config_file(tmp_path, methods=("mean", "igani"),
                                grid={"type": "imputation", "rates": [0.3, 0.6],
                                      "n_runs": 2, "per_sample": True})
        out = tmp_path / "out"
        assert main(["grid", "--config", cfg, "--output", str(out)]) == 0
        return out

    def test_mae_vs_rate_svg_has_tagged_artists(self, grid_out, tmp_path):
        svg_path = tmp_path / "curve.svg"
        assert main(["plot", "--kind", "mae_vs_rate",
                     "--metrics", str(grid_out / "metrics.csv"),
                     "--out", str(svg_path)]) == 0
        svg = svg_path.read_text()
        assert 'id="mean-igani"' in svg
        assert 'id="band-igani"' in svg
        assert 'id="mean-mean"' in svg
        assert 'id="band-mean"' not in svg  # the baseline is stars, no band

    def test_heatmap_from_prediction_grid(self, tmp_path):
        grid = {"type": "prediction", "train_rates": [0.2, 0.5],
                "test_rates": [0.2, 0.5], "n_runs": 1}
        cfg = _grid_config_file(tmp_path, grid=grid, n_rows=60)
        out = tmp_path / "out"
        assert main(["grid", "--config", cfg, "--output", str(out)]) == 0
        svg_path = tmp_path / "heat.svg"
        assert main(["plot", "--kind", "heatmap",
                     "--metrics", str(out / "metrics.csv"),
                     "--out", str(svg_path)]) == 0
        assert svg_path.exists()

    def test_heatmap_rejects_records_without_both_rates(self, tmp_path, capsys):
        from ganimpute.evaluation import MetricsRecord

        table = MetricsTable([MetricsRecord(
            method="mean", split="test", mae=0.5, run_id=0, seed=1,
            vmr=0.2, omr=0.2, smr=0.2, variable="volume",
        )])
        path = tmp_path / "multivar.csv"
        table.write_csv(path)
        code = main(["plot", "--kind", "heatmap",
                     "--metrics", str(path), "--out", str(tmp_path / "x.svg")])
        assert code == 2
        assert "train and test rates" in capsys.readouterr().err

    def test_per_sample_plot(self, grid_out, tmp_path):
        svg_path = tmp_path / "per_sample.svg"
        assert main(["plot", "--kind", "per_sample",
                     "--metrics", str(grid_out / "per_sample.csv"),
                     "--out", str(svg_path)]) == 0
        assert svg_path.exists()

    def test_empty_metrics_csv_is_a_config_error(self, tmp_path, capsys):
        from ganimpute.evaluation import CSV_COLUMNS

        path = tmp_path / "empty.csv"
        path.write_text(",".join(CSV_COLUMNS) + "\n")
        code = main(["plot", "--kind", "mae_vs_rate",
                     "--metrics", str(path), "--out", str(tmp_path / "x.svg")])
        assert code == 2
        assert "no records to plot" in capsys.readouterr().err

    def test_missing_per_sample_file(self, tmp_path, capsys):
        code = main(["plot", "--kind", "per_sample",
                     "--metrics", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "x.svg")])
        assert code == 3
        assert "not found" in capsys.readouterr().err
