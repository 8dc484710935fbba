from __future__ import annotations

import numpy as np
import pytest

from ganimpute.baselines import MeanImputer, fit_mean_imputer, iterative_impute, mean_impute
from ganimpute.data import DataMatrix, MaskMatrix, NoiseSource, generate_mcar_mask
from ganimpute.errors import DataError
from ganimpute.evaluation import masked_mae


class TestMeanImputer:
    def test_worked_example(self):
        x = DataMatrix([[1.0, 10.0], [3.0, 0.0], [0.0, 20.0]])
        m = MaskMatrix([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
        out = mean_impute(x, m)
        # feature 0 mean over observed rows: (1 + 3) / 2 = 2
        # feature 1 mean over observed rows: (10 + 20) / 2 = 15
        np.testing.assert_array_equal(out.values, [[1.0, 10.0], [3.0, 15.0], [2.0, 20.0]])

    def test_observed_entries_bitwise(self):
        rng = NoiseSource("uniform01", 0)
        x = DataMatrix(rng.noise(60, 7))
        m = generate_mcar_mask(60, 7, 0.3, rng.child("m"))
        out = mean_impute(x, m)
        obs = m.values > 0.5
        np.testing.assert_array_equal(out.values[obs], x.values[obs])

    def test_uniform_data_masked_mae_near_quarter(self):
        # For U(0,1) data imputed by its mean, E|X - 1/2| = 1/4.
        rng = NoiseSource("uniform01", 1)
        x = DataMatrix(rng.noise(2000, 10))
        m = generate_mcar_mask(2000, 10, 0.5, rng.child("m"))
        err = masked_mae(x, mean_impute(x, m), m)
        assert abs(err - 0.25) < 0.01

    def test_prefit_imputer_reused(self):
        imp = MeanImputer(np.array([5.0, 7.0]))
        x = DataMatrix([[0.0, 0.0]])
        m = MaskMatrix([[0.0, 0.0]])
        out = mean_impute(x, m, imp)
        np.testing.assert_array_equal(out.values, [[5.0, 7.0]])

    def test_fully_missing_feature_rejected(self):
        x = DataMatrix([[1.0, 2.0], [3.0, 4.0]])
        m = MaskMatrix([[1.0, 0.0], [1.0, 0.0]])
        with pytest.raises(DataError, match="feature 1"):
            fit_mean_imputer(x, m)

    def test_width_mismatch_rejected(self):
        imp = MeanImputer(np.array([5.0]))
        x = DataMatrix([[0.0, 0.0]])
        m = MaskMatrix([[1.0, 1.0]])
        with pytest.raises(DataError):
            mean_impute(x, m, imp)

    def test_imputer_validation(self):
        with pytest.raises(DataError):
            MeanImputer(np.array([[1.0]]))
        with pytest.raises(DataError):
            MeanImputer(np.array([np.nan]))


class TestIterativeImputer:
    def test_zero_rounds_equals_mean_imputation(self):
        rng = NoiseSource("uniform01", 2)
        x = DataMatrix(rng.noise(40, 5))
        m = generate_mcar_mask(40, 5, 0.4, rng.child("m"))
        np.testing.assert_array_equal(
            iterative_impute(x, m, n_rounds=0).values, mean_impute(x, m).values
        )

    def test_recovers_collinear_feature(self):
        # feature 1 = 2 * feature 0 + 1 exactly; the regression should nail
        # the missing entries once the relation is fit on observed rows.
        rng = NoiseSource("uniform01", 3)
        f0 = rng.uniform(80, 1)[:, 0]
        x = DataMatrix(np.column_stack([f0, 2.0 * f0 + 1.0]))
        mask = np.ones((80, 2))
        mask[:20, 1] = 0.0  # first 20 rows of feature 1 missing
        m = MaskMatrix(mask)
        out = iterative_impute(x, m, n_rounds=3, ridge=1e-10)
        assert np.abs(out.values[:20, 1] - x.values[:20, 1]).max() < 1e-6

    def test_improves_on_means_for_low_rank_data(self):
        rng = NoiseSource("uniform01", 4)
        u = rng.standard_normal(100, 3)
        v = rng.standard_normal(3, 8)
        x = DataMatrix(u @ v)
        m = generate_mcar_mask(100, 8, 0.3, rng.child("m"))
        mean_err = masked_mae(x, mean_impute(x, m), m)
        iter_err = masked_mae(x, iterative_impute(x, m), m)
        assert iter_err < mean_err

    def test_observed_entries_bitwise(self):
        rng = NoiseSource("uniform01", 5)
        x = DataMatrix(rng.noise(50, 6))
        m = generate_mcar_mask(50, 6, 0.5, rng.child("m"))
        out = iterative_impute(x, m, n_rounds=2)
        obs = m.values > 0.5
        np.testing.assert_array_equal(out.values[obs], x.values[obs])

    def test_single_feature_falls_back_to_means(self):
        x = DataMatrix([[1.0], [0.0], [3.0]])
        m = MaskMatrix([[1.0], [0.0], [1.0]])
        out = iterative_impute(x, m, n_rounds=5)
        np.testing.assert_array_equal(out.values, [[1.0], [2.0], [3.0]])

    def test_deterministic(self):
        rng = NoiseSource("uniform01", 6)
        x = DataMatrix(rng.noise(30, 4))
        m = generate_mcar_mask(30, 4, 0.4, rng.child("m"))
        a = iterative_impute(x, m)
        b = iterative_impute(x, m)
        np.testing.assert_array_equal(a.values, b.values)

    def test_argument_validation(self):
        x = DataMatrix([[1.0, 2.0]])
        m = MaskMatrix([[1.0, 1.0]])
        with pytest.raises(DataError, match="n_rounds"):
            iterative_impute(x, m, n_rounds=-1)
        with pytest.raises(DataError, match="ridge"):
            iterative_impute(x, m, n_rounds=1, ridge=0.0)
        with pytest.raises(DataError):
            iterative_impute(x, MaskMatrix([[1.0, 1.0], [1.0, 1.0]]))
