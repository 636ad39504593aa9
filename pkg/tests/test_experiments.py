import csv
import math

import numpy as np
import pytest

from dpadapt import experiments as ex
from dpadapt.errors import InvalidParameterError


def small_config(**overrides):
    base = dict(d=3, sigma2=0.02, m=20, n_grid=(30,), epsilons=(1.0, math.inf),
                repeats=2, K=15, test_size=25, base_seed=7)
    base.update(overrides)
    return ex.ExperimentConfig(**base)


class TestExperimentConfig:
    def test_defaults_match_synthetic_setup(self):
        cfg = ex.ExperimentConfig()
        assert cfg.d == 10
        assert cfg.sigma2 == pytest.approx(1.0 / 90.0)
        assert cfg.m == 1000
        assert cfg.n_grid == (1000, 2000, 4000, 8000)
        assert cfg.repeats == 10
        assert cfg.K == 1000
        assert cfg.lam == 0.001
        assert cfg.delta == pytest.approx(1.0 / 8000.0)
        assert cfg.mixture_weight_P == 0.25

    def test_rejects_bad_values(self):
        with pytest.raises(InvalidParameterError):
            small_config(m=0)
        with pytest.raises(InvalidParameterError):
            small_config(sigma2=-1.0)
        with pytest.raises(InvalidParameterError):
            small_config(mixture_weight_P=1.5)
        with pytest.raises(InvalidParameterError):
            small_config(epsilons=(0.0,))


class TestSyntheticData:
    def test_centers(self):
        cP, cQ = ex.center_P(4), ex.center_Q(4)
        s = 1.0 / math.sqrt(8.0)
        np.testing.assert_allclose(cP, [-s, s, -s, s])
        np.testing.assert_allclose(cQ, [s, s, s, s])

    def test_labeling_function_piecewise(self):
        # along the all-ones unit direction u: f(t*u) = t if t > 0 else t/2
        d = 4
        u = np.ones(d) / 2.0   # unit norm
        np.testing.assert_allclose(ex.labeling_function([3.0 * u]), [3.0])
        np.testing.assert_allclose(ex.labeling_function([-3.0 * u]), [-1.5])
        np.testing.assert_allclose(ex.labeling_function([0.0 * u]), [0.0])

    def test_shapes(self):
        cfg = small_config()
        sX, sy, tX, teX, tey = ex.synth_generate(cfg, seed=1, n=30)
        assert sX.shape == (20, 3)
        assert sy.shape == (20,)
        assert tX.shape == (30, 3)
        assert teX.shape == (25, 3)
        assert tey.shape == (25,)
        np.testing.assert_allclose(sy, ex.labeling_function(sX))

    def test_deterministic_in_seed(self):
        cfg = small_config()
        a = ex.synth_generate(cfg, seed=5, n=30)
        b = ex.synth_generate(cfg, seed=5, n=30)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)
        c = ex.synth_generate(cfg, seed=6, n=30)
        assert not np.array_equal(a[0], c[0])

    def test_mixture_weight_extremes(self):
        # weight 1: every source point near the alternating center
        cfg = small_config(mixture_weight_P=1.0, sigma2=1e-6)
        sX = ex.synth_generate(cfg, seed=0, n=30)[0]
        np.testing.assert_allclose(sX, np.tile(ex.center_P(3), (20, 1)),
                                   atol=0.01)
        cfg = small_config(mixture_weight_P=0.0, sigma2=1e-6)
        sX = ex.synth_generate(cfg, seed=0, n=30)[0]
        np.testing.assert_allclose(sX, np.tile(ex.center_Q(3), (20, 1)),
                                   atol=0.01)


class TestSeeds:
    def test_cell_seed_distinct_across_axes(self):
        seen = set()
        for alg in ex.ALGORITHMS:
            for n in (100, 200):
                for ei in (0, 1):
                    for rep in (0, 1):
                        seen.add(ex.cell_seed(0, alg, n, ei, rep))
        assert len(seen) == len(ex.ALGORITHMS) * 8

    def test_data_seed_shared_across_algorithms(self):
        # data seed ignores the algorithm and epsilon axes entirely
        s = ex.data_seed(3, 100, 2)
        assert s == ex.data_seed(3, 100, 2)
        assert s != ex.data_seed(3, 100, 3)
        assert s != ex.data_seed(4, 100, 2)


class TestRunCell:
    def test_oracle_beats_public_only(self):
        cfg = small_config(m=60, n_grid=(200,), test_size=200, d=3)
        oracle = [ex.run_cell(cfg, "oracle-private", 200, math.inf, 1, rep).test_mse
                  for rep in range(3)]
        public = [ex.run_cell(cfg, "public-only", 200, math.inf, 1, rep).test_mse
                  for rep in range(3)]
        assert np.mean(oracle) <= np.mean(public)

    def test_record_fields(self):
        cfg = small_config()
        rec = ex.run_cell(cfg, "two-stage-fw", 30, 1.0, 0, 1)
        assert rec.algorithm == "two-stage-fw"
        assert rec.n == 30
        assert rec.epsilon == 1.0
        assert rec.repeat == 1
        assert rec.seed == ex.cell_seed(7, "two-stage-fw", 30, 0, 1)
        assert math.isfinite(rec.spectral_norm)
        assert math.isfinite(rec.test_mse)

    def test_oracle_has_no_spectral_norm(self):
        cfg = small_config()
        rec = ex.run_cell(cfg, "oracle-private", 30, 1.0, 0, 0)
        assert math.isnan(rec.spectral_norm)

    def test_unknown_algorithm_rejected(self):
        cfg = small_config()
        with pytest.raises(InvalidParameterError):
            ex.run_cell(cfg, "magic", 30, 1.0, 0, 0)


class TestRunSweep:
    def test_full_grid_covered(self):
        cfg = small_config()
        records = ex.run_sweep(cfg, jobs=1)
        assert len(records) == len(ex.ALGORITHMS) * 1 * 2 * 2
        keys = {(r.algorithm, r.n, r.epsilon, r.repeat) for r in records}
        assert len(keys) == len(records)

    def test_jobs_do_not_change_results(self, tmp_path):
        cfg = small_config()
        rec1 = ex.run_sweep(cfg, jobs=1)
        rec4 = ex.run_sweep(cfg, jobs=4)
        p1, p4 = tmp_path / "raw1.csv", tmp_path / "raw4.csv"
        ex.write_raw_csv(rec1, p1)
        ex.write_raw_csv(rec4, p4)
        assert p1.read_bytes() == p4.read_bytes()

    def test_failed_cell_becomes_nan_row(self, monkeypatch):
        cfg = small_config()

        def boom(*a, **k):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(ex, "run_cell", boom)
        records = ex.run_sweep(cfg, jobs=1, algorithms=("public-only",))
        assert len(records) == 4
        assert all(math.isnan(r.test_mse) for r in records)


class TestCSVOutput:
    def test_raw_schema_and_values(self, tmp_path):
        recs = [ex.ExperimentRecord("public-only", 10, math.inf, 0, 42,
                                    math.nan, 0.125),
                ex.ExperimentRecord("two-stage-fw", 10, 0.5, 1, 43,
                                    0.25, 0.5)]
        path = tmp_path / "raw.csv"
        ex.write_raw_csv(recs, path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ex.RAW_HEADER
        assert rows[1] == ["public-only", "10", "inf", "0", "42", "nan", "0.125"]
        assert rows[2] == ["two-stage-fw", "10", "0.5", "1", "43", "0.25", "0.5"]

    def test_raw_roundtrips_floats_exactly(self, tmp_path):
        v = 0.1 + 0.2  # not exactly representable in short decimal
        recs = [ex.ExperimentRecord("public-only", 1, 1.0, 0, 0, v, v)]
        path = tmp_path / "raw.csv"
        ex.write_raw_csv(recs, path)
        row = list(csv.reader(path.open()))[1]
        assert float(row[5]) == v
        assert float(row[6]) == v

    def test_aggregate_mean_std_count(self):
        recs = [ex.ExperimentRecord("public-only", 10, 1.0, r, r, math.nan, v)
                for r, v in enumerate([1.0, 2.0, 3.0])]
        rows = ex.aggregate(recs)
        # spectral_norm is all-NaN -> dropped; test_mse has 3 finite values
        assert len(rows) == 1
        alg, n, eps, metric, mean, std, count = rows[0]
        assert (alg, n, eps, metric) == ("public-only", 10, 1.0, "test_mse")
        assert mean == pytest.approx(2.0)
        assert std == pytest.approx(1.0)   # ddof=1: sqrt(((1)+(0)+(1))/2)
        assert count == 3

    def test_aggregate_skips_nan_values(self):
        recs = [ex.ExperimentRecord("x", 1, 1.0, 0, 0, math.nan, 1.0),
                ex.ExperimentRecord("x", 1, 1.0, 1, 1, math.nan, math.nan)]
        rows = ex.aggregate(recs)
        assert rows[0][6] == 1   # count excludes the NaN
        assert rows[0][5] == 0.0  # single value -> std 0

    def test_aggregate_csv_schema(self, tmp_path):
        recs = [ex.ExperimentRecord("x", 1, math.inf, 0, 0, 0.5, 1.0)]
        path = tmp_path / "agg.csv"
        ex.write_aggregate_csv(ex.aggregate(recs), path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ex.AGG_HEADER
        assert rows[1][:4] == ["x", "1", "inf", "spectral_norm"]
