import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import metrics_loops
from windcast.forecast import (
    HorizonForecaster,
    ModelKind,
    ModelSpec,
    build_pipeline,
    evaluate,
    model_label,
    run_experiment,
    run_pipeline,
)
from windcast.nn import GRU, MLP, RNN, TCN, GruOnly, MlpRegressor, RnnOnly, TcnGru
from windcast.pssa import PssaConfig
from windcast.series import DataError, Scaler, TimeSeries, inverse, transform
from windcast.synthetic import SyntheticConfig, generate
from windcast.trainer import TrainConfig

FAST = TrainConfig(epochs=2, batch_size=32, seed=0)


@pytest.fixture(scope="module")
def series():
    ts, _ = generate(SyntheticConfig(n=260, seed=3), "syn")
    return ts


def small(kind=ModelKind.TCN_GRU, **kwargs):
    spec = ModelSpec(kind, hidden=8)
    return build_pipeline(spec, PssaConfig(), FAST, **kwargs)


class TestEvaluate:
    def test_hand_values(self):
        m = evaluate([2.0, 3.0], [1.0, 5.0])
        assert m.mae == 1.5
        assert m.mape == pytest.approx(70.0)
        assert m.rmse == pytest.approx(np.sqrt(2.5))

    def test_reference_triple(self):
        m = evaluate([9.0, 11.0, 10.0, 12.0], [10.0, 10.0, 12.0, 10.0])
        assert (m.mae, m.rmse) == (1.5, pytest.approx(1.58114, abs=1e-5))
        assert m.mape == pytest.approx(100 * (0.1 + 0.1 + 1 / 6 + 0.2) / 4)

    def test_zero_actual(self):
        with pytest.raises(ValueError, match="zero"):
            evaluate([1.0, 2.0], [1.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            evaluate([1.0], [1.0, 2.0])

    @given(st.integers(0, 10_000), st.integers(1, 50))
    def test_matches_loops_and_ordering(self, seed, n):
        rng = np.random.default_rng(seed)
        a = rng.uniform(0.5, 20, n)
        p = a + rng.normal(0, 2, n)
        m = evaluate(p, a)
        ref = metrics_loops(list(p), list(a))
        np.testing.assert_allclose([m.mae, m.mape, m.rmse], ref, rtol=1e-12)
        assert m.mae <= m.rmse + 1e-12

    @given(st.integers(0, 10_000), st.floats(0.1, 100), st.floats(-50, 50))
    def test_scaling_round_trip_preserves_metrics(self, seed, std, mean):
        rng = np.random.default_rng(seed)
        a = rng.uniform(1, 20, 30)
        p = a + rng.normal(0, 1, 30)
        s = Scaler(mean, std)
        m1, m2 = evaluate(inverse(s, transform(s, p)), a), evaluate(p, a)
        for x, y in ((m1.mae, m2.mae), (m1.mape, m2.mape), (m1.rmse, m2.rmse)):
            assert abs(x - y) <= 1e-10 * max(1.0, abs(y))


class TestBuild:
    @pytest.mark.parametrize(
        "kind,cls,inner",
        [
            (ModelKind.TCN_GRU, TcnGru, (TCN, GRU)),
            (ModelKind.GRU_ONLY, GruOnly, (GRU,)),
            (ModelKind.RNN_ONLY, RnnOnly, (RNN,)),
            (ModelKind.MLP, MlpRegressor, (MLP,)),
        ],
    )
    def test_architecture(self, kind, cls, inner):
        f = build_pipeline(kind)
        assert sorted(f.models) == [1, 2, 3]
        models = list(f.models.values())
        assert all(type(m) is cls for m in models)
        assert len({id(m) for m in models}) == 3
        subs = {type(v) for v in vars(models[0]).values()}
        assert set(inner) <= subs

    def test_defaults(self):
        f = build_pipeline()
        m = f.models[1]
        assert m.tcn.receptive_field == 8 and m.gru.hidden == 64
        assert m.tcn.blocks[0].layers[0].conv.W2.shape == (10, 1)
        assert f.window_dim == 20 and f.delay == 1 and f.mode == "paper"

    def test_seeds_differ_per_horizon(self):
        f = build_pipeline(ModelKind.GRU_ONLY)
        w = [f.models[h].gru.W_r.value for h in (1, 2, 3)]
        assert not np.array_equal(w[0], w[1])
        g = build_pipeline(ModelKind.GRU_ONLY)
        assert np.array_equal(w[0], g.models[1].gru.W_r.value)

    def test_labels(self):
        assert model_label(build_pipeline()) == "P-SSA-TCN-GRU"
        assert model_label(build_pipeline(ModelKind.MLP, denoise=False)) == "BPNN"

    @pytest.mark.parametrize(
        "kwargs",
        [{"mode": "future"}, {"horizons": ()}, {"horizons": (1, 1)}, {"window_dim": 0}],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            build_pipeline(**kwargs)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ModelSpec(kernel_size=3)
        with pytest.raises(ValueError):
            ModelSpec(ModelKind.MLP, mlp_widths=(20, 2))


class TestAlignment:
    def test_origins(self):
        f = HorizonForecaster()
        for h in (1, 2, 3):
            o = f.test_origins(1000, 200, h)
            assert o[0] == 799 and o[-1] == 999 - h
            assert o.size == 200 - (h - 1)

    def test_train_windows_stay_inside_train(self):
        f = HorizonForecaster()
        v = np.arange(100.0)
        for h in (1, 3):
            X, y = f.train_windows(v, 80, h)
            assert y.max() == 79
            np.testing.assert_array_equal(y, X[:, -1] + h)
            assert X.shape == (80 - 19 - h, 20)

    def test_short_training_segment(self):
        f = HorizonForecaster()
        with pytest.raises(DataError, match="too short"):
            f.fit(TimeSeries(np.linspace(1, 2, 40)), 20)


class TestPipeline:
    def test_point_counts_and_raw_actuals(self, series):
        report = run_pipeline(series, small(), n_test=60)
        for h in (1, 2, 3):
            p = report.predictions[h]
            assert p.predicted.size == 60 - (h - 1)
            np.testing.assert_array_equal(p.actual, series.values[p.index])
            assert p.index[0] == 200 - 1 + h
        assert [r.horizon for r in report.rows] == [1, 2, 3]
        assert all(r.mae <= r.rmse for r in report.rows)

    def test_deterministic(self, series):
        a = run_pipeline(series, small(ModelKind.GRU_ONLY), n_test=60)
        b = run_pipeline(series, small(ModelKind.GRU_ONLY), n_test=60)
        for h in (1, 2, 3):
            assert a.predictions[h].predicted.tobytes() == b.predictions[h].predicted.tobytes()

    def test_horizons_are_independent(self, series):
        f = small()
        f.fit(series, 60)
        before = {h: f.predict_test(series, 60)[h].predicted.copy() for h in (1, 2)}
        f.fit(series, 60, horizons=[3])
        after = f.predict_test(series, 60)
        for h in (1, 2):
            assert before[h].tobytes() == after[h].predicted.tobytes()

    def test_causal_mode(self, series):
        f = small(ModelKind.MLP, mode="causal")
        report = run_pipeline(series, f, n_test=30)
        assert report.mode == "causal"
        assert all(np.isfinite(r.mape) for r in report.rows)
        # windows never see values beyond their origin
        X, origins = f.test_windows(series, 30, 1)
        cut = series.values.copy()
        cut[origins[5] + 1 :] = 50.0
        X2, _ = f.test_windows(TimeSeries(cut), 30, 1)
        np.testing.assert_allclose(X2[5], X[5], atol=1e-12)

    def test_raw_mode(self, series):
        f = small(ModelKind.MLP, denoise=False)
        report = run_pipeline(series, f, n_test=30)
        assert report.mode == "raw" and report.rows[0].model == "BPNN"

    def test_state_round_trip(self, series):
        f = small(ModelKind.RNN_ONLY)
        f.fit(series, 40)
        g = small(ModelKind.RNN_ONLY)
        g.load_state_dict(f.state_dict())
        a, b = f.predict_test(series, 40), g.predict_test(series, 40)
        assert all(a[h].predicted.tobytes() == b[h].predicted.tobytes() for h in (1, 2, 3))


def test_experiment_grid(series, tmp_path):
    grid = [(small(kind), series) for kind in ModelKind]
    result = run_experiment(grid, tmp_path, n_test=40)
    assert len(result.rows) == 12
    with open(tmp_path / "report_table.csv", newline="") as fh:
        table = list(csv.reader(fh))
    header, body = table[0], table[1:]
    assert len(body) == 4 and len(header) == 2 + 9
    assert [r[1] for r in body] == ["P-SSA-TCN-GRU", "P-SSA-GRU", "P-SSA-RNN", "P-SSA-BPNN"]
    for r in body:
        for k in range(3):
            mae, rmse = float(r[2 + 3 * k]), float(r[4 + 3 * k])
            assert mae <= rmse
    assert (tmp_path / "report.txt").read_text().startswith("denoising mode: paper")
    assert len(list(tmp_path.glob("pred_syn_*_h*.csv"))) == 12
    assert not (tmp_path / "failures.txt").exists()


def test_experiment_records_failures(tmp_path):
    bad = TimeSeries(np.full(120, 4.0), origin_label="flat")
    good, _ = generate(SyntheticConfig(n=120, seed=1), "ok")
    result = run_experiment([(small(ModelKind.MLP), bad), (small(ModelKind.MLP), good)], tmp_path, n_test=20)
    assert [r.status == "ok" for r in result.rows] == [False] * 3 + [True] * 3
    assert "FAILED" in (tmp_path / "report_table.csv").read_text()
    assert (tmp_path / "failures.txt").read_text().count("flat") == 3
