import numpy as np
import pytest

from tovqa.features import FeatureVector
from tovqa.fusion import (
    ConvergenceError,
    FeatureScaler,
    ModelFormatError,
    SvrHyperparams,
    SvrModel,
    TrainingRow,
    TrainingSet,
    fit_scaler,
    grid_search,
    load_model,
    predict,
    rbf_kernel,
    save_model,
    smo_solve,
    train,
)

from .oracles import svr_dual_reference


def fv(v0, dlm=0.8, mot=5.0):
    return FeatureVector(v0, 0.5, 0.5, 0.5, dlm, mot)


def make_rows(n, label_fn, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        v0 = float(rng.uniform(0.05, 1.0))
        d = float(rng.uniform(0.05, 1.0))
        m = float(rng.uniform(0.0, 20.0))
        rows.append(
            TrainingRow(
                clip_id=f"clip{i:03d}",
                features=fv(v0, d, m),
                label=float(np.clip(label_fn(v0, d, m, rng), 0, 100)),
            )
        )
    return rows


class TestScaler:
    def test_two_point_column(self):
        rows = [
            TrainingRow("a", fv(0.2), 10.0),
            TrainingRow("b", fv(0.8), 20.0),
        ]
        s = fit_scaler(TrainingSet.from_rows(rows))
        out = s.transform(np.stack([rows[0].features.as_array(), rows[1].features.as_array()]))
        assert out[0, 0] == 0.0 and out[1, 0] == 1.0

    def test_constant_column_maps_to_half(self):
        rows = [TrainingRow(f"r{i}", fv(0.5), 10.0) for i in range(3)]
        s = fit_scaler(TrainingSet.from_rows(rows))
        out = s.transform(rows[0].features.as_array())
        assert np.all(out == 0.5)

    def test_three_point_column(self):
        rows = [TrainingRow(f"r{i}", fv(v), 10.0) for i, v in enumerate((0.1, 0.2, 0.3))]
        s = fit_scaler(TrainingSet.from_rows(rows))
        m = np.stack([r.features.as_array() for r in rows])
        np.testing.assert_allclose(s.transform(m)[:, 0], [0.0, 0.5, 1.0], atol=1e-12)

    def test_empty_error(self):
        with pytest.raises(ValueError, match="empty"):
            fit_scaler(TrainingSet.from_rows([]))

    def test_invariants(self):
        with pytest.raises(ValueError, match="max"):
            FeatureScaler(mins=(1.0,), maxs=(0.0,))


class TestSmo:
    def test_constant_targets(self):
        x = np.random.default_rng(0).uniform(0, 1, (5, 2))
        k = rbf_kernel(x, x, 1.0)
        r = smo_solve(k, np.full(5, 70.0), c=10.0, epsilon=1.0, tol=1e-8, max_iter=1000)
        assert np.all(r["beta"] == 0.0)
        assert r["bias"] == pytest.approx(70.0, abs=1e-12)

    def test_linear_points_within_tube(self):
        x = np.linspace(0, 1, 6).reshape(-1, 1)
        y = 10.0 * x.ravel()
        k = rbf_kernel(x, x, 2.0)
        r = smo_solve(k, y, c=100.0, epsilon=0.1, tol=1e-8, max_iter=100000)
        pred = k @ r["beta"] + r["bias"]
        assert np.max(np.abs(pred - y)) <= 0.1 + 1e-6
        ref = svr_dual_reference(k, y, 100.0, 0.1)
        assert r["objective"] == pytest.approx(ref, abs=1e-6)

    def test_dual_feasibility(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(0, 1, (12, 3))
        y = rng.uniform(0, 100, 12)
        k = rbf_kernel(x, x, 0.7)
        r = smo_solve(k, y, c=20.0, epsilon=1.0, tol=1e-8, max_iter=100000)
        assert abs(r["beta"].sum()) < 1e-9
        assert np.all(np.abs(r["beta"]) <= 20.0 + 1e-12)
        assert r["kkt_violation"] <= 1e-8

    def test_objective_matches_reference_small_corpus(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            n = int(rng.integers(2, 7))
            x = rng.uniform(0, 1, (n, 2))
            y = rng.uniform(0, 100, n)
            c = float(rng.choice([1.0, 10.0, 50.0]))
            eps = float(rng.choice([0.5, 1.0, 2.5]))
            k = rbf_kernel(x, x, float(rng.choice([0.5, 1.0])))
            got = smo_solve(k, y, c, eps, tol=1e-10, max_iter=500000)
            ref = svr_dual_reference(k, y, c, eps)
            assert ref is not None
            assert got["objective"] == pytest.approx(ref, abs=1e-6)

    def test_objective_monotone_decreasing(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(0, 1, (10, 2))
        y = rng.uniform(0, 100, 10)
        k = rbf_kernel(x, x, 1.0)
        r = smo_solve(k, y, 30.0, 1.0, tol=1e-8, max_iter=100000, track_objective=True)
        hist = r["objective_history"]
        assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))

    def test_convergence_error(self):
        rng = np.random.default_rng(10)
        x = rng.uniform(0, 1, (20, 2))
        y = rng.uniform(0, 100, 20)
        k = rbf_kernel(x, x, 1.0)
        with pytest.raises(ConvergenceError) as exc_info:
            smo_solve(k, y, 50.0, 0.1, tol=1e-12, max_iter=3)
        assert exc_info.value.kkt_violation > 0


class TestTrainPredict:
    def test_constant_label_model(self):
        rows = [TrainingRow(f"c{i}", fv(0.1 * i + 0.1), 70.0) for i in range(5)]
        model = train(TrainingSet.from_rows(rows), SvrHyperparams(epsilon=1.0))
        assert len(model.support_vectors) == 0
        for probe in (fv(0.3), fv(0.9, 0.2, 15.0)):
            assert predict(model, probe) == pytest.approx(70.0, abs=1e-9)

    def test_synthetic_regression_holdout(self):
        def label(v0, d, m, rng):
            return 40 * v0 + 30 * d + 10 + rng.uniform(-0.5, 0.5)

        rows = make_rows(50, label, seed=11)
        model = train(
            TrainingSet.from_rows(rows),
            SvrHyperparams(c=50.0, gamma=1.0, epsilon=1.0),
        )
        fresh = make_rows(10, label, seed=999)
        errs = [predict(model, r.features) - r.label for r in fresh]
        rmse = float(np.sqrt(np.mean(np.square(errs))))
        assert rmse < 2.0

    def test_single_support_vector_identity(self):
        # kernel self-similarity is 1: prediction at the SV is coeff + bias
        model = SvrModel(
            support_vectors=np.array([[0.5] * 6]),
            coefficients=np.array([3.0]),
            bias=50.0,
            hyperparams=SvrHyperparams(c=10.0),
            scaler=FeatureScaler(mins=(0.0,) * 6, maxs=(1.0,) * 6),
        )
        assert predict(model, np.full(6, 0.5)) == pytest.approx(53.0, abs=1e-12)

    def test_clipping(self):
        model = SvrModel(
            support_vectors=np.zeros((0, 6)),
            coefficients=np.zeros(0),
            bias=112.4,
            hyperparams=SvrHyperparams(),
            scaler=FeatureScaler(mins=(0.0,) * 6, maxs=(1.0,) * 6),
        )
        assert predict(model, fv(0.5)) == 100.0
        model2 = SvrModel(
            support_vectors=np.zeros((0, 6)),
            coefficients=np.zeros(0),
            bias=-3.0,
            hyperparams=SvrHyperparams(),
            scaler=FeatureScaler(mins=(0.0,) * 6, maxs=(1.0,) * 6),
        )
        assert predict(model2, fv(0.5)) == 0.0

    def test_feature_config_version_mismatch(self):
        rows = make_rows(6, lambda v0, d, m, rng: 50 * v0 + 20)
        model = train(TrainingSet.from_rows(rows))
        with pytest.raises(ValueError, match="feature config"):
            predict(model, fv(0.5), feature_config_version="other-config")

    def test_non_finite_input(self):
        rows = make_rows(6, lambda v0, d, m, rng: 50 * v0 + 20)
        model = train(TrainingSet.from_rows(rows))
        with pytest.raises(ValueError, match="finite"):
            predict(model, np.array([np.nan, 0.5, 0.5, 0.5, 0.5, 1.0]))

    def test_row_order_invariance(self):
        rows = make_rows(12, lambda v0, d, m, rng: 60 * v0 + 15, seed=3)
        m1 = train(TrainingSet.from_rows(rows))
        m2 = train(TrainingSet.from_rows(rows[::-1]))
        probes = [fv(0.2), fv(0.55, 0.3, 8.0), fv(0.91)]
        for p in probes:
            assert predict(m1, p) == predict(m2, p)

    def test_min_rows(self):
        rows = make_rows(3, lambda v0, d, m, rng: 50.0)
        with pytest.raises(ValueError, match=">= 4"):
            train(TrainingSet.from_rows(rows))

    def test_duplicate_clip_ids(self):
        rows = [TrainingRow("same", fv(0.1), 10.0), TrainingRow("same", fv(0.2), 20.0)]
        with pytest.raises(ValueError, match="duplicate"):
            TrainingSet.from_rows(rows)


class TestGridSearch:
    def test_single_point(self):
        rows = make_rows(12, lambda v0, d, m, rng: 60 * v0 + 20, seed=5)
        folds = [[r.clip_id for r in rows[:6]], [r.clip_id for r in rows[6:]]]
        grid = {"c": (4.0,), "gamma": (0.5,), "epsilon": (1.0,)}
        hp = grid_search(TrainingSet.from_rows(rows), folds, grid)
        assert (hp.c, hp.gamma, hp.epsilon) == (4.0, 0.5, 1.0)

    def test_prefers_lower_fold_rmse(self):
        # gamma far too large memorizes training points and generalizes badly
        rows = make_rows(16, lambda v0, d, m, rng: 70 * v0 + 10, seed=6)
        folds = [[r.clip_id for r in rows[:8]], [r.clip_id for r in rows[8:]]]
        grid = {"c": (16.0,), "gamma": (0.5, 5000.0), "epsilon": (0.5,)}
        hp = grid_search(TrainingSet.from_rows(rows), folds, grid)
        assert hp.gamma == 0.5

    def test_tie_breaks_toward_smaller(self):
        # constant labels: every grid point achieves identical RMSE
        rows = [TrainingRow(f"r{i}", fv(0.1 + 0.05 * i), 50.0) for i in range(8)]
        folds = [[f"r{i}" for i in range(4)], [f"r{i}" for i in range(4, 8)]]
        grid = {"c": (1.0, 10.0), "gamma": (1.0, 2.0), "epsilon": (1.0, 2.5)}
        hp = grid_search(TrainingSet.from_rows(rows), folds, grid)
        assert (hp.c, hp.gamma, hp.epsilon) == (1.0, 1.0, 1.0)

    def test_overlapping_folds_rejected(self):
        rows = make_rows(8, lambda v0, d, m, rng: 50.0)
        folds = [["clip000", "clip001"], ["clip001", "clip002"]]
        with pytest.raises(ValueError, match="overlap"):
            grid_search(TrainingSet.from_rows(rows), folds)

    def test_empty_fold_rejected(self):
        rows = make_rows(8, lambda v0, d, m, rng: 50.0)
        folds = [["clip000"], ["nonexistent"]]
        with pytest.raises(ValueError, match="no training rows"):
            grid_search(TrainingSet.from_rows(rows), folds)


class TestModelIo:
    def test_round_trip_predictions_bit_identical(self):
        rows = make_rows(20, lambda v0, d, m, rng: 50 * v0 + 25 * d + rng.uniform(-2, 2))
        model = train(TrainingSet.from_rows(rows))
        payload = save_model(model)
        again = load_model(payload)
        rng = np.random.default_rng(77)
        for _ in range(100):
            probe = np.concatenate([rng.uniform(0, 1, 5), rng.uniform(0, 20, 1)])
            assert predict(model, probe) == predict(again, probe)

    def test_truncated_payload(self):
        rows = make_rows(6, lambda v0, d, m, rng: 50.0 * v0 + 10)
        payload = save_model(train(TrainingSet.from_rows(rows)))
        with pytest.raises(ModelFormatError, match="corrupt"):
            load_model(payload[: len(payload) // 2])

    def test_schema_version_checked(self):
        with pytest.raises(ModelFormatError, match="schema"):
            load_model(b'{"schema_version": "other-1"}')

    def test_zero_support_vector_model_round_trips(self):
        rows = [TrainingRow(f"c{i}", fv(0.2 * i + 0.1), 70.0) for i in range(5)]
        model = train(TrainingSet.from_rows(rows), SvrHyperparams(epsilon=2.0))
        assert len(model.support_vectors) == 0
        again = load_model(save_model(model))
        assert predict(again, fv(0.4)) == pytest.approx(70.0, abs=1e-9)
