import json
import math
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holoeeg.errors import DatasetError, ValidationError
from holoeeg.learn.cv import class_weights, stratified_kfold
from holoeeg.learn.forest import ForestModel, Tree, _best_split, rf_fit, rf_predict
from holoeeg.learn.fusion import PosteriorMatrix, fuse_matrices, late_fusion, read_posteriors, write_posteriors
from holoeeg.learn.harness import (
    DEFAULT_RF_GRID,
    Evaluator,
    GridPoint,
    CVResult,
    cross_validate,
    grid_points,
    grid_search,
    select_best,
    standardize,
)
from holoeeg.learn.knn import knn_fit_predict, neighbours
from holoeeg.learn.metrics import majority_baseline, metrics, predict_labels


def knn_oracle(train, y, test, k, w):
    out, nbrs = [], []
    for q in test:
        order = sorted(range(len(train)), key=lambda i: (math.dist(q, train[i]), i))[:k]
        votes = [0.0, 0.0]
        for i in order:
            votes[y[i]] += w[y[i]]
        out.append([votes[0] / sum(votes), votes[1] / sum(votes)])
        nbrs.append(order)
    return np.array(out), np.array(nbrs)


def blobs(n_per, d, sep, seed):
    r = np.random.default_rng(seed)
    X = np.r_[r.normal(0, 1, (n_per[0], d)), r.normal(sep, 1, (n_per[1], d))]
    y = np.r_[np.zeros(n_per[0], int), np.ones(n_per[1], int)]
    return X, y


class TestFolds:
    def test_exact_division(self):
        y = np.r_[np.ones(10, int), np.zeros(5, int)]
        for f in stratified_kfold(y, 5, 0).folds:
            assert (np.sum(y[f] == 1), np.sum(y[f] == 0)) == (2, 1)

    def test_deap_counts(self):
        y = np.r_[np.ones(808, int), np.zeros(472, int)]
        for f in stratified_kfold(y, 5, 3).folds:
            assert np.sum(y[f] == 1) in (161, 162) and np.sum(y[f] == 0) in (94, 95)

    def test_deterministic(self):
        y = np.random.default_rng(0).integers(0, 2, 60)
        a, b = stratified_kfold(y, 5, 9), stratified_kfold(y, 5, 9)
        assert all(np.array_equal(p, q) for p, q in zip(a.folds, b.folds))

    def test_small_class(self):
        with pytest.raises(ValidationError):
            stratified_kfold(np.r_[np.ones(10, int), np.zeros(4, int)], 5)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(5, 60), st.integers(5, 60), st.integers(2, 5), st.integers(0, 1000))
    def test_partition_and_balance(self, n1, n0, k, seed):
        y = np.r_[np.ones(n1, int), np.zeros(n0, int)]
        folds = stratified_kfold(y, k, seed).folds
        allidx = np.sort(np.concatenate(folds))
        assert np.array_equal(allidx, np.arange(y.size))
        for c, n in ((1, n1), (0, n0)):
            counts = [np.sum(y[f] == c) for f in folds]
            assert max(abs(cnt - n / k) for cnt in counts) <= 1

    def test_class_weights(self):
        w = class_weights(np.r_[np.ones(808, int), np.zeros(472, int)])
        assert w[0] == pytest.approx(1280 / (2 * 472)) and w[1] == pytest.approx(1280 / (2 * 808))


class TestKNN:
    def test_unanimous(self):
        X = np.array([[0.0], [0.1], [0.2], [5.0]])
        y = np.array([1, 1, 1, 0])
        assert knn_fit_predict(X, y, X[:1], 3)[0, 1] == 1.0

    def test_weighted_vote(self):
        X = np.array([[0.0], [1.0], [2.0], [10.0]])
        y = np.array([1, 1, 0, 0])
        p = knn_fit_predict(X, y, np.array([[0.5]]), 3, weights=[2.0, 1.0])
        assert p[0, 0] == 0.5

    def test_distance_tie_lower_index(self):
        X = np.array([[1.0], [-1.0], [1.0]])
        y = np.array([0, 1, 1])
        assert knn_fit_predict(X, y, np.array([[0.0]]), 1)[0].tolist() == [1.0, 0.0]

    def test_k_too_large(self):
        with pytest.raises(ValidationError):
            knn_fit_predict(np.zeros((3, 2)), [0, 1, 0], np.zeros((1, 2)), 4)

    def test_brute_force_200(self, rng):
        X = rng.standard_normal((200, 5))
        y = rng.integers(0, 2, 200)
        tr, te = X[:150], X[150:]
        p, nb = knn_oracle(tr, y[:150], te, 3, [1, 1])
        np.testing.assert_array_equal(neighbours(tr, te, 3), nb)
        np.testing.assert_array_equal(knn_fit_predict(tr, y[:150], te, 3), p)

    def test_brute_force_100_datasets(self):
        r = np.random.default_rng(42)
        for _ in range(100):
            n, d = int(r.integers(10, 301)), int(r.integers(1, 21))
            X = r.standard_normal((n, d))
            y = r.integers(0, 2, n)
            split = max(5, n * 3 // 4)
            k = int(r.choice([3, 5, 8]))
            if k > split:
                continue
            w = class_weights(y[:split]) if r.random() < 0.5 else np.ones(2)
            if not np.all(w > 0):
                w = np.ones(2)
            got = knn_fit_predict(X[:split], y[:split], X[split:], k, w)
            p, nb = knn_oracle(X[:split], y[:split], X[split:], k, w)
            np.testing.assert_array_equal(neighbours(X[:split], X[split:], k), nb)
            # repeated addition vs count * weight differ in the last ulp
            np.testing.assert_allclose(got, p, rtol=0, atol=1e-12)
            assert np.all(np.abs(got.sum(axis=1) - 1) <= 1e-9)


def make_tree(values):
    values = np.asarray(values, float)
    return Tree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), values[None, :], 1)


class TestForest:
    def test_separable_training_accuracy(self):
        X, y = blobs((40, 40), 6, 6.0, 0)
        p = rf_predict(rf_fit(X, y, 50, 12, seed=1), X)
        assert np.mean(predict_labels(p) == y) == 1.0

    def test_xor_depth_one(self):
        X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 5, float)
        y = np.array([0, 1, 1, 0] * 5)
        acc = np.mean(predict_labels(rf_predict(rf_fit(X, y, 1, 1, seed=0), X)) == y)
        # every single axis-aligned split of XOR, scored by its best labelling
        best = 0.0
        for f in (0, 1):
            left = X[:, f] <= 0.5
            for a in (0, 1):
                for b in (0, 1):
                    best = max(best, np.mean(np.where(left, a, b) == y))
        assert acc <= best <= 0.75

    def test_deterministic(self):
        X, y = blobs((30, 30), 8, 1.0, 2)
        Xt = np.random.default_rng(5).standard_normal((20, 8))
        a = rf_predict(rf_fit(X, y, 20, 6, seed=7), Xt)
        b = rf_predict(rf_fit(X, y, 20, 6, seed=7), Xt)
        c = rf_predict(rf_fit(X, y, 20, 6, seed=7, n_jobs=4), Xt)
        assert a.tobytes() == b.tobytes() == c.tobytes()

    def test_unanimous_trees(self):
        m = ForestModel(tuple(make_tree([0, 1]) for _ in range(3)), 2, 3, 1, 0, np.ones(2))
        assert rf_predict(m, np.zeros((4, 2)))[:, 1].tolist() == [1.0] * 4

    def test_average_of_leaves(self):
        m = ForestModel((make_tree([0.8, 0.2]), make_tree([0.4, 0.6])), 1, 2, 1, 0, np.ones(2))
        np.testing.assert_allclose(rf_predict(m, np.zeros((1, 1)))[0], [0.6, 0.4], atol=1e-15)

    def test_rows_sum_to_one(self):
        r = np.random.default_rng(0)
        for _ in range(100):
            n, d = int(r.integers(6, 40)), int(r.integers(1, 6))
            X = r.standard_normal((n, d))
            y = r.integers(0, 2, n)
            p = rf_predict(rf_fit(X, y, 3, int(r.integers(1, 6)), class_weights(y), int(r.integers(1e6))), r.standard_normal((7, d)))
            assert np.all(np.abs(p.sum(axis=1) - 1) <= 1e-9) and p.min() >= 0 and p.max() <= 1

    def test_errors(self):
        with pytest.raises(ValidationError):
            rf_fit(np.zeros((0, 3)), [], 5, 3)
        m = rf_fit(np.random.default_rng(0).standard_normal((10, 3)), [0, 1] * 5, 3, 2)
        with pytest.raises(ValidationError, match="expected 3 features"):
            rf_predict(m, np.zeros((2, 4)))

    def test_split_matches_enumeration(self, rng):
        X = rng.standard_normal((25, 4))
        X[:, 2] = np.round(X[:, 2])  # repeated values
        y = rng.integers(0, 2, 25)
        w = rng.uniform(0.5, 2.0, 25)
        wy = np.zeros((25, 2))
        wy[np.arange(25), y] = w
        feats = np.array([2, 0, 3, 1])
        f, thr = _best_split(X, wy, feats)

        def impurity(mask):
            m = wy[mask].sum(axis=0)
            return m.sum() - (m**2).sum() / m.sum()

        best = (np.inf, None)
        for j in feats:
            vals = np.unique(X[:, j])
            for lo, hi in zip(vals[:-1], vals[1:]):
                t = 0.5 * (lo + hi)
                left = X[:, j] <= t
                score = impurity(left) + impurity(~left)
                if score < best[0] - 1e-12:
                    best = (score, (j, t))
        assert (f, thr) == best[1]

    @staticmethod
    def _separable(n0, n1, seed, gap=0.2, d=4):
        # classes split by a gap of 2*gap along the first axis, noise elsewhere
        r = np.random.default_rng(seed)
        X = r.standard_normal((n0 + n1, d))
        X[:n0, 0] = -np.abs(X[:n0, 0]) - gap
        X[n0:, 0] = np.abs(X[n0:, 0]) + gap
        return X, np.r_[np.zeros(n0, int), np.ones(n1, int)]

    def _minority_recall(self, fit_predict, **kw):
        rec_w, rec_u = [], []
        for s in range(10):
            X, y = self._separable(120, 15, s, **kw)
            Xt, yt = self._separable(400, 400, 100 + s, **kw)
            for weighted, acc in ((True, rec_w), (False, rec_u)):
                acc.append(np.mean(fit_predict(X, y, Xt, weighted, s)[yt == 1] == 1))
        return np.mean(rec_w), np.mean(rec_u)

    def test_class_weights_help_minority(self):
        def ours(X, y, Xt, weighted, s):
            return predict_labels(rf_predict(rf_fit(X, y, 30, 6, class_weights(y) if weighted else None, seed=s), Xt))

        rec_w, rec_u = self._minority_recall(ours)
        assert rec_w >= rec_u

    def test_class_weight_effect_matches_sklearn(self):
        ensemble = pytest.importorskip("sklearn.ensemble")

        def ref(X, y, Xt, weighted, s):
            m = ensemble.RandomForestClassifier(30, max_depth=6, class_weight="balanced" if weighted else None, random_state=s)
            return m.fit(X, y).predict(Xt)

        def ours(X, y, Xt, weighted, s):
            return predict_labels(rf_predict(rf_fit(X, y, 30, 6, class_weights(y) if weighted else None, seed=s), Xt))

        # harder variant: small gap, many noise features, where the effect is large
        for kw in ({}, {"gap": 0.1, "d": 16}):
            ow, ou = self._minority_recall(ours, **kw)
            rw, ru = self._minority_recall(ref, **kw)
            assert np.sign(round(ow - ou, 3)) == np.sign(round(rw - ru, 3))


class TestMetrics:
    def test_perfect(self):
        assert metrics([0, 1, 1, 0], [0, 1, 1, 0]) == (1.0, 1.0)

    def test_confusion_example(self):
        # high: TP=3 FN=1 FP=2 ; low: TN=4
        y_true = np.array([1, 1, 1, 1, 0, 0, 0, 0, 0, 0])
        y_pred = np.array([1, 1, 1, 0, 1, 1, 0, 0, 0, 0])
        f1, ca = metrics(y_pred, y_true)
        expect = 0.4 * (6 / 9) + 0.6 * (8 / 11)
        assert f1 == pytest.approx(expect, abs=1e-15) and round(f1, 4) == 0.7030
        assert ca == 0.7

    def test_majority(self):
        y = np.r_[np.ones(808, int), np.zeros(472, int)]
        assert metrics(np.ones(1280, int), y)[1] == pytest.approx(0.63125)
        assert majority_baseline(y) == 808 / 1280

    def test_argmax_tie_goes_high(self):
        assert predict_labels(np.array([[0.5, 0.5], [0.6, 0.4]])).tolist() == [1, 0]

    def test_empty(self):
        with pytest.raises(ValidationError):
            metrics([], [])


class TestFusion:
    def test_identical(self, rng):
        p = rng.dirichlet([1, 1], 20)
        np.testing.assert_allclose(late_fusion([p, p, p]), p, atol=1e-15)

    def test_arithmetic(self):
        out = late_fusion([np.array([[0.6, 0.4]]), np.array([[0.2, 0.8]])])
        np.testing.assert_allclose(out, [[0.4, 0.6]], atol=1e-15)

    def test_weighted(self):
        out = late_fusion([np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])], [3, 1])
        np.testing.assert_allclose(out, [[0.75, 0.25]], atol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            late_fusion([np.ones((2, 2)) / 2, np.ones((3, 2)) / 2])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 30), st.integers(0, 10**6))
    def test_rows_sum_to_one(self, m, n, seed):
        r = np.random.default_rng(seed)
        out = late_fusion([r.dirichlet([0.5, 0.5], n) for _ in range(m)], r.uniform(0.1, 3, m))
        assert np.all(np.abs(out.sum(axis=1) - 1) <= 1e-9)

    def test_csv_round_trip(self, tmp_path, rng):
        pm = PosteriorMatrix(("s01_t01", "s01_t02"), rng.dirichlet([1, 1], 2))
        write_posteriors(pm, tmp_path / "p.csv", "h")
        back = read_posteriors(tmp_path / "p.csv")
        assert back.trial_ids == pm.trial_ids and back.values.tobytes() == pm.values.tobytes()

    def test_csv_malformed_line(self, tmp_path):
        (tmp_path / "p.csv").write_text("# config_hash: h\ntrial_id,p_low,p_high\na,0.5,0.5\nb,0.7\n")
        with pytest.raises(ValidationError, match=":4:"):
            read_posteriors(tmp_path / "p.csv")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError):
            read_posteriors(tmp_path / "none.csv")

    def test_id_mismatch_lists_offenders(self):
        a = PosteriorMatrix(("x", "y"), np.full((2, 2), 0.5))
        b = PosteriorMatrix(("x", "z"), np.full((2, 2), 0.5))
        with pytest.raises(ValidationError, match="'y'.*'z'|'z'.*'y'"):
            fuse_matrices([a, b])


class TestHarness:
    def test_default_grid_size(self):
        assert len(grid_points("random_forest")) == 6 * 7 == 42
        assert DEFAULT_RF_GRID["n_estimators"] == (50, 100, 150, 200, 250, 300)
        assert DEFAULT_RF_GRID["depth"] == (6, 8, 10, 12, 14, 16, 18)
        assert [p["k"] for p in grid_points("knn")] == [3, 5, 8]

    def test_single_point(self):
        X, y = blobs((20, 20), 3, 3.0, 0)
        g = grid_search(X, y, "knn", {"k": [5]}, k=5, seed=0)
        assert g.best.params == {"k": 5} and g.n_evaluations == 1
        ref = cross_validate(X, y, stratified_kfold(y, 5, 0), Evaluator("knn", {"k": 5}))
        assert g.best.result.mean_f1 == ref.mean_f1

    def test_tie_prefers_fewer_estimators_then_depth(self):
        X, y = blobs((20, 20), 3, 20.0, 0)  # trivially separable: every point scores 1.0
        g = grid_search(X, y, "random_forest", {"n_estimators": [20, 10], "depth": [4, 2]}, k=4)
        assert all(p.result.mean_f1 == 1.0 for p in g.points)
        assert g.best.params == {"n_estimators": 10, "depth": 2}

    def test_select_best_ordering(self):
        r = lambda f: CVResult((f,), (f,), (1,), np.zeros((1, 2)))
        pts = [GridPoint({"n_estimators": 100, "depth": 6}, r(0.7)), GridPoint({"n_estimators": 50, "depth": 10}, r(0.7)),
               GridPoint({"n_estimators": 50, "depth": 8}, r(0.7)), GridPoint({"n_estimators": 300, "depth": 6}, r(0.69))]
        assert select_best("random_forest", pts).params == {"n_estimators": 50, "depth": 8}

    def test_failures_are_reported(self):
        X, y = blobs((10, 10), 2, 2.0, 0)
        g = grid_search(X, y, "knn", {"k": [3, 100]}, k=5)
        bad = [p for p in g.points if p.params["k"] == 100][0]
        assert bad.result is None and "K=100" in bad.error
        assert g.best.params == {"k": 3}
        with pytest.raises(ValidationError, match="every grid point failed"):
            grid_search(X, y, "knn", {"k": [100]}, k=5)

    def test_standardize_train_only(self, rng):
        tr = rng.normal(5, 2, (50, 3))
        te = rng.normal(100, 1, (5, 3))
        a, b = standardize(tr, te)
        np.testing.assert_allclose(a.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(b, (te - tr.mean(0)) / tr.std(0))

    def test_parallel_grid_identical(self):
        X, y = blobs((15, 15), 4, 1.0, 3)
        grid = {"n_estimators": [5, 10], "depth": [2, 3]}
        a = grid_search(X, y, "random_forest", grid, k=3, seed=1)
        b = grid_search(X, y, "random_forest", grid, k=3, seed=1, n_jobs=2)
        assert json.dumps(a.report(), sort_keys=True) == json.dumps(b.report(), sort_keys=True)
        assert a.best.result.posteriors.tobytes() == b.best.result.posteriors.tobytes()

    def test_report_matches_schema(self):
        jsonschema = pytest.importorskip("jsonschema")
        schema = json.loads(resources.files("holoeeg").joinpath("schemas/cv_report.schema.json").read_text())
        X, y = blobs((12, 12), 3, 1.0, 0)
        rep = grid_search(X, y, "knn", {"k": [3, 5]}, k=3).report(config_hash="0" * 64, set_id="C", dimension="valence")
        jsonschema.validate(json.loads(json.dumps(rep)), schema)

    def test_out_of_fold_posteriors_complete(self):
        X, y = blobs((10, 15), 2, 1.0, 1)
        res = cross_validate(X, y, stratified_kfold(y, 5, 0), Evaluator("knn", {"k": 3}))
        assert np.all(np.isfinite(res.posteriors)) and np.allclose(res.posteriors.sum(1), 1)
