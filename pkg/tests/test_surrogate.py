import itertools
import math
import random

import numpy as np
import pytest

from qxx.circuit import Circuit, interaction_graph
from qxx.optimizer import TrialRecord
from qxx.placement import QxxParams
from qxx.surrogate import (
    FEATURE_NAMES,
    MlpModel,
    Scaler,
    build_dataset,
    cross_validate,
    features,
    fit_surrogate,
    load_model,
    make_objective,
    mlp_gradients,
    mlp_loss,
    predict_knn,
    predict_mlp,
    read_per_circuit_csv,
    save_model,
    train_knn,
    train_mlp,
    write_per_circuit_csv,
    _fold_indices,
    _grid_search,
)

from conftest import random_circuit


def efficiency_oracle(circuit):
    """Direct enumeration: mean over ordered pairs of 1/shortest-path, 0 if unreachable."""
    import networkx as nx
    g = interaction_graph(circuit)
    nodes = list(g.nodes())
    if len(nodes) < 2:
        return 0.0
    lengths = dict(nx.all_pairs_shortest_path_length(g))
    total = 0.0
    pairs = 0
    for u, v in itertools.permutations(nodes, 2):
        pairs += 1
        d = lengths.get(u, {}).get(v)
        if d:
            total += 1.0 / d
    return total / pairs


class TestFeatures:
    def test_triangle(self):
        c = Circuit.from_pairs(3, [(0, 1), (1, 2), (2, 0)])
        max_pr, ncc, edges, nodes, eff, smetric = features(c)
        assert smetric == 12.0  # three edges, each 2x2
        assert ncc == 1.0
        assert edges == 3.0 and nodes == 3.0
        assert eff == 1.0
        assert max_pr == pytest.approx(1 / 3, abs=1e-6)

    def test_two_isolated_edges(self):
        c = Circuit.from_pairs(4, [(0, 1), (2, 3)])
        _, ncc, edges, nodes, eff, smetric = features(c)
        assert ncc == 2.0
        assert eff == pytest.approx(4 / 12, abs=1e-12)
        assert eff == pytest.approx(efficiency_oracle(c), abs=1e-12)
        assert smetric == 2.0

    def test_empty_graph(self):
        c = Circuit(5)
        max_pr, ncc, edges, nodes, eff, smetric = features(c)
        assert max_pr == pytest.approx(1 / 5, abs=1e-9)
        assert eff == 0.0
        assert ncc == 5.0
        assert (edges, nodes, smetric) == (0.0, 5.0, 0.0)

    def test_efficiency_matches_oracle_on_random_circuits(self, rng):
        for _ in range(10):
            c = random_circuit(6, rng.randint(0, 10), rng)
            assert features(c)[4] == pytest.approx(efficiency_oracle(c), abs=1e-9)

    def test_permutation_invariance(self, rng):
        for _ in range(10):
            c = random_circuit(7, 12, rng)
            perm = list(range(7))
            rng.shuffle(perm)
            relabeled = Circuit.from_pairs(7, [(perm[g.control], perm[g.target]) for g in c.gates])
            assert features(relabeled) == pytest.approx(features(c), abs=1e-9)

    def test_feature_vector_is_twelve_wide(self):
        assert len(FEATURE_NAMES) == 12


class TestScaler:
    def test_training_data_lands_in_unit_box(self, rng):
        x = np.array([[rng.uniform(-5, 5) for _ in range(4)] for _ in range(30)])
        s = Scaler.fit(x)
        xs = s.transform(x)
        assert xs.min() >= 0.0 and xs.max() <= 1.0
        assert xs.min(axis=0) == pytest.approx(np.zeros(4))
        assert xs.max(axis=0) == pytest.approx(np.ones(4))

    def test_constant_column_maps_to_zero(self):
        x = np.array([[1.0, 7.0], [2.0, 7.0]])
        xs = Scaler.fit(x).transform(x)
        assert list(xs[:, 1]) == [0.0, 0.0]

    def test_same_ranges_applied_to_validation(self):
        train = np.array([[0.0], [10.0]])
        s = Scaler.fit(train)
        assert s.transform(np.array([[5.0]]))[0, 0] == 0.5
        assert s.transform(np.array([[20.0]]))[0, 0] == 2.0  # outside the learned range


class TestKnn:
    def test_k1_returns_training_target(self, rng):
        x = np.array([[rng.random() for _ in range(3)] for _ in range(20)])
        y = np.array([rng.random() for _ in range(20)])
        m = train_knn(x, y, k=1)
        for i in range(20):
            assert predict_knn(m, x[i]) == y[i]

    def test_k_equals_n_returns_global_mean(self, rng):
        x = np.array([[rng.random()] for _ in range(15)])
        y = np.array([rng.random() for _ in range(15)])
        m = train_knn(x, y, k=15)
        assert predict_knn(m, [0.3]) == pytest.approx(float(y.mean()))

    def test_matches_brute_force_scan(self, rng):
        x = np.array([[rng.random() for _ in range(5)] for _ in range(50)])
        y = np.array([rng.random() for _ in range(50)])
        for p in (1, 2):
            m = train_knn(x, y, k=4, minkowski_p=p)
            for _ in range(10):
                q = np.array([rng.random() for _ in range(5)])
                dists = [
                    (sum(abs(a - b) for a, b in zip(row, q)) if p == 1
                     else math.sqrt(sum((a - b) ** 2 for a, b in zip(row, q))), i)
                    for i, row in enumerate(x)
                ]
                dists.sort()
                expected = float(np.mean([y[i] for _, i in dists[:4]]))
                assert predict_knn(m, q) == pytest.approx(expected, abs=1e-12)

    def test_validation(self):
        x = np.zeros((3, 2))
        y = np.zeros(3)
        with pytest.raises(ValueError):
            train_knn(x, y, k=4)
        with pytest.raises(ValueError):
            train_knn(x, y, k=2, minkowski_p=3)
        with pytest.raises(ValueError):
            train_knn(np.zeros((0, 2)), np.zeros(0), k=1)


class TestMlp:
    def test_gradients_match_central_differences(self):
        rng = np.random.default_rng(0)
        model = MlpModel(
            w1=rng.normal(size=(12, 5)), b1=rng.normal(size=5),
            w2=rng.normal(size=(5, 1)), b2=rng.normal(size=1),
            activation="relu",
        )
        x = rng.uniform(-1, 1, size=(8, 12))
        y = rng.normal(size=8)
        for activation in ("relu", "tanh"):
            model.activation = activation
            grads = mlp_gradients(model, x, y)
            h = 1e-6
            for name in ("w1", "b1", "w2", "b2"):
                arr = getattr(model, name)
                it = np.nditer(arr, flags=["multi_index"])
                for _ in it:
                    i = it.multi_index
                    orig = arr[i]
                    arr[i] = orig + h
                    lp = mlp_loss(model, x, y)
                    arr[i] = orig - h
                    lm = mlp_loss(model, x, y)
                    arr[i] = orig
                    fd = (lp - lm) / (2 * h)
                    denom = max(1e-8, abs(fd), abs(grads[name][i]))
                    assert abs(fd - grads[name][i]) / denom < 1e-4

    def test_constant_target_fits_to_zero(self):
        rng = np.random.default_rng(0)
        x = Scaler.fit(rng.uniform(0, 1, size=(100, 12))).transform(rng.uniform(0, 1, size=(100, 12)))
        m = train_mlp(x, np.zeros(100), hidden=10, epochs=500, lr=0.05, seed=2)
        assert float(np.max(np.abs(predict_mlp(m, x)))) < 1e-2

    def test_linear_target_validation_mse(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(0, 1, size=(400, 12))
        w = rng.normal(size=12)
        y = x @ w + 0.7
        xs = Scaler.fit(x).transform(x)
        m = train_mlp(xs[:300], y[:300], hidden=20, epochs=200, lr=0.01, seed=1)
        mse = float(np.mean((predict_mlp(m, xs[300:]) - y[300:]) ** 2))
        assert mse < 0.01 * float(np.var(y))

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(0, 1, size=(50, 12))
        y = rng.normal(size=50)
        a = train_mlp(x, y, hidden=5, epochs=20, seed=9)
        b = train_mlp(x, y, hidden=5, epochs=20, seed=9)
        assert np.array_equal(a.w1, b.w1) and np.array_equal(a.w2, b.w2)

    def test_divergence_aborts_with_diagnostic(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(0, 1, size=(40, 12)) * 100
        y = rng.normal(size=40) * 1000
        with pytest.raises(RuntimeError, match="non-finite"):
            train_mlp(x, y, hidden=50, epochs=200, lr=500.0, seed=0)

    def test_validation(self):
        with pytest.raises(ValueError):
            train_mlp(np.zeros((0, 2)), np.zeros(0), hidden=3)
        with pytest.raises(ValueError):
            train_mlp(np.zeros((3, 2)), np.zeros(3), hidden=3, activation="sigmoid")


class TestCrossValidate:
    def test_constant_target_is_perfect(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(0, 1, size=(40, 3))
        y = np.full(40, 2.5)
        cv = cross_validate(x, y, "knn", {"k": [2, 3], "minkowski_p": [2]}, seed=1)
        assert cv.fold_mse == [0.0] * 10
        assert cv.mean_mse == 0.0

    def test_folds_partition_the_dataset(self):
        rng = np.random.default_rng(7)
        parts = _fold_indices(53, 10, rng)
        flat = np.concatenate(parts)
        assert len(flat) == 53
        assert sorted(flat.tolist()) == list(range(53))
        assert len(parts) == 10

    def test_planted_structure_recovery(self):
        grid = [{"k": k, "minkowski_p": 2} for k in range(2, 9)]
        # pure-noise target: averaging wide wins, best k is the grid maximum
        rng = np.random.default_rng(3)
        xn = rng.uniform(0, 1, size=(200, 2))
        yn = rng.normal(0, 1, size=200)
        noise_best, _ = _grid_search("knn", xn, yn, grid, 5, 0, {})
        assert noise_best["k"] == 8
        # steep noiseless gradient: closest neighbor wins, best k is the grid minimum
        xl = np.linspace(0, 1, 80)[:, None]
        linear_best, _ = _grid_search("knn", xl, 100 * xl[:, 0], grid, 5, 0, {})
        assert linear_best["k"] == 2

    def test_nested_cv_reports_per_fold_choices(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(0, 1, size=(60, 2))
        y = x[:, 0] * 10
        cv = cross_validate(x, y, "knn", {"k": [2, 4], "minkowski_p": [1, 2]},
                            outer_folds=5, inner_folds=3, seed=2)
        assert len(cv.fold_mse) == 5
        assert len(cv.per_fold_hypers) == 5
        assert set(cv.best_hypers) == {"k", "minkowski_p"}
        assert cv.mean_mse == pytest.approx(float(np.mean(cv.fold_mse)))

    def test_validation(self):
        x = np.zeros((5, 2))
        y = np.zeros(5)
        with pytest.raises(ValueError, match="folds"):
            cross_validate(x, y, "knn", {"k": [1]}, outer_folds=10)
        with pytest.raises(ValueError, match="empty"):
            cross_validate(np.zeros((20, 2)), np.zeros(20), "knn", {})


class TestBundle:
    def test_save_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        x = rng.uniform(0, 2, size=(80, 12))
        y = rng.normal(size=80)
        bundle = fit_surrogate(x, y, hidden=10, epochs=30, seed=3)
        path = tmp_path / "model.json"
        save_model(path, bundle)
        again = load_model(path)
        q = rng.uniform(0, 2, size=12)
        assert again.predict(q) == pytest.approx(bundle.predict(q), abs=1e-12)
        assert again.feature_names == FEATURE_NAMES
        assert again.metadata["hidden"] == 10

    def test_load_rejects_unknown_kind(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"kind": "rf"}', encoding="utf-8")
        with pytest.raises(ValueError, match="kind"):
            load_model(p)

    def test_make_objective_averages_over_circuits(self, rng):
        circuits = [random_circuit(5, 8, rng) for _ in range(3)]
        x = np.random.default_rng(1).uniform(0, 1, size=(50, 12))
        y = np.random.default_rng(2).normal(size=50)
        bundle = fit_surrogate(x, y, hidden=5, epochs=10, seed=0)
        objective = make_objective(bundle, circuits)
        params = QxxParams(max_depth=3, max_children=2, gauss_b=1.0, gauss_c=0.5,
                           movement_factor=2, edge_cost=0.6)
        p = [float(v) for v in params.as_tuple()]
        expected = float(np.mean([bundle.predict([*features(c), *p]) for c in circuits]))
        assert objective(params) == pytest.approx(expected, abs=1e-12)


class TestDatasetPlumbing:
    def _records_and_cases(self, rng):
        from qxx.benchgen import BenchCase
        cases = [BenchCase(f"c{i}", random_circuit(4, 6, rng), (0, 1, 2, 3), 3) for i in range(3)]
        p1 = QxxParams(max_depth=1, max_children=1, gauss_b=0.0, gauss_c=0.0, movement_factor=2, edge_cost=1.0)
        p2 = QxxParams(max_depth=5, max_children=2, gauss_b=2.0, gauss_c=0.5, movement_factor=4, edge_cost=0.4)
        records = [
            TrialRecord(0, p1, [1.0, 1.5, 2.0], 1.5, 0.0, 0),
            TrialRecord(1, p2, [1.2, None, 2.2], 1.7, 0.0, 1),
        ]
        return records, cases

    def test_build_dataset_drops_timeouts(self, rng):
        records, cases = self._records_and_cases(rng)
        x, y = build_dataset(records, cases)
        assert x.shape == (5, 12)
        assert list(y) == [1.0, 1.5, 2.0, 1.2, 2.2]

    def test_csv_round_trip(self, rng, tmp_path):
        records, cases = self._records_and_cases(rng)
        path = tmp_path / "per_circuit.csv"
        write_per_circuit_csv(path, records, cases)
        x, y = read_per_circuit_csv(path)
        direct_x, direct_y = build_dataset(records, cases)
        assert x == pytest.approx(direct_x, abs=1e-9)
        assert y == pytest.approx(direct_y)
