"""Layout-quality regression: predict the mean depth ratio from 12 features.

The feature vector is six label-free statistics of the circuit's interaction
graph followed by the six placement tunables. Two model families are provided:
a k-nearest-neighbors baseline and a single-hidden-layer perceptron trained by
mini-batch gradient descent with momentum. A trained perceptron bundle can
stand in for the real layout pipeline as a constant-time search objective.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from itertools import product

import networkx as nx
import numpy as np

from .circuit import Circuit, interaction_graph
from .placement import PARAM_NAMES, QxxParams

GRAPH_FEATURE_NAMES = ("max_page_rank", "nr_conn_comp", "edges", "nodes", "efficiency", "smetric")
FEATURE_NAMES = GRAPH_FEATURE_NAMES + PARAM_NAMES  # 12 inputs, in this fixed order


def features(circuit: Circuit) -> tuple:
    """Six statistics of the interaction graph, invariant under qubit relabeling.

    PageRank uses damping 0.85 iterated to 1e-9; efficiency is the mean over
    ordered node pairs of 1/distance (0 for unreachable pairs); the s-metric is
    the sum over edges of the endpoint degree products.
    """
    g = interaction_graph(circuit)
    n = g.number_of_nodes()
    if n == 0:
        return (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    max_pr = max(nx.pagerank(g, alpha=0.85, tol=1e-9, max_iter=1000).values())
    eff = nx.global_efficiency(g) if n > 1 else 0.0
    smetric = sum(g.degree(u) * g.degree(v) for u, v in g.edges())
    return (
        float(max_pr),
        float(nx.number_connected_components(g)),
        float(g.number_of_edges()),
        float(n),
        float(eff),
        float(smetric),
    )


@dataclass(frozen=True)
class Scaler:
    """Per-feature min/max learned on a training split, applied everywhere else."""

    mins: tuple
    maxs: tuple

    @classmethod
    def fit(cls, x) -> "Scaler":
        x = np.asarray(x, dtype=float)
        return cls(tuple(x.min(axis=0)), tuple(x.max(axis=0)))

    def transform(self, x):
        x = np.asarray(x, dtype=float)
        mins = np.array(self.mins)
        span = np.array(self.maxs) - mins
        span[span == 0.0] = 1.0  # constant feature -> 0 after shift
        return (x - mins) / span


# --- k nearest neighbors ---------------------------------------------------


@dataclass(frozen=True)
class KnnModel:
    x: np.ndarray  # scaled training inputs
    y: np.ndarray
    k: int
    minkowski_p: int


def train_knn(x, y, k: int, minkowski_p: int = 2) -> KnnModel:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) == 0:
        raise ValueError("empty training set")
    if not (1 <= k <= len(x)):
        raise ValueError(f"k={k} out of range for {len(x)} rows")
    if minkowski_p not in (1, 2):
        raise ValueError(f"minkowski_p must be 1 or 2, got {minkowski_p}")
    return KnnModel(x, y, k, minkowski_p)


def predict_knn(model: KnnModel, q) -> float:
    """Mean target of the k nearest training rows; distance ties favor lower row index."""
    diff = np.abs(model.x - np.asarray(q, dtype=float))
    dists = diff.sum(axis=1) if model.minkowski_p == 1 else np.sqrt((diff ** 2).sum(axis=1))
    nearest = np.argsort(dists, kind="stable")[: model.k]
    return float(model.y[nearest].mean())


# --- multilayer perceptron --------------------------------------------------


@dataclass
class MlpModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    activation: str  # "relu" or "tanh"


def _activate(z, activation):
    return np.maximum(z, 0.0) if activation == "relu" else np.tanh(z)


def _activate_grad(z, activation):
    return (z > 0.0).astype(float) if activation == "relu" else 1.0 - np.tanh(z) ** 2


def _forward(model: MlpModel, x):
    z1 = x @ model.w1 + model.b1
    hidden = _activate(z1, model.activation)
    out = hidden @ model.w2 + model.b2
    return z1, hidden, out[:, 0]


def mlp_loss(model: MlpModel, x, y) -> float:
    """Mean squared error of the model on (x, y)."""
    _, _, out = _forward(model, np.asarray(x, dtype=float))
    with np.errstate(over="ignore", invalid="ignore"):  # divergence handled by the caller
        return float(np.mean((out - np.asarray(y, dtype=float)) ** 2))


def mlp_gradients(model: MlpModel, x, y) -> dict:
    """Analytic gradients of the MSE with respect to every weight array."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z1, hidden, out = _forward(model, x)
    d_out = (2.0 / len(x)) * (out - y)[:, None]
    d_w2 = hidden.T @ d_out
    d_b2 = d_out.sum(axis=0)
    d_hidden = (d_out @ model.w2.T) * _activate_grad(z1, model.activation)
    d_w1 = x.T @ d_hidden
    d_b1 = d_hidden.sum(axis=0)
    return {"w1": d_w1, "b1": d_b1, "w2": d_w2, "b2": d_b2}


def train_mlp(x, y, hidden: int, activation: str = "relu", epochs: int = 200, lr: float = 0.01,
              seed: int = 0, batch_size: int = 32, momentum: float = 0.9) -> MlpModel:
    """Fit inputs -> hidden -> 1 with identity output on MSE; deterministic per seed.

    Expects scaled inputs. Aborts with a diagnostic if the loss goes non-finite
    (learning rate too aggressive for the data).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("training inputs must be a nonempty 2-D array")
    if activation not in ("relu", "tanh"):
        raise ValueError(f"unknown activation {activation!r}")
    rng = np.random.default_rng(seed)
    n_in = x.shape[1]
    scale = math.sqrt((2.0 if activation == "relu" else 1.0) / n_in)
    model = MlpModel(
        w1=rng.normal(0.0, scale, size=(n_in, hidden)),
        b1=np.zeros(hidden),
        w2=rng.normal(0.0, math.sqrt(1.0 / hidden), size=(hidden, 1)),
        b2=np.zeros(1),
        activation=activation,
    )
    velocity = {name: np.zeros_like(getattr(model, name)) for name in ("w1", "b1", "w2", "b2")}
    for epoch in range(epochs):
        order = rng.permutation(len(x))
        for start in range(0, len(x), batch_size):
            batch = order[start:start + batch_size]
            grads = mlp_gradients(model, x[batch], y[batch])
            for name, g in grads.items():
                velocity[name] = momentum * velocity[name] - lr * g
                setattr(model, name, getattr(model, name) + velocity[name])
        loss = mlp_loss(model, x, y)
        if not math.isfinite(loss):
            raise RuntimeError(f"training aborted: non-finite loss at epoch {epoch} (lr={lr})")
    return model


def predict_mlp(model: MlpModel, q):
    """Predict one example (1-D input) as a float, or a batch as an array."""
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        return float(_forward(model, q[None, :])[2][0])
    return _forward(model, q)[2]


# --- cross validation -------------------------------------------------------


@dataclass
class CvResult:
    fold_mse: list
    mean_mse: float
    sd_mse: float
    best_hypers: dict
    per_fold_hypers: list


def _expand_grid(hyper_grid: dict) -> list:
    if not hyper_grid:
        return []
    names = list(hyper_grid)
    return [dict(zip(names, combo)) for combo in product(*(hyper_grid[n] for n in names))]


def _fit(family: str, x_raw, y, hypers: dict, train_kwargs: dict, seed: int):
    scaler = Scaler.fit(x_raw)
    xs = scaler.transform(x_raw)
    if family == "knn":
        model = train_knn(xs, y, **hypers)
        return lambda q_raw: predict_knn(model, scaler.transform(q_raw))
    if family == "mlp":
        model = train_mlp(xs, y, seed=seed, **{**train_kwargs, **hypers})
        return lambda q_raw: predict_mlp(model, scaler.transform(q_raw))
    raise ValueError(f"unknown model family {family!r}")


def _fold_indices(n: int, folds: int, rng) -> list:
    return np.array_split(rng.permutation(n), folds)


def _grid_search(family, x, y, grid, folds, seed, train_kwargs):
    """Mean CV MSE per hyperparameter combination; first best wins ties."""
    rng = np.random.default_rng(seed)
    parts = _fold_indices(len(x), folds, rng)
    best, best_mse = None, math.inf
    for hypers in grid:
        fold_mse = []
        for i, val_idx in enumerate(parts):
            tr_idx = np.concatenate([p for j, p in enumerate(parts) if j != i])
            if family == "knn" and hypers.get("k", 1) > len(tr_idx):
                fold_mse = [math.inf]
                break
            predictor = _fit(family, x[tr_idx], y[tr_idx], hypers, train_kwargs, seed)
            pred = np.array([predictor(q) for q in x[val_idx]]) if family == "knn" else predictor(x[val_idx])
            fold_mse.append(float(np.mean((pred - y[val_idx]) ** 2)))
        mse = float(np.mean(fold_mse))
        if mse < best_mse:
            best, best_mse = hypers, mse
    return best, best_mse


def cross_validate(x, y, model_family: str, hyper_grid: dict, outer_folds: int = 10,
                   inner_folds: int = 5, seed: int = 0, **train_kwargs) -> CvResult:
    """Nested cross validation: an inner grid search per outer fold.

    Scalers are fit on each training portion only. Returns the outer-fold MSEs
    and the hyperparameters a final whole-dataset grid search would pick.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < outer_folds:
        raise ValueError(f"{len(x)} rows cannot fill {outer_folds} folds")
    grid = _expand_grid(hyper_grid)
    if not grid:
        raise ValueError("empty hyperparameter grid")
    rng = np.random.default_rng(seed)
    parts = _fold_indices(len(x), outer_folds, rng)
    fold_mse, per_fold_hypers = [], []
    for i, val_idx in enumerate(parts):
        tr_idx = np.concatenate([p for j, p in enumerate(parts) if j != i])
        hypers, _ = _grid_search(model_family, x[tr_idx], y[tr_idx], grid, inner_folds, seed, train_kwargs)
        predictor = _fit(model_family, x[tr_idx], y[tr_idx], hypers, train_kwargs, seed)
        pred = (np.array([predictor(q) for q in x[val_idx]]) if model_family == "knn"
                else predictor(x[val_idx]))
        fold_mse.append(float(np.mean((pred - y[val_idx]) ** 2)))
        per_fold_hypers.append(hypers)
    best_hypers, _ = _grid_search(model_family, x, y, grid, inner_folds, seed, train_kwargs)
    return CvResult(fold_mse, float(np.mean(fold_mse)), float(np.std(fold_mse)), best_hypers, per_fold_hypers)


# --- trained-model bundle ---------------------------------------------------


@dataclass
class SurrogateModel:
    """A trained perceptron plus the scaler and feature ordering it expects."""

    mlp: MlpModel
    scaler: Scaler
    feature_names: tuple
    metadata: dict

    def predict(self, feature_row) -> float:
        return float(self.predict_many(np.asarray(feature_row, dtype=float)[None, :])[0])

    def predict_many(self, x) -> np.ndarray:
        return predict_mlp(self.mlp, self.scaler.transform(x))


def fit_surrogate(x_raw, y, hidden: int = 100, activation: str = "relu", epochs: int = 200,
                  lr: float = 0.01, seed: int = 0, batch_size: int = 32, metadata: dict | None = None) -> SurrogateModel:
    """Scale the full dataset and train the final perceptron on it."""
    scaler = Scaler.fit(x_raw)
    mlp = train_mlp(scaler.transform(x_raw), y, hidden=hidden, activation=activation,
                    epochs=epochs, lr=lr, seed=seed, batch_size=batch_size)
    meta = {"hidden": hidden, "activation": activation, "epochs": epochs, "lr": lr,
            "seed": seed, "batch_size": batch_size, "rows": int(len(np.asarray(y)))}
    meta.update(metadata or {})
    return SurrogateModel(mlp, scaler, FEATURE_NAMES, meta)


def save_model(path, model: SurrogateModel) -> None:
    payload = {
        "kind": "mlp",
        "feature_names": list(model.feature_names),
        "activation": model.mlp.activation,
        "layers": [model.mlp.w1.shape[0], model.mlp.w1.shape[1], 1],
        "weights": {name: getattr(model.mlp, name).tolist() for name in ("w1", "b1", "w2", "b2")},
        "scaler": {"mins": list(model.scaler.mins), "maxs": list(model.scaler.maxs)},
        "training": model.metadata,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path) -> SurrogateModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("kind") != "mlp":
        raise ValueError(f"unsupported model kind {payload.get('kind')!r}")
    w = payload["weights"]
    mlp = MlpModel(
        w1=np.array(w["w1"]), b1=np.array(w["b1"]),
        w2=np.array(w["w2"]), b2=np.array(w["b2"]),
        activation=payload["activation"],
    )
    scaler = Scaler(tuple(payload["scaler"]["mins"]), tuple(payload["scaler"]["maxs"]))
    return SurrogateModel(mlp, scaler, tuple(payload["feature_names"]), payload.get("training", {}))


def make_objective(model: SurrogateModel, circuits):
    """Constant-time search objective: mean predicted ratio over the circuits."""
    feats = np.array([features(getattr(c, "circuit", c)) for c in circuits])
    x = np.empty((len(feats), len(FEATURE_NAMES)))
    x[:, : feats.shape[1]] = feats

    def objective(params: QxxParams) -> float:
        x[:, feats.shape[1]:] = [float(v) for v in params.as_tuple()]
        return float(np.mean(model.predict_many(x)))

    return objective


# --- dataset plumbing -------------------------------------------------------

PER_CIRCUIT_HEADER = ["trial_index", "circuit", "optimal_depth", *FEATURE_NAMES, "ratio"]


def build_dataset(records, cases) -> tuple:
    """Join trial records with per-circuit features: one row per circuit x configuration.

    Rows whose layout timed out carry no target and are dropped.
    """
    feats = [features(getattr(c, "circuit", c)) for c in cases]
    xs, ys = [], []
    for rec in records:
        p = [float(v) for v in rec.params.as_tuple()]
        for f, r in zip(feats, rec.per_circuit_ratio):
            if r is None:
                continue
            xs.append([*f, *p])
            ys.append(r)
    return np.array(xs, dtype=float), np.array(ys, dtype=float)


def write_per_circuit_csv(path, records, cases) -> None:
    """Training-data CSV: graph features, parameters, and the achieved ratio per circuit."""
    feats = [features(getattr(c, "circuit", c)) for c in cases]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PER_CIRCUIT_HEADER)
        for rec in records:
            p = rec.params.as_tuple()
            for case, f, r in zip(cases, feats, rec.per_circuit_ratio):
                name = getattr(case, "name", "?")
                opt = getattr(case, "optimal_depth", 0)
                cells = [rec.trial_index, name, opt,
                         *(f"{v:.12g}" for v in f), *p,
                         f"{r:.12g}" if r is not None else ""]
                writer.writerow(cells)


def read_per_circuit_csv(path) -> tuple:
    """Load a per-circuit CSV back into (X, y), skipping timeout rows."""
    xs, ys = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if not row["ratio"]:
                continue
            xs.append([float(row[name]) for name in FEATURE_NAMES])
            ys.append(float(row["ratio"]))
    return np.array(xs, dtype=float), np.array(ys, dtype=float)
