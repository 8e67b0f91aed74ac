"""Parameter search over the placement tunables.

Three strategies share one trial format: exhaustive grid enumeration, plain
random search, and weighted random search (WRS). WRS spends an initial budget
on uniform trials, ranks the parameters by how much of the objective variance
each one explains (a main-effect decomposition over a regression forest), and
then keeps resampling the incumbent best configuration one parameter at a
time, favoring the influential parameters.
"""

from __future__ import annotations

import csv
import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from decimal import Decimal
from itertools import product

import numpy as np
from sklearn.ensemble import RandomForestRegressor

from .device import Device
from .placement import PARAM_NAMES, QxxParams, PlacementTimeout, place
from .router import ratio, route


@dataclass(frozen=True)
class ParamSpace:
    """Finite grid of allowed values per tunable."""

    values: dict

    def __post_init__(self):
        if set(self.values) != set(PARAM_NAMES):
            raise ValueError(f"space must define exactly {PARAM_NAMES}")
        norm = {name: tuple(vals) for name, vals in self.values.items()}
        for name, vals in norm.items():
            if not vals:
                raise ValueError(f"empty dimension {name}")
        object.__setattr__(self, "values", norm)

    @property
    def size(self) -> int:
        out = 1
        for name in PARAM_NAMES:
            out *= len(self.values[name])
        return out

    def configs(self):
        """All configurations in lexicographic order of the parameter tuple."""
        dims = [self.values[name] for name in PARAM_NAMES]
        for combo in product(*dims):
            yield QxxParams(**dict(zip(PARAM_NAMES, combo)))

    def restrict(self, **fixed) -> "ParamSpace":
        """Copy of the space with some dimensions pinned to a value (or a subset)."""
        vals = dict(self.values)
        for name, v in fixed.items():
            if name not in vals:
                raise ValueError(f"unknown parameter {name}")
            vals[name] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
        return ParamSpace(vals)


def _grid(lo, hi, step):
    decimals = max(0, -Decimal(str(step)).as_tuple().exponent)
    n = int(round((hi - lo) / step))
    vals = [round(lo + k * step, decimals) for k in range(n + 1)]
    return tuple(int(v) if decimals == 0 else v for v in vals)


def full_space() -> ParamSpace:
    """The complete tunable ranges at their native increments."""
    return ParamSpace({
        "max_depth": _grid(1, 55, 1),
        "max_children": _grid(1, 55, 1),
        "gauss_b": _grid(0.0, 500.0, 0.1),
        "gauss_c": _grid(0.0, 1.0, 0.01),
        "movement_factor": _grid(1, 55, 1),
        "edge_cost": _grid(0.1, 1.0, 0.1),
    })


def reduced_space() -> ParamSpace:
    """Coarse grid used for exhaustive sweeps (1485 configurations per max_depth value)."""
    return ParamSpace({
        "max_depth": (1, 5, 9),
        "max_children": (1, 5, 9),
        "gauss_b": _grid(0.0, 20.0, 2.0),
        "gauss_c": _grid(0.0, 1.0, 0.25),
        "movement_factor": (2, 6, 10),
        "edge_cost": (0.2, 0.6, 1.0),
    })


SPACE_PRESETS = {
    "full": full_space,
    "reduced": reduced_space,
    # historical aliases
    "table1": full_space,
    "table3": reduced_space,
}


@dataclass
class TrialRecord:
    """One evaluated configuration; the row format shared by every search strategy."""

    trial_index: int
    params: QxxParams
    per_circuit_ratio: list  # float per circuit, None where the layout timed out
    mean_ratio: float        # nan when every circuit timed out
    wall_time: float         # seconds
    timeout_count: int

    @property
    def valid(self) -> bool:
        return not math.isnan(self.mean_ratio)


def evaluate(params: QxxParams, circuits, device: Device, per_circuit_deadline: float | None = None,
             router_seed: int = 0, swap_weight: int = 3, trial_index: int = 0) -> TrialRecord:
    """Lay out every circuit with the given parameters and record the depth ratios.

    Timed-out circuits are recorded as None and excluded from the mean.
    ``circuits`` may hold Circuit objects or benchmark cases with a .circuit.
    """
    t0 = time.perf_counter()
    ratios = []
    timeouts = 0
    for item in circuits:
        circuit = getattr(item, "circuit", item)
        try:
            placed = place(circuit, device, params, deadline=per_circuit_deadline)
        except PlacementTimeout:
            ratios.append(None)
            timeouts += 1
            continue
        routed = route(circuit, device, placed.mapping.assignment, router_seed)
        ratios.append(ratio(circuit, routed.circuit, swap_weight))
    finite = [r for r in ratios if r is not None]
    mean = sum(finite) / len(finite) if finite else math.nan
    return TrialRecord(trial_index, params, ratios, mean, time.perf_counter() - t0, timeouts)


def _run_trial(objective, params: QxxParams, index: int) -> TrialRecord:
    """Normalize an objective result (float or TrialRecord) into a TrialRecord."""
    t0 = time.perf_counter()
    result = objective(params)
    wall = time.perf_counter() - t0
    if isinstance(result, TrialRecord):
        return replace(result, trial_index=index)
    return TrialRecord(index, params, [], float(result), wall, 0)


def _run_wave(objective, configs, start_index, workers):
    indices = range(start_index, start_index + len(configs))
    if workers <= 1 or len(configs) == 1:
        return [_run_trial(objective, p, i) for p, i in zip(configs, indices)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda pi: _run_trial(objective, *pi), zip(configs, indices)))


def exhaustive(space: ParamSpace, objective, workers: int = 1) -> list:
    """Evaluate every configuration of the grid, in lexicographic order."""
    records = []
    batch = []
    for params in space.configs():
        batch.append(params)
        if len(batch) >= max(1, workers):
            records.extend(_run_wave(objective, batch, len(records), workers))
            batch = []
    if batch:
        records.extend(_run_wave(objective, batch, len(records), workers))
    return records


@dataclass(frozen=True)
class ImportanceWeights:
    """Per-parameter share of objective variance, and the derived resampling probabilities."""

    weights: dict
    probability_of_change: dict


def probabilities_from_weights(weights: dict) -> dict:
    """Normalize importance weights into resampling probabilities: w / max(w).

    The most important parameter always resamples (probability 1). Zero or
    degenerate weights are floored at 0.01 so no parameter is frozen forever.
    """
    top = max(weights.values())
    if top <= 0:
        return {name: 1.0 for name in weights}
    return {name: max(w / top, 0.01) for name, w in weights.items()}


def importance(history, seed: int = 0, n_trees: int = 64) -> ImportanceWeights:
    """Main-effect variance decomposition of the objective over past trials.

    Fits a regression forest to (params -> mean_ratio) and, per parameter,
    measures the variance of the forest's marginal prediction as that single
    parameter sweeps its observed values. Weights are percentages of the total
    prediction variance; a constant objective yields uniform weights.
    """
    rows = [r for r in history if r.valid]
    uniform = ImportanceWeights(
        {name: 100.0 / len(PARAM_NAMES) for name in PARAM_NAMES},
        {name: 1.0 for name in PARAM_NAMES},
    )
    if len(rows) < 2:
        return uniform
    x = np.array([[float(v) for v in r.params.as_tuple()] for r in rows])
    y = np.array([r.mean_ratio for r in rows])
    if float(np.var(y)) == 0.0:
        return uniform
    forest = RandomForestRegressor(n_estimators=n_trees, random_state=seed)
    forest.fit(x, y)
    total = float(np.var(forest.predict(x)))
    if total <= 0.0:
        return uniform
    weights = {}
    scratch = x.copy()
    for j, name in enumerate(PARAM_NAMES):
        levels = np.unique(x[:, j])
        if len(levels) < 2:
            weights[name] = 0.0
            continue
        marginal = []
        for v in levels:
            scratch[:, j] = v
            marginal.append(float(np.mean(forest.predict(scratch))))
        scratch[:, j] = x[:, j]
        weights[name] = 100.0 * float(np.var(marginal)) / total
    return ImportanceWeights(weights, probabilities_from_weights(weights))


@dataclass
class SearchResult:
    best: TrialRecord | None
    history: list
    weights: ImportanceWeights | None


def _draw(rng: random.Random, space: ParamSpace, incumbent: QxxParams | None, probs: dict | None) -> QxxParams:
    """One configuration: per parameter, resample uniformly with its probability
    of change, otherwise keep the incumbent value. No incumbent means pure
    uniform sampling (the probability draw is still consumed, so random search
    and WRS-with-all-probabilities-1 share identical streams)."""
    cfg = {}
    for name in PARAM_NAMES:
        u = rng.random()
        if incumbent is None or u < probs[name]:
            cfg[name] = rng.choice(space.values[name])
        else:
            cfg[name] = getattr(incumbent, name)
    return QxxParams(**cfg)


def wrs(space: ParamSpace, objective, n0: int, n_total: int, seed: int = 0, workers: int = 1,
        probabilities: dict | None = None, importance_trees: int = 64) -> SearchResult:
    """Weighted random search, minimizing the trial mean ratio.

    Phase 1 runs n0 uniform trials; parameter importance is then estimated from
    them (unless explicit probabilities are supplied). Phase 2 mutates the
    incumbent best configuration, resampling each parameter independently with
    its probability of change. The incumbent only moves on strict improvement.
    Deterministic for a fixed seed and worker count.
    """
    if not (0 < n0 < n_total):
        raise ValueError(f"need 0 < n0 < n_total, got n0={n0}, n_total={n_total}")
    rng = random.Random(seed)
    history = []
    best = None

    def merge(records):
        nonlocal best
        for rec in records:
            history.append(rec)
            if rec.valid and (best is None or rec.mean_ratio < best.mean_ratio):
                best = rec

    while len(history) < n0:
        wave = min(max(1, workers), n0 - len(history))
        configs = [_draw(rng, space, None, None) for _ in range(wave)]
        merge(_run_wave(objective, configs, len(history), workers))

    if probabilities is None:
        weights = importance(history, seed=seed, n_trees=importance_trees)
    else:
        weights = ImportanceWeights({}, dict(probabilities))
    probs = weights.probability_of_change

    while len(history) < n_total:
        wave = min(max(1, workers), n_total - len(history))
        incumbent = best.params if best is not None else None
        configs = [_draw(rng, space, incumbent, probs) for _ in range(wave)]
        merge(_run_wave(objective, configs, len(history), workers))
    return SearchResult(best, history, weights)


def random_search(space: ParamSpace, objective, n_total: int, seed: int = 0, workers: int = 1) -> SearchResult:
    """Uniform i.i.d. sampling of the grid; the baseline WRS is measured against."""
    if n_total < 1:
        raise ValueError(f"n_total must be >= 1, got {n_total}")
    rng = random.Random(seed)
    history = []
    best = None
    while len(history) < n_total:
        wave = min(max(1, workers), n_total - len(history))
        configs = [_draw(rng, space, None, None) for _ in range(wave)]
        for rec in _run_wave(objective, configs, len(history), workers):
            history.append(rec)
            if rec.valid and (best is None or rec.mean_ratio < best.mean_ratio):
                best = rec
    return SearchResult(best, history, None)


RESULTS_HEADER = ["trial_index", *PARAM_NAMES, "mean_ratio", "timeouts", "wall_ms"]


def write_results_csv(path, records, timing: bool = False) -> None:
    """One row per trial. wall_ms is written as 0 unless timing is requested,
    keeping repeated runs byte-identical."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_HEADER)
        for rec in records:
            wall_ms = int(round(rec.wall_time * 1000)) if timing else 0
            mean = f"{rec.mean_ratio:.12g}" if rec.valid else ""
            writer.writerow([rec.trial_index, *rec.params.as_tuple(), mean, rec.timeout_count, wall_ms])


def read_results_csv(path) -> list:
    """Inverse of write_results_csv (per-circuit detail is not retained)."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            params = QxxParams(
                max_depth=int(row["max_depth"]),
                max_children=int(row["max_children"]),
                gauss_b=float(row["gauss_b"]),
                gauss_c=float(row["gauss_c"]),
                movement_factor=int(row["movement_factor"]),
                edge_cost=float(row["edge_cost"]),
            )
            mean = float(row["mean_ratio"]) if row["mean_ratio"] else math.nan
            records.append(TrialRecord(int(row["trial_index"]), params, [], mean,
                                       int(row["wall_ms"]) / 1000.0, int(row["timeouts"])))
    return records
