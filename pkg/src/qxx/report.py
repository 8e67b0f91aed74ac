"""Post-hoc analysis of sweep results: ratio curves and best-configuration tallies.

Works on the per-circuit CSV rows produced by the sweep. The count metric asks,
for one benchmark depth and one tree-depth setting, how often a parameter value
shows up among the 100 best-scoring configurations; the rank metric sums that
count across the three swept tree-depth settings. Both depend only on the
ordering of configuration averages.
"""

from __future__ import annotations

import csv
import warnings
from collections import defaultdict

from .placement import PARAM_NAMES

SAMPLE_SIZE = 100


def load_rows(path) -> list:
    """Parse a per-circuit results CSV into typed row dicts (ratio None on timeout)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for raw in csv.DictReader(fh):
            row = {
                "trial_index": int(raw["trial_index"]),
                "circuit": raw["circuit"],
                "optimal_depth": int(raw["optimal_depth"]),
                "ratio": float(raw["ratio"]) if raw["ratio"] else None,
            }
            for name in PARAM_NAMES:
                v = float(raw[name])
                row[name] = int(v) if v == int(v) and name in ("max_depth", "max_children", "movement_factor") else v
            rows.append(row)
    return rows


def _config_averages(rows, tfl_depth: int, max_depth: int) -> list:
    """Per-configuration mean ratio over the circuits of one benchmark depth.

    Configurations whose every circuit timed out are dropped. Returns
    (average, config) pairs sorted ascending, ties by configuration.
    """
    groups = defaultdict(list)
    for row in rows:
        if row["optimal_depth"] != tfl_depth or row["max_depth"] != max_depth:
            continue
        if row["ratio"] is None:
            continue
        key = tuple(row[name] for name in PARAM_NAMES)
        groups[key].append(row["ratio"])
    if not groups:
        raise ValueError(f"no results for benchmark depth {tfl_depth} with max_depth={max_depth}")
    avgs = [(sum(v) / len(v), key) for key, v in groups.items()]
    avgs.sort()
    return avgs


def best_sample(rows, tfl_depth: int, max_depth: int, sample: int = SAMPLE_SIZE) -> list:
    """The configurations with the lowest averages; boundary ties are all kept."""
    avgs = _config_averages(rows, tfl_depth, max_depth)
    if len(avgs) < sample:
        warnings.warn(f"only {len(avgs)} configurations in slice, sampling them all")
        return [cfg for _, cfg in avgs]
    cutoff = avgs[sample - 1][0]
    return [cfg for avg, cfg in avgs if avg <= cutoff]


def count(rows, param: str, value, tfl_depth: int, max_depth: int, sample: int = SAMPLE_SIZE) -> int:
    """How many of the best configurations pin ``param`` to ``value``."""
    idx = PARAM_NAMES.index(param)
    return sum(1 for cfg in best_sample(rows, tfl_depth, max_depth, sample) if cfg[idx] == value)


def rank(rows, param: str, value, tfl_depth: int, max_depths=(1, 5, 9), sample: int = SAMPLE_SIZE) -> int:
    """Sum of count over the swept tree-depth settings; higher is better."""
    return sum(count(rows, param, value, tfl_depth, md, sample) for md in max_depths)


def ratio_curves(rows, group_by: str = "config") -> list:
    """Mean-ratio-vs-benchmark-depth table.

    group_by "config" emits one curve per parameter configuration, "all" a
    single pooled curve. Output rows: {"optimal_depth", "label", "mean_ratio"}.
    """
    groups = defaultdict(list)
    for row in rows:
        if row["ratio"] is None:
            continue
        if group_by == "all":
            label = "all"
        elif group_by == "config":
            label = ",".join(str(row[name]) for name in PARAM_NAMES)
        else:
            label = str(row[group_by])
        groups[(row["optimal_depth"], label)].append(row["ratio"])
    table = [
        {"optimal_depth": depth, "label": label, "mean_ratio": sum(v) / len(v)}
        for (depth, label), v in groups.items()
    ]
    table.sort(key=lambda r: (r["label"], r["optimal_depth"]))
    return table


def write_table_csv(path, table, columns=None) -> None:
    """Emit a list of row dicts as CSV, plot-ready."""
    if not table:
        raise ValueError("empty table")
    columns = columns or list(table[0])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in table:
            writer.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in row.items()})
