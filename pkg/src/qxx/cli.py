"""Command-line front end for the layout pipeline.

Machine-readable output (JSON/CSV) goes to stdout or files; human summaries go
to stderr. Exit codes: 0 success, 1 usage error, 2 input-format error,
3 timeout-dominated run.
"""

from __future__ import annotations

import json
import statistics
import sys

import click

from .benchgen import load_suite, parse_depth_range, write_suite
from .circuit import CircuitFormatError, depth, emit_circuit, parse_circuit
from .device import DeviceFormatError, resolve_device
from .optimizer import (
    SPACE_PRESETS,
    evaluate,
    exhaustive,
    random_search,
    write_results_csv,
    wrs as run_wrs,
)
from .placement import PARAM_NAMES, PlacementTimeout, QxxParams, place
from .report import load_rows, ratio_curves, count as count_metric, rank as rank_metric, write_table_csv
from .router import ratio, route
from .surrogate import (
    cross_validate,
    features,
    fit_surrogate,
    load_model,
    make_objective,
    read_per_circuit_csv,
    save_model,
    write_per_circuit_csv,
)


class InputFormatError(Exception):
    """A file failed to parse; mapped to exit code 2."""


class TimeoutDominated(Exception):
    """Every layout in the run timed out; mapped to exit code 3."""


def parse_duration(text: str) -> float:
    """Parse "50ms", "5s", "2m", or bare seconds into float seconds."""
    t = text.strip().lower()
    try:
        if t.endswith("ms"):
            return float(t[:-2]) / 1000.0
        if t.endswith("s"):
            return float(t[:-1])
        if t.endswith("m"):
            return float(t[:-1]) * 60.0
        return float(t)
    except ValueError:
        raise click.UsageError(f"bad duration {text!r} (examples: 50ms, 5s, 2m)")


def _load_circuit(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_circuit(fh.read())
    except CircuitFormatError as e:
        raise InputFormatError(f"{path}: {e}")


def _load_device(spec):
    try:
        return resolve_device(spec)
    except (DeviceFormatError, ValueError) as e:
        raise InputFormatError(f"device {spec!r}: {e}")
    except OSError as e:
        raise InputFormatError(f"device {spec!r}: {e}")


_PARAM_OPTIONS = [
    click.option("--params", "params_text", default=None, metavar="SEXTUPLE",
                 help="comma sextuple: max_depth,max_children,gauss_b,gauss_c,movement_factor,edge_cost"),
    click.option("--max-depth", type=int, default=None),
    click.option("--max-children", type=int, default=None),
    click.option("--gauss-b", type=float, default=None),
    click.option("--gauss-c", type=float, default=None),
    click.option("--movement-factor", type=int, default=None),
    click.option("--edge-cost", type=float, default=None),
]


def param_options(fn):
    for opt in reversed(_PARAM_OPTIONS):
        fn = opt(fn)
    return fn


def resolve_params(params_text, **named) -> QxxParams:
    given = {k: v for k, v in named.items() if v is not None}
    try:
        if params_text is not None:
            if given:
                raise click.UsageError("give either --params or the named parameter flags, not both")
            return QxxParams.from_sextuple(params_text)
        if len(given) == len(PARAM_NAMES):
            return QxxParams(**given)
    except ValueError as e:
        raise click.UsageError(str(e))
    raise click.UsageError("provide --params or all six named parameter flags")


@click.group()
def cli():
    """QXX circuit layout: placement, routing, benchmarks, parameter search, surrogate."""


@cli.command()
@click.option("--circuit", "circuit_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--device", "device_spec", required=True,
              help="builtin (aspen16, grid4x4, line16, line:N, grid:RxC) or a JSON file")
@param_options
@click.option("--seed", type=int, default=0, show_default=True, help="router randomization seed")
@click.option("--deadline", default=None, help="placement budget, e.g. 20s")
@click.option("--swap-weight", type=click.IntRange(1), default=3, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None, help="routed circuit JSON (default stdout)")
def layout(circuit_path, device_spec, params_text, seed, deadline, swap_weight, out_path, **named):
    """Lay out one circuit: placement followed by SWAP routing."""
    circuit = _load_circuit(circuit_path)
    device = _load_device(device_spec)
    params = resolve_params(params_text, **named)
    budget = parse_duration(deadline) if deadline else None
    try:
        placed = place(circuit, device, params, deadline=budget)
    except PlacementTimeout as e:
        raise TimeoutDominated(str(e))
    routed = route(circuit, device, placed.mapping.assignment, seed)
    r = ratio(circuit, routed.circuit, swap_weight)
    text = emit_circuit(routed.circuit)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text)
    click.echo(
        f"ratio={r:.6g} depth_in={depth(circuit, swap_weight)} depth_out={depth(routed.circuit, swap_weight)} "
        f"swaps={routed.swap_count} cost={placed.cost:.6g} mapping={placed.mapping.assignment}",
        err=True,
    )


@cli.group()
def bench():
    """Benchmark-suite commands."""


@bench.command("generate")
@click.option("--device", "device_spec", required=True)
@click.option("--depths", default="5..45:5", show_default=True, help='"LO..HI:STEP" or "5,10,20"')
@click.option("--per-depth", type=int, default=10, show_default=True)
@click.option("--density", type=float, default=0.7, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def bench_generate(device_spec, depths, per_depth, density, seed, out_dir):
    """Generate known-optimal benchmark circuits plus sidecar mappings."""
    device = _load_device(device_spec)
    try:
        depth_list = parse_depth_range(depths)
    except ValueError as e:
        raise click.UsageError(str(e))
    try:
        written = write_suite(device, depth_list, per_depth, out_dir, gate_density=density, seed=seed)
    except ValueError as e:
        raise InputFormatError(str(e))
    click.echo(f"wrote {len(written)} circuits to {out_dir}", err=True)


def _space_option(fn):
    return click.option("--space", "space_name", default="reduced", show_default=True,
                        type=click.Choice(sorted(SPACE_PRESETS)),
                        help="search-space preset (table1/table3 are aliases of full/reduced)")(fn)


def _check_not_all_timeouts(records):
    if records and all(not rec.valid for rec in records):
        raise TimeoutDominated("every trial timed out on every circuit; raise --deadline")


@cli.command()
@_space_option
@click.option("--suite", "suite_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--device", "device_spec", required=True)
@click.option("--deadline", default=None, help="per-circuit placement budget, e.g. 5s")
@click.option("--max-depth", "fix_max_depth", type=int, default=None, help="restrict the sweep to one max_depth value")
@click.option("--seed", type=int, default=0, show_default=True, help="router randomization seed")
@click.option("--swap-weight", type=click.IntRange(1), default=3, show_default=True)
@click.option("--workers", type=click.IntRange(1), default=1, show_default=True)
@click.option("--timing/--no-timing", default=False, show_default=True,
              help="write measured wall_ms (off keeps reruns byte-identical)")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--per-circuit", "per_circuit_path", type=click.Path(), default=None,
              help="also write per-circuit rows (surrogate training data)")
def sweep(space_name, suite_dir, device_spec, deadline, fix_max_depth, seed, swap_weight,
          workers, timing, out_path, per_circuit_path):
    """Exhaustively evaluate a parameter grid over a benchmark suite."""
    cases = load_suite(suite_dir)
    device = _load_device(device_spec)
    space = SPACE_PRESETS[space_name]()
    if fix_max_depth is not None:
        space = space.restrict(max_depth=fix_max_depth)
    budget = parse_duration(deadline) if deadline else None

    def objective(params):
        return evaluate(params, cases, device, per_circuit_deadline=budget,
                        router_seed=seed, swap_weight=swap_weight)

    click.echo(f"sweep: {space.size} configurations x {len(cases)} circuits "
               f"= {space.size * len(cases)} layouts", err=True)
    records = exhaustive(space, objective, workers=workers)
    write_results_csv(out_path, records, timing=timing)
    if per_circuit_path:
        write_per_circuit_csv(per_circuit_path, records, cases)
    timeouts = sum(rec.timeout_count for rec in records)
    valid = [rec for rec in records if rec.valid]
    best = min(valid, key=lambda rec: rec.mean_ratio) if valid else None
    click.echo(f"done: {len(records)} trials, {timeouts} layout timeouts"
               + (f", best mean ratio {best.mean_ratio:.4f} at {best.params.as_tuple()}" if best else ""),
               err=True)
    _check_not_all_timeouts(records)


@cli.command("wrs")
@_space_option
@click.option("--suite", "suite_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--device", "device_spec", required=True)
@click.option("--deadline", default=None)
@click.option("--n0", type=int, default=550, show_default=True, help="uniform trials before weighting")
@click.option("--trials", type=int, default=1500, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--swap-weight", type=click.IntRange(1), default=3, show_default=True)
@click.option("--workers", type=click.IntRange(1), default=1, show_default=True)
@click.option("--timing/--no-timing", default=False, show_default=True)
@click.option("--surrogate", "surrogate_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="drive the search with a trained model instead of real layouts")
@click.option("--random-only", is_flag=True, default=False, help="plain random search baseline")
@click.option("--out", "out_path", required=True, type=click.Path())
def wrs_command(space_name, suite_dir, device_spec, deadline, n0, trials, seed, swap_weight,
                workers, timing, surrogate_path, random_only, out_path):
    """Weighted random search over the parameter space."""
    cases = load_suite(suite_dir)
    device = _load_device(device_spec)
    space = SPACE_PRESETS[space_name]()
    budget = parse_duration(deadline) if deadline else None
    if surrogate_path:
        try:
            model = load_model(surrogate_path)
        except (ValueError, KeyError, json.JSONDecodeError) as e:
            raise InputFormatError(f"{surrogate_path}: {e}")
        objective = make_objective(model, cases)
    else:
        def objective(params):
            return evaluate(params, cases, device, per_circuit_deadline=budget,
                            router_seed=seed, swap_weight=swap_weight)
    try:
        if random_only:
            result = random_search(space, objective, trials, seed=seed, workers=workers)
        else:
            result = run_wrs(space, objective, n0, trials, seed=seed, workers=workers)
    except ValueError as e:
        raise click.UsageError(str(e))
    write_results_csv(out_path, result.history, timing=timing)
    if result.weights is not None:
        table = " ".join(f"{k}={v:.2f}" for k, v in result.weights.probability_of_change.items())
        click.echo(f"probability of change: {table}", err=True)
    if result.best is not None:
        click.echo(f"best mean ratio {result.best.mean_ratio:.4f} at trial {result.best.trial_index} "
                   f"params {result.best.params.as_tuple()}", err=True)
    _check_not_all_timeouts(result.history)


@cli.group("surrogate")
def surrogate_group():
    """Train or query the layout-quality model."""


@surrogate_group.command("train")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="per-circuit CSV from sweep --per-circuit")
@click.option("--hidden", type=int, default=100, show_default=True)
@click.option("--activation", type=click.Choice(["relu", "tanh"]), default="relu", show_default=True)
@click.option("--epochs", type=int, default=200, show_default=True)
@click.option("--lr", type=float, default=0.01, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--cv", "run_cv", is_flag=True, default=False, help="also report 10-fold CV error")
@click.option("--out", "out_path", required=True, type=click.Path())
def surrogate_train(data_path, hidden, activation, epochs, lr, batch_size, seed, run_cv, out_path):
    """Fit the perceptron on sweep data and write the model JSON."""
    try:
        x, y = read_per_circuit_csv(data_path)
    except (ValueError, KeyError) as e:
        raise InputFormatError(f"{data_path}: {e}")
    if len(x) == 0:
        raise InputFormatError(f"{data_path}: no usable rows")
    if run_cv:
        cv = cross_validate(x, y, "mlp", {"hidden": [hidden], "activation": [activation]},
                            seed=seed, epochs=epochs, lr=lr, batch_size=batch_size)
        click.echo(f"10-fold CV MSE {cv.mean_mse:.6g} +- {cv.sd_mse:.6g} "
                   f"(target variance {statistics.pvariance(y.tolist()):.6g})", err=True)
    model = fit_surrogate(x, y, hidden=hidden, activation=activation, epochs=epochs,
                          lr=lr, seed=seed, batch_size=batch_size, metadata={"data": str(data_path)})
    save_model(out_path, model)
    click.echo(f"trained on {len(x)} rows -> {out_path}", err=True)


@surrogate_group.command("predict")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--circuit", "circuit_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--params", "params_text", required=True, metavar="SEXTUPLE")
def surrogate_predict(model_path, circuit_path, params_text):
    """Predict the depth ratio for one circuit and parameter configuration."""
    try:
        model = load_model(model_path)
    except (ValueError, KeyError, json.JSONDecodeError) as e:
        raise InputFormatError(f"{model_path}: {e}")
    circuit = _load_circuit(circuit_path)
    try:
        params = QxxParams.from_sextuple(params_text)
    except ValueError as e:
        raise click.UsageError(str(e))
    row = [*features(circuit), *(float(v) for v in params.as_tuple())]
    click.echo(f"{model.predict(row):.12g}")


@cli.command("report")
@click.option("--results", "results_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="per-circuit CSV from sweep --per-circuit")
@click.option("--metric", type=click.Choice(["curves", "count", "rank"]), default="curves", show_default=True)
@click.option("--group-by", default="config", show_default=True, help="curves grouping: config or all")
@click.option("--param", "param_name", type=click.Choice(PARAM_NAMES), default=None)
@click.option("--tfl-depth", type=int, default=None, help="benchmark depth slice (count/rank)")
@click.option("--max-depth", "slice_max_depth", type=int, default=None, help="tree-depth slice (count)")
@click.option("--out", "out_path", required=True, type=click.Path())
def report_command(results_path, metric, group_by, param_name, tfl_depth, slice_max_depth, out_path):
    """Aggregate sweep results into plot-ready CSV tables."""
    try:
        rows = load_rows(results_path)
    except (ValueError, KeyError) as e:
        raise InputFormatError(f"{results_path}: {e}")
    if metric == "curves":
        table = ratio_curves(rows, group_by=group_by)
    else:
        if param_name is None or tfl_depth is None:
            raise click.UsageError(f"--metric {metric} needs --param and --tfl-depth")
        values = sorted({row[param_name] for row in rows})
        try:
            if metric == "count":
                if slice_max_depth is None:
                    raise click.UsageError("--metric count needs --max-depth")
                table = [{"param": param_name, "value": v,
                          "count": count_metric(rows, param_name, v, tfl_depth, slice_max_depth)}
                         for v in values]
            else:
                table = [{"param": param_name, "value": v,
                          "rank": rank_metric(rows, param_name, v, tfl_depth)}
                         for v in values]
        except ValueError as e:
            raise InputFormatError(str(e))
    write_table_csv(out_path, table)
    click.echo(f"wrote {len(table)} rows to {out_path}", err=True)


def main(argv=None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        return 130
    except click.ClickException as e:
        e.show()
        return 1
    except InputFormatError as e:
        click.echo(f"error: {e}", err=True)
        return 2
    except TimeoutDominated as e:
        click.echo(f"error: {e}", err=True)
        return 3
    except SystemExit as e:  # pragma: no cover - help/abort paths
        code = e.code
        return int(code) if code else 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
