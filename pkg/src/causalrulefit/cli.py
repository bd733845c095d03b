"""Command line entry point.

Subcommands: simulate, fit, predict, inspect, tune, evaluate.  Every flag can
also come from a JSON config file (``--config``); keys mirror the long flag
names, and an explicit flag wins over the file.  Data goes to files or stdout,
diagnostics to stderr; the exit code is 0 only on success (2 for usage
errors, 1 for runtime failures).
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import nullcontext

import numpy as np

from .data import ColumnSpec, load_csv, write_csv, _read_table, format_real
from .errors import CausalRuleFitError, ColumnError, ConfigError
from .model import (FitConfig, fit, importance, load_model, predict_hte,
                    predict_outcome, save_model, tune_grid)
from .simulation import ScenarioSpec, gen_scenario, mse
from .transform import PropensitySource

__all__ = ["main"]


class UsageError(Exception):
    pass


_DEFAULTS = {
    "simulate": {"n": 600, "p": 50, "design": "rct", "seed": 0},
    "fit": {
        "outcome": "y", "treatment": "t", "trees": 333, "mean_depth": 2.0,
        "shrinkage": 0.01, "min_leaf": 10, "winsor_q": 0.025, "folds": 10,
        "repeats": 1, "lambda_path": 100, "lambda_min_ratio": 1e-3, "seed": 0,
    },
    "predict": {},
    "inspect": {"min_support": 0.1},
    "tune": {
        "outcome": "y", "treatment": "t", "folds": 10, "repeats": 30,
        "winsor_q": 0.025, "min_leaf": 10, "lambda_path": 100,
        "lambda_min_ratio": 1e-3, "seed": 0,
    },
    "evaluate": {"truth_col": "true_tau", "pred_col": "tau_hat"},
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalrulefit",
        description="Interpretable heterogeneous treatment effect estimation.")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="JSON file of flag values")
        p.add_argument("--threads", type=int, help="cap BLAS thread pools")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("simulate", help="draw a benchmark scenario dataset")
    common(p)
    p.add_argument("--scenario", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--design", choices=("rct", "obs"))
    p.add_argument("--out")

    for name in ("fit", "tune"):
        p = sub.add_parser(
            name, help="fit a model" if name == "fit" else "grid-search settings")
        common(p)
        p.add_argument("--data")
        p.add_argument("--outcome")
        p.add_argument("--treatment")
        p.add_argument("--pscore", type=float,
                       help="constant propensity in (0, 1)")
        p.add_argument("--pscore-col", help="propensity column name")
        p.add_argument("--truth-col",
                       help="column to exclude from covariates")
        if name == "fit":
            p.add_argument("--trees", type=int)
            p.add_argument("--mean-depth", type=float)
            p.add_argument("--shrinkage", type=float)
            p.add_argument("--subsample", type=float)
            p.add_argument("--out")
        else:
            p.add_argument("--trees", help="comma list, e.g. 200,300,400")
            p.add_argument("--mean-depth", help="comma list")
            p.add_argument("--shrinkage", help="comma list")
            p.add_argument("--subsample", help="comma list")
            p.add_argument("--out", help="write the scored grid as CSV")
        p.add_argument("--min-leaf", type=int)
        p.add_argument("--winsor-q", type=float)
        p.add_argument("--folds", type=int)
        p.add_argument("--repeats", type=int)
        p.add_argument("--lambda-path", type=int)
        p.add_argument("--lambda-min-ratio", type=float)

    p = sub.add_parser("predict", help="apply a saved model to a CSV")
    common(p)
    p.add_argument("--model")
    p.add_argument("--data")
    p.add_argument("--out")
    p.add_argument("--both-arms", action="store_true",
                   help="also write the two arm predictions f0 and f1")
    p.add_argument("--truth-col", help="copy this column into the output")

    p = sub.add_parser("inspect", help="rank a saved model's terms")
    common(p)
    p.add_argument("--model")
    p.add_argument("--top", type=int)
    p.add_argument("--min-support", type=float)
    p.add_argument("--all", action="store_true",
                   help="show every active term, no display filter")
    p.add_argument("--out", help="write the table as CSV")

    p = sub.add_parser("evaluate", help="MSE between two columns of a CSV")
    common(p)
    p.add_argument("--data")
    p.add_argument("--truth-col")
    p.add_argument("--pred-col")
    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    return {str(k).replace("-", "_"): v for k, v in doc.items()}


def _resolve(args: argparse.Namespace) -> dict:
    """Layer values: explicit flag > config file > builtin default."""
    ns = dict(vars(args))
    command = ns.pop("command")
    config_path = ns.pop("config", None)
    file_vals = _load_config_file(config_path) if config_path else {}
    unknown = set(file_vals) - set(ns)
    if unknown:
        raise UsageError(
            f"config keys not valid for {command!r}: {sorted(unknown)}")
    defaults = _DEFAULTS[command]
    out = {}
    for key, flag_val in ns.items():
        if isinstance(flag_val, bool):  # store_true flags
            out[key] = flag_val or bool(file_vals.get(key, False))
        elif flag_val is not None:
            out[key] = flag_val
        elif key in file_vals:
            out[key] = file_vals[key]
        else:
            out[key] = defaults.get(key)
    out["command"] = command
    return out


def _require_opt(opts, key, flag):
    if opts.get(key) is None:
        raise UsageError(f"{flag} is required")
    return opts[key]


def _comma_list(value, caster, flag):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        items = value
    else:
        items = str(value).split(",")
    try:
        return [caster(v) for v in items]
    except (TypeError, ValueError):
        raise UsageError(f"{flag}: cannot parse {value!r} as a comma list") from None


def _column_spec(opts) -> ColumnSpec:
    return ColumnSpec(outcome=opts["outcome"], treatment=opts["treatment"],
                      pscore=opts.get("pscore_col"),
                      truth=opts.get("truth_col"))


def _propensity_source(opts) -> PropensitySource:
    const = opts.get("pscore")
    col = opts.get("pscore_col")
    if const is not None and col is not None:
        raise UsageError("give either --pscore or --pscore-col, not both")
    if const is None and col is None:
        raise UsageError("one of --pscore or --pscore-col is required")
    return PropensitySource(constant=const)


def _fit_config(opts, subsample) -> FitConfig:
    return FitConfig(
        trees=int(opts["trees"]), mean_depth=float(opts["mean_depth"]),
        shrinkage=float(opts["shrinkage"]), subsample=subsample,
        min_leaf=int(opts["min_leaf"]), winsor_q=float(opts["winsor_q"]),
        path_length=int(opts["lambda_path"]),
        path_min_ratio=float(opts["lambda_min_ratio"]),
        cv_folds=int(opts["folds"]), cv_repeats=int(opts["repeats"]),
        seed=int(opts["seed"]))


def cmd_simulate(opts) -> int:
    scenario = _require_opt(opts, "scenario", "--scenario")
    out = _require_opt(opts, "out", "--out")
    design = {"rct": "rct", "obs": "observational"}.get(
        opts["design"], opts["design"])
    spec = ScenarioSpec(scenario=int(scenario), design=design,
                        n=int(opts["n"]), p=int(opts["p"]),
                        seed=int(opts["seed"]))
    sim = gen_scenario(spec)
    ds = sim.dataset
    cols = {"y": ds.y, "t": ds.t, "pscore": ds.pscore}
    for j, name in enumerate(ds.feature_names):
        cols[name] = ds.X[:, j]
    cols["true_tau"] = sim.true_tau
    write_csv(out, cols)
    print(f"wrote {ds.n} rows x {len(cols)} columns to {out}")
    return 0


def cmd_fit(opts) -> int:
    data = _require_opt(opts, "data", "--data")
    out = _require_opt(opts, "out", "--out")
    ps = _propensity_source(opts)
    subsample = opts.get("subsample")
    cfg = _fit_config(opts, None if subsample is None else float(subsample))
    ds, _ = load_csv(data, _column_spec(opts))
    model = fit(ds, ps, cfg)
    save_model(model, out)
    print(f"n={model.n} p={model.p}")
    print(f"active rules={len(model.rule_entries)} "
          f"active linear terms={len(model.linear_entries)}")
    print(f"lambda={format(model.lam, '.6g')} "
          f"cv_error={format(model.cv_error, '.6g')}")
    print(f"wrote {out}")
    return 0


def cmd_predict(opts) -> int:
    model_path = _require_opt(opts, "model", "--model")
    data = _require_opt(opts, "data", "--data")
    out = _require_opt(opts, "out", "--out")
    model = load_model(model_path)
    header, table = _read_table(data)
    index = {name: j for j, name in enumerate(header)}
    missing = [c for c in model.feature_names if c not in index]
    if missing:
        raise ColumnError(f"{data}: missing model features {missing}")
    X = np.column_stack([table[:, index[c]] for c in model.feature_names])
    cols = {"tau_hat": predict_hte(model, X)}
    if opts.get("both_arms"):
        cols["f0"] = predict_outcome(model, X, 0)
        cols["f1"] = predict_outcome(model, X, 1)
    truth_col = opts.get("truth_col")
    if truth_col is not None:
        if truth_col not in index:
            raise ColumnError(f"{data}: no column {truth_col!r} to copy")
        cols[truth_col] = table[:, index[truth_col]]
    write_csv(out, cols)
    print(f"wrote {table.shape[0]} predictions to {out}")
    return 0


def _format_row(kind, coef_diff, imp, sup, desc) -> str:
    return f"{kind:<7} {imp:>12} {coef_diff:>12} {sup:>8}  {desc}"


def cmd_inspect(opts) -> int:
    model_path = _require_opt(opts, "model", "--model")
    model = load_model(model_path)
    report = importance(model)
    top = opts.get("top")
    if opts.get("all"):
        rows = report.rows if top is None else report.rows[:top]
    else:
        rows = report.filtered(min_support=float(opts["min_support"]),
                               above_mean=True, top=top)
    print(f"model {model_path}: {len(model.rule_entries)} rules, "
          f"{len(model.linear_entries)} linear terms active "
          f"(showing {len(rows)})")
    print(_format_row("kind", "coef_diff", "importance", "support", "term"))
    for r in rows:
        print(_format_row(r.kind, format(r.coef_diff, ".4g"),
                          format(r.importance, ".4g"),
                          format(r.support, ".4g"), r.description))
    out = opts.get("out")
    if out is not None:
        import csv as _csv
        with open(out, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(
                ["kind", "description", "coef_diff", "importance", "support"])
            for r in rows:
                writer.writerow([r.kind, r.description,
                                 format_real(r.coef_diff),
                                 format_real(r.importance),
                                 format_real(r.support)])
        print(f"wrote {out}")
    return 0


def cmd_tune(opts) -> int:
    data = _require_opt(opts, "data", "--data")
    ps = _propensity_source(opts)
    ds, _ = load_csv(data, _column_spec(opts))
    base = FitConfig(
        min_leaf=int(opts["min_leaf"]), winsor_q=float(opts["winsor_q"]),
        path_length=int(opts["lambda_path"]),
        path_min_ratio=float(opts["lambda_min_ratio"]),
        cv_folds=int(opts["folds"]), seed=int(opts["seed"]))
    result = tune_grid(
        ds, ps, base,
        trees=_comma_list(opts.get("trees"), int, "--trees"),
        mean_depths=_comma_list(opts.get("mean_depth"), float, "--mean-depth"),
        subsamples=_comma_list(opts.get("subsample"), float, "--subsample"),
        shrinkages=_comma_list(opts.get("shrinkage"), float, "--shrinkage"),
        repeats=int(opts["repeats"]))
    print("trees mean_depth subsample shrinkage cv_error")
    for c in result.cells:
        print(f"{c.trees:>5} {c.mean_depth:>10.4g} {c.subsample:>9.4g} "
              f"{c.shrinkage:>9.4g} {c.cv_error:.6g}")
    b = result.best
    print(f"best: trees={b.trees} mean_depth={format(b.mean_depth, '.4g')} "
          f"subsample={format(b.subsample, '.4g')} "
          f"shrinkage={format(b.shrinkage, '.4g')} "
          f"cv_error={format(b.cv_error, '.6g')}")
    out = opts.get("out")
    if out is not None:
        write_csv(out, {
            "trees": [c.trees for c in result.cells],
            "mean_depth": [c.mean_depth for c in result.cells],
            "subsample": [c.subsample for c in result.cells],
            "shrinkage": [c.shrinkage for c in result.cells],
            "cv_error": [c.cv_error for c in result.cells],
        })
        print(f"wrote {out}")
    return 0


def cmd_evaluate(opts) -> int:
    data = _require_opt(opts, "data", "--data")
    header, table = _read_table(data)
    index = {name: j for j, name in enumerate(header)}
    for key, flag in (("truth_col", "--truth-col"), ("pred_col", "--pred-col")):
        if opts[key] not in index:
            raise ColumnError(f"{data}: no column {opts[key]!r} ({flag})")
    value = mse(table[:, index[opts["truth_col"]]],
                table[:, index[opts["pred_col"]]])
    print(format(value, ".10g"))
    return 0


_DISPATCH = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "inspect": cmd_inspect,
    "tune": cmd_tune,
    "evaluate": cmd_evaluate,
}


def _thread_limit(n):
    if n is None:
        return nullcontext()
    if n < 1:
        raise UsageError(f"--threads must be >= 1, got {n}")
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return nullcontext()
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        opts = _resolve(args)
        with _thread_limit(opts.get("threads")):
            return _DISPATCH[args.command](opts)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CausalRuleFitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
