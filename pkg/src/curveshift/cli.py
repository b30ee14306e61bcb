"""Command-line entry point: reproducible runs over the library pipeline.

Subcommands: ingest, synth, fit, predict, backtest, scenario, plot-data.
Every run writes a ``<command>_manifest.json`` with the resolved parameters
and input checksums; passing that manifest back via ``--config`` reproduces
the run.  Outputs are written atomically (temp file + rename).  Exit codes:
0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from dataclasses import asdict
from pathlib import Path

import pandas as pd

from . import __version__
from .data import Dataset, SynthConfig, generate_synthetic, ingest
from .errors import (
    CurveShiftError,
    EmptyInput,
    InsufficientData,
    InvalidConfig,
    SchemaError,
    UnitError,
)
from .evaluation import BacktestConfig, run_backtest
from .models import MODEL_IDS, ModelFit, fit_model, predict_dataset
from .scenario import ScenarioGrid, run_scenario

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

_DATA_ERRORS = (SchemaError, UnitError, InsufficientData, InvalidConfig, EmptyInput,
                FileNotFoundError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise UsageError(message)


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_frame(path: Path, frame: pd.DataFrame) -> None:
    _atomic_write_text(path, frame.to_csv(index=False))


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, params: dict, inputs: dict,
                    outputs: list, extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "params": params,
        "inputs": {str(k): _sha256(v) for k, v in inputs.items()},
        "outputs": outputs,
        "package_version": __version__,
    }
    if extra:
        manifest.update(extra)
    _atomic_write_text(out_dir / f"{command}_manifest.json",
                       json.dumps(manifest, indent=2, sort_keys=True))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in str(text).split(","))


def _names(text) -> tuple[str, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(text)
    return tuple(part.strip() for part in str(text).split(",") if part.strip())


def _resolve(args: argparse.Namespace, config: dict, defaults: dict) -> dict:
    params = {}
    for dest, default in defaults.items():
        value = getattr(args, dest, None)
        if value is None:
            value = config.get(dest, default)
        params[dest] = value
    return params


def _require_models(ids) -> tuple[str, ...]:
    ids = _names(ids)
    unknown = [m for m in ids if m not in MODEL_IDS]
    if unknown:
        raise UsageError(f"unknown model id(s) {unknown}; choose from {MODEL_IDS}")
    if not ids:
        raise UsageError("at least one model id required")
    return ids


# ---------------------------------------------------------------------------
# subcommands


SYNTH_DEFAULTS = {
    "days": 365, "seed": 0, "true_model": "nlm", "true_beta": None,
    "noise_sd": 1.0, "wind_mae": 1000.0, "solar_mae": 330.0,
    "supply_steps": 28, "demand_steps": 10, "out_dir": "synth_out",
}


def cmd_synth(args, config) -> int:
    params = _resolve(args, config, SYNTH_DEFAULTS)
    beta = params["true_beta"]
    if isinstance(beta, str):
        beta = _floats(beta)
    elif isinstance(beta, list):
        beta = tuple(float(b) for b in beta)
    cfg = SynthConfig(
        days=int(params["days"]), true_model=params["true_model"], true_beta=beta,
        noise_sd=float(params["noise_sd"]), wind_mae=float(params["wind_mae"]),
        solar_mae=float(params["solar_mae"]), supply_steps=int(params["supply_steps"]),
        demand_steps=int(params["demand_steps"]))
    dataset = generate_synthetic(cfg, int(params["seed"]))
    out = Path(params["out_dir"])
    dataset.write(out)
    params["true_beta"] = list(cfg.resolved_beta())
    _write_manifest(out, "synth", params, {}, ["curves.csv", "prices.csv", "renewables.csv"],
                    extra={"synth_config": asdict(cfg)})
    print(f"wrote {len(dataset)} hours to {out}")
    return EXIT_OK


INGEST_DEFAULTS = {"curves": None, "prices": None, "renewables": None, "out_dir": "dataset"}


def cmd_ingest(args, config) -> int:
    params = _resolve(args, config, INGEST_DEFAULTS)
    for key in ("curves", "prices", "renewables"):
        if not params[key]:
            raise UsageError(f"--{key} is required")
    dataset = ingest(params["curves"], params["prices"], params["renewables"])
    out = Path(params["out_dir"])
    dataset.write(out)
    inputs = {k: params[k] for k in ("curves", "prices", "renewables")}
    _write_manifest(out, "ingest", params, inputs,
                    ["curves.csv", "prices.csv", "renewables.csv"])
    print(f"ingested {len(dataset)} hours into {out}")
    return EXIT_OK


FIT_DEFAULTS = {"dataset": None, "models": "lm2", "out_dir": "fits"}


def cmd_fit(args, config) -> int:
    params = _resolve(args, config, FIT_DEFAULTS)
    if not params["dataset"]:
        raise UsageError("--dataset is required")
    model_ids = _require_models(params["models"])
    dataset = Dataset.load(params["dataset"])
    out = Path(params["out_dir"])
    outputs = []
    for model_id in model_ids:
        fit = fit_model(model_id, dataset)
        name = f"{model_id}_fit.json"
        _atomic_write_text(out / name, json.dumps(fit.to_dict(), indent=2, sort_keys=True))
        outputs.append(name)
        print(f"fitted {model_id}: beta length {fit.beta.size}")
    params["models"] = list(model_ids)
    inputs = {f"dataset/{n}": Path(params["dataset"]) / n
              for n in ("curves.csv", "prices.csv", "renewables.csv")}
    _write_manifest(out, "fit", params, inputs, outputs)
    return EXIT_OK


PREDICT_DEFAULTS = {"dataset": None, "fit": None, "out_dir": "predictions"}


def cmd_predict(args, config) -> int:
    params = _resolve(args, config, PREDICT_DEFAULTS)
    if not params["dataset"] or not params["fit"]:
        raise UsageError("--dataset and --fit are required")
    fit_paths = params["fit"] if isinstance(params["fit"], list) else [params["fit"]]
    dataset = Dataset.load(params["dataset"])
    rows = []
    for fit_path in fit_paths:
        fit = ModelFit.from_dict(json.loads(Path(fit_path).read_text()))
        prices, clamped = predict_dataset(fit, dataset)
        for record, price, clamp in zip(dataset, prices, clamped):
            rows.append({
                "timestamp_utc": record.timestamp.strftime("%Y-%m-%dT%H:%M:%SZ"),
                "model_id": fit.model_id,
                "p_hat_eur": float(price),
                "clamped": bool(clamp),
            })
    frame = pd.DataFrame(rows, columns=["timestamp_utc", "model_id", "p_hat_eur", "clamped"])
    out = Path(params["out_dir"])
    _atomic_write_frame(out / "predictions.csv", frame)
    params["fit"] = [str(p) for p in fit_paths]
    inputs = {str(p): p for p in fit_paths}
    inputs.update({f"dataset/{n}": Path(params["dataset"]) / n
                   for n in ("curves.csv", "prices.csv", "renewables.csv")})
    _write_manifest(out, "predict", params, inputs, ["predictions.csv"])
    print(f"wrote {len(frame)} predictions to {out}")
    return EXIT_OK


BACKTEST_DEFAULTS = {
    "dataset": None, "models": "naive,lm2", "in_sample_days": 365,
    "out_sample_days": 364, "step": 24, "jobs": 1, "out_dir": "backtest",
}


def cmd_backtest(args, config) -> int:
    params = _resolve(args, config, BACKTEST_DEFAULTS)
    if not params["dataset"]:
        raise UsageError("--dataset is required")
    model_ids = _require_models(params["models"])
    dataset = Dataset.load(params["dataset"])
    cfg = BacktestConfig(in_sample_days=int(params["in_sample_days"]),
                         out_sample_days=int(params["out_sample_days"]),
                         step=int(params["step"]))
    report = run_backtest(dataset, list(model_ids), cfg, jobs=int(params["jobs"]))
    out = Path(params["out_dir"])
    _atomic_write_frame(out / "metrics.csv", report.metrics_frame())
    _atomic_write_frame(out / "dm.csv", report.dm_frame())
    _atomic_write_frame(out / "coefficients.csv", report.coefficients_frame())
    _atomic_write_frame(out / "predictions.csv", report.predictions_frame())
    params["models"] = list(model_ids)
    inputs = {f"dataset/{n}": Path(params["dataset"]) / n
              for n in ("curves.csv", "prices.csv", "renewables.csv")}
    _write_manifest(out, "backtest", params, inputs,
                    ["metrics.csv", "dm.csv", "coefficients.csv", "predictions.csv"],
                    extra={"failures": [list(f) for f in report.failures]})
    for model_id in model_ids:
        stats = report.metrics[model_id]
        print(f"{model_id}: mae={stats['mae']:.4f} rmse={stats['rmse']:.4f} "
              f"days={stats['days_used']}")
    return EXIT_OK


SCENARIO_DEFAULTS = {
    "dataset": None, "fit_lm2": None, "fit_nlm": None,
    "gammas": "0.1,1,5", "rhos": "0,0.5,0.8",
    "technologies": "wind,solar,wind+solar", "quantiles": "0.001,0.999",
    "out_dir": "scenario",
}


def cmd_scenario(args, config) -> int:
    params = _resolve(args, config, SCENARIO_DEFAULTS)
    if not params["dataset"]:
        raise UsageError("--dataset is required")
    dataset = Dataset.load(params["dataset"])
    grid = ScenarioGrid(
        gammas=_floats(params["gammas"]) if isinstance(params["gammas"], str)
        else tuple(params["gammas"]),
        rhos=_floats(params["rhos"]) if isinstance(params["rhos"], str)
        else tuple(params["rhos"]),
        technologies=_names(params["technologies"]),
        quantiles=_floats(params["quantiles"]) if isinstance(params["quantiles"], str)
        else tuple(params["quantiles"]))
    inputs = {f"dataset/{n}": Path(params["dataset"]) / n
              for n in ("curves.csv", "prices.csv", "renewables.csv")}
    if params["fit_lm2"]:
        fit_lm2 = ModelFit.from_dict(json.loads(Path(params["fit_lm2"]).read_text()))
        inputs[str(params["fit_lm2"])] = params["fit_lm2"]
    else:
        fit_lm2 = fit_model("lm2", dataset)
    if params["fit_nlm"]:
        fit_nlm = ModelFit.from_dict(json.loads(Path(params["fit_nlm"]).read_text()))
        inputs[str(params["fit_nlm"])] = params["fit_nlm"]
    else:
        fit_nlm = fit_model("nlm", dataset)
    report = run_scenario(dataset, fit_lm2, fit_nlm, grid)
    out = Path(params["out_dir"])
    _atomic_write_frame(out / "scenario.csv", report.to_frame())
    _write_manifest(out, "scenario", params, inputs, ["scenario.csv"])
    print(f"wrote {len(report.cells)} scenario cells to {out}")
    return EXIT_OK


PLOT_DATA_DEFAULTS = {"backtest_dir": None, "pair": "mcq,qlm", "out_dir": "plot_data"}


def cmd_plot_data(args, config) -> int:
    """Tidy CSV extracts of a backtest for external plotting."""
    params = _resolve(args, config, PLOT_DATA_DEFAULTS)
    if not params["backtest_dir"]:
        raise UsageError("--backtest-dir is required")
    backtest_dir = Path(params["backtest_dir"])
    dm_path = backtest_dir / "dm.csv"
    coeff_path = backtest_dir / "coefficients.csv"
    if not dm_path.exists() or not coeff_path.exists():
        raise SchemaError(f"{backtest_dir} does not contain backtest outputs")
    model_a, model_b = (_names(params["pair"]) + (None, None))[:2]
    if model_b is None:
        raise UsageError("--pair needs two comma-separated model ids")

    dm = pd.read_csv(dm_path)
    pair = dm[((dm.model_a == model_a) & (dm.model_b == model_b))
              | ((dm.model_a == model_b) & (dm.model_b == model_a))].copy()
    flipped = pair.model_a == model_b
    pair.loc[flipped, ["model_a", "model_b"]] = pair.loc[flipped, ["model_b", "model_a"]].values
    pair.loc[flipped, "t"] = -pair.loc[flipped, "t"]
    pair["significant_5pct"] = pair["t"].abs() > 1.96
    pair = pair.sort_values(["phi", "hour"], kind="stable")

    coeffs = pd.read_csv(coeff_path)
    negative_error_rows = coeffs[
        ((coeffs.model_id == "lm2") & (coeffs.beta_index.isin([1, 3])))
        | ((coeffs.model_id == "nlm") & (coeffs.beta_index.isin([1, 3])))].copy()
    feature = {1: "w_err_neg", 3: "s_err_neg"}
    negative_error_rows["feature"] = negative_error_rows.beta_index.map(feature)

    out = Path(params["out_dir"])
    _atomic_write_frame(out / "dm_hourly.csv", pair)
    _atomic_write_frame(out / "negative_error_coefficients.csv", negative_error_rows)
    _write_manifest(out, "plot-data", params, {str(dm_path): dm_path,
                                               str(coeff_path): coeff_path},
                    ["dm_hourly.csv", "negative_error_coefficients.csv"])
    print(f"wrote plot data to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(sub):
    sub.add_argument("--config", help="JSON file of parameter defaults (e.g. a manifest)")
    sub.add_argument("--out-dir", dest="out_dir")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--jobs", type=int)


def _build_parser() -> _Parser:
    parser = _Parser(prog="curveshift",
                     description="Intraday price models on shifted day-ahead auction curves")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_common(p)
    p.add_argument("--days", type=int)
    p.add_argument("--true-model", dest="true_model", choices=list(MODEL_IDS)[:5])
    p.add_argument("--true-beta", dest="true_beta")
    p.add_argument("--noise-sd", dest="noise_sd", type=float)
    p.add_argument("--wind-mae", dest="wind_mae", type=float)
    p.add_argument("--solar-mae", dest="solar_mae", type=float)
    p.add_argument("--supply-steps", dest="supply_steps", type=int)
    p.add_argument("--demand-steps", dest="demand_steps", type=int)

    p = sub.add_parser("ingest", help="ingest canonical CSV files into a dataset")
    _add_common(p)
    p.add_argument("--curves")
    p.add_argument("--prices")
    p.add_argument("--renewables")

    p = sub.add_parser("fit", help="fit models on a dataset")
    _add_common(p)
    p.add_argument("--dataset")
    p.add_argument("--models")

    p = sub.add_parser("predict", help="predict a dataset with stored fits")
    _add_common(p)
    p.add_argument("--dataset")
    p.add_argument("--fit", action="append")

    p = sub.add_parser("backtest", help="rolling refit-and-predict study")
    _add_common(p)
    p.add_argument("--dataset")
    p.add_argument("--models")
    p.add_argument("--in-sample-days", dest="in_sample_days", type=int)
    p.add_argument("--out-sample-days", dest="out_sample_days", type=int)
    p.add_argument("--step", type=int)

    p = sub.add_parser("scenario", help="capacity-expansion volatility study")
    _add_common(p)
    p.add_argument("--dataset")
    p.add_argument("--fit-lm2", dest="fit_lm2")
    p.add_argument("--fit-nlm", dest="fit_nlm")
    p.add_argument("--gammas")
    p.add_argument("--rhos")
    p.add_argument("--technologies")
    p.add_argument("--quantiles")

    p = sub.add_parser("plot-data", help="tidy plotting extracts from a backtest")
    _add_common(p)
    p.add_argument("--backtest-dir", dest="backtest_dir")
    p.add_argument("--pair")

    return parser


_COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "backtest": cmd_backtest,
    "scenario": cmd_scenario,
    "plot-data": cmd_plot_data,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required (see --help)")
        config = {}
        if getattr(args, "config", None):
            payload = json.loads(Path(args.config).read_text())
            config = payload.get("params", payload)
        return _COMMANDS[args.command](args, config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CurveShiftError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
