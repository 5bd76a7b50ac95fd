"""Command-line interface.

Subcommands: gen-data, denoise, train, predict, evaluate, experiment.
Exit codes: 0 success, 1 data/model error, 2 usage or configuration error.

CSV outputs (comma-delimited, header row, UTF-8, LF line endings):

  report.csv / metrics.csv   site,model,horizon,mae,mape_pct,rmse
  pred_*.csv                 index,actual,predicted
  denoised.csv               index,original,denoised
  components.csv             component,singular_value,index,value
  trace_h<h>.csv             epoch,loss

Every command also writes manifest_<command>.ini to its output directory; it
is a complete config file, so ``--config OUT/manifest_train.ini`` replays a run.
"""

from __future__ import annotations

import argparse
import csv
import logging
import re
import sys
from pathlib import Path

import numpy as np

from .config import CliConfig, ConfigError, load_config, manifest_text, parse_literal
from .forecast import EvalRow, Predictions, evaluate, model_label, run_experiment, write_long_csv
from .nn.io import FormatError, load_tensors, save_tensors
from .pssa import pssa_denoise
from .series import DataError, TimeSeries, load_csv, save_csv
from .synthetic import generate
from .trainer import TrainingDiverged

log = logging.getLogger("windcast")

MODEL_FILE = "model.wcnt"


class CliError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="run configuration file (a manifest works too)")
    p.add_argument("--seed", type=int, help="training seed (overrides train.seed)")
    p.add_argument("--mode", choices=["paper", "causal"], help="paper: denoise the whole series before splitting; causal: denoise without look-ahead")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides run.out)")
    p.add_argument("--horizons", metavar="LIST", help="comma-separated forecast horizons, e.g. 1,2,3")
    p.add_argument("--data", metavar="CSV", help="input series file (overrides data.path)")
    p.add_argument("--column", help="column name or 0-based index (overrides data.column)")
    p.add_argument(
        "--set", metavar="SECTION.KEY=VALUE", action="append", default=[],
        help="override any config value, e.g. --set train.epochs=5",
    )
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windcast",
        description="Adaptive SSA denoising and TCN-GRU multi-step wind speed forecasting.",
        epilog=__doc__.split("\n\n", 1)[1],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    specs = {
        "gen-data": "write the bundled synthetic series to synthetic.csv",
        "denoise": "adaptive SSA denoising; writes denoised.csv and components.csv",
        "train": "train one model per horizon; writes model.wcnt and trace CSVs",
        "predict": "forecast the test segment with a saved model; writes pred_h<h>.csv",
        "evaluate": "score pred_h<h>.csv files; writes metrics.csv",
        "experiment": "run the model x site grid; writes report.csv, report_table.csv, report.txt",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        _add_common(p)
        if name == "predict":
            p.add_argument("--model", metavar="PATH", help=f"saved model (default OUT/{MODEL_FILE})")
        if name == "evaluate":
            p.add_argument("--pred-dir", metavar="DIR", help="directory with pred_h<h>.csv (default OUT)")
    return parser


def resolve_config(args: argparse.Namespace) -> CliConfig:
    cfg = load_config(args.config) if args.config else CliConfig()
    if args.seed is not None:
        cfg.train.seed = args.seed
    if args.mode is not None:
        cfg.run.mode = args.mode
    if args.out is not None:
        cfg.run.out = args.out
    if args.data is not None:
        cfg.data.path = args.data
    if args.column is not None:
        cfg.data.column = int(args.column) if args.column.isdigit() else args.column
    if args.horizons is not None:
        try:
            cfg.windowing.horizons = [int(h) for h in args.horizons.split(",") if h.strip()]
        except ValueError:
            raise ConfigError(f"--horizons: expected comma-separated integers, got {args.horizons!r}") from None
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        cfg.set(key.strip(), parse_literal(raw.strip(), key.strip()))
    cfg.validate()
    return cfg


def load_series(cfg: CliConfig, path: str | None = None) -> TimeSeries:
    path = path if path is not None else cfg.data.path
    if path is None:
        ts, _ = generate(cfg.synthetic_config(), label=cfg.data.site or "synthetic")
        return ts
    label = cfg.data.site if cfg.data.site else None
    return load_csv(path, cfg.data.column, label=label)


def _out_dir(cfg: CliConfig, command: str) -> Path:
    out = Path(cfg.run.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"manifest_{command}.ini").write_text(manifest_text(cfg, command), encoding="utf-8")
    return out


# -- subcommands -------------------------------------------------------------


def cmd_gen_data(cfg: CliConfig) -> None:
    syn = cfg.synthetic_config()
    out = _out_dir(cfg, "gen-data")
    ts, clean = generate(syn)
    save_csv(out / "synthetic.csv", {"speed": ts.values, "clean": clean}, "%.10f")
    print(f"wrote {len(ts)} samples to {out / 'synthetic.csv'}")


def cmd_denoise(cfg: CliConfig) -> None:
    ts = load_series(cfg)
    res = pssa_denoise(ts, cfg.pssa_config())
    out = _out_dir(cfg, "denoise")
    idx = list(range(len(ts)))
    save_csv(out / "denoised.csv", {"index": idx, "original": ts.values, "denoised": res.denoised.values}, "%.10f")
    d = res.decomposition
    n = len(ts)
    save_csv(
        out / "components.csv",
        {
            "component": np.repeat(np.arange(1, d.rank + 1), n).tolist(),
            "singular_value": np.repeat(d.singular_values[: d.rank], n),
            "index": idx * d.rank,
            "value": d.components.reshape(-1),
        },
        "%.10g",
    )
    print(f"m_used={res.m_used} achieved_r={res.achieved_r:.6f} rank={d.rank} n={n}")


def cmd_train(cfg: CliConfig) -> None:
    ts = load_series(cfg)
    forecaster = cfg.forecaster()
    forecaster.fit(ts, cfg.split.n_test)
    out = _out_dir(cfg, "train")
    save_tensors(out / MODEL_FILE, forecaster.state_dict())
    for h, trace in forecaster.traces.items():
        trace.to_csv(out / f"trace_h{h}.csv")
        print(f"h={h}: final training loss {trace.losses[-1]:.6g} ({trace.wall_time:.1f}s)")
    if forecaster.pssa_info:
        print("pssa: " + " ".join(f"{k}={v:.6g}" for k, v in forecaster.pssa_info.items()))


def cmd_predict(cfg: CliConfig, model_path: str | None) -> None:
    ts = load_series(cfg)
    path = Path(model_path) if model_path else Path(cfg.run.out) / MODEL_FILE
    if not path.is_file():
        raise DataError(f"model file not found: {path}")
    forecaster = cfg.forecaster()
    try:
        forecaster.load_state_dict(load_tensors(path))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    n_test = cfg.split.n_test
    series = forecaster.training_series(ts, n_test)
    preds = forecaster.predict_test(ts, n_test, series)
    out = _out_dir(cfg, "predict")
    for h, p in preds.items():
        p.to_csv(out / f"pred_h{h}.csv")
        print(f"h={h}: {p.index.size} forecasts -> {out / f'pred_h{h}.csv'}")


def read_predictions(path: Path) -> Predictions:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["index", "actual", "predicted"]:
            raise DataError(f"{path}: expected header index,actual,predicted")
        rows = list(reader)
    if not rows:
        raise DataError(f"{path}: empty data")
    try:
        return Predictions(
            np.array([int(r["index"]) for r in rows]),
            np.array([float(r["actual"]) for r in rows]),
            np.array([float(r["predicted"]) for r in rows]),
        )
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_evaluate(cfg: CliConfig, pred_dir: str | None) -> None:
    src = Path(pred_dir) if pred_dir else Path(cfg.run.out)
    files = sorted(src.glob("pred_h*.csv"), key=lambda p: int(re.findall(r"\d+", p.stem)[-1]))
    if not files:
        raise DataError(f"no pred_h<h>.csv files in {src}")
    site = cfg.data.site or (Path(cfg.data.path).stem if cfg.data.path else "synthetic")
    label = model_label(cfg.forecaster())
    rows = []
    for f in files:
        h = int(re.findall(r"\d+", f.stem)[-1])
        p = read_predictions(f)
        m = evaluate(p.predicted, p.actual)
        rows.append(EvalRow(site, label, h, m.mae, m.mape, m.rmse))
    out = _out_dir(cfg, "evaluate")
    write_long_csv(out / "metrics.csv", rows)
    for r in rows:
        print(f"h={r.horizon}: MAE={r.mae:.4f} MAPE={r.mape:.4f}% RMSE={r.rmse:.4f}")


def cmd_experiment(cfg: CliConfig) -> None:
    if cfg.experiment.sites:
        sites = [load_series(cfg, p) for p in cfg.experiment.sites]
    else:
        sites = []
        for i, seed in enumerate(cfg.experiment.synthetic_seeds, start=1):
            ts, _ = generate(cfg.synthetic_config(seed), label=f"S{i}")
            sites.append(ts)
    grid = [(cfg.forecaster(kind), ts) for ts in sites for kind in cfg.experiment.models]
    out = _out_dir(cfg, "experiment")
    result = run_experiment(grid, out, cfg.split.n_test)
    print((out / "report.txt").read_text(encoding="utf-8"), end="")
    failed = [r for r in result.rows if r.status != "ok"]
    if failed:
        raise CliError(f"{len(failed)} report cells failed; see {out / 'failures.txt'}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"windcast: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "gen-data":
            cmd_gen_data(cfg)
        elif args.command == "denoise":
            cmd_denoise(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "predict":
            cmd_predict(cfg, args.model)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.pred_dir)
        else:
            cmd_experiment(cfg)
    except CliError as exc:
        print(f"windcast: {exc}", file=sys.stderr)
        return exc.code
    except (DataError, FormatError, TrainingDiverged, OSError, ValueError) as exc:
        print(f"windcast: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
