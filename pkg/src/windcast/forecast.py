"""Direct multi-step forecasting pipeline, metrics and comparison reports."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .nn.models import GruOnly, MlpRegressor, Regressor, RnnOnly, TcnGru
from .pssa import PssaConfig, pssa_denoise
from .series import (
    IDENTITY_SCALER,
    DataError,
    Scaler,
    TimeSeries,
    fit_scaler,
    inverse,
    save_csv,
    transform,
)
from .trainer import TrainConfig, TrainTrace, fit

log = logging.getLogger(__name__)

MODES = ("paper", "causal")


class ModelKind(str, enum.Enum):
    TCN_GRU = "TCN_GRU"
    GRU_ONLY = "GRU_ONLY"
    RNN_ONLY = "RNN_ONLY"
    MLP = "MLP"

    @property
    def label(self) -> str:
        return {
            "TCN_GRU": "TCN-GRU",
            "GRU_ONLY": "GRU",
            "RNN_ONLY": "RNN",
            "MLP": "BPNN",
        }[self.value]


@dataclass(frozen=True)
class ModelSpec:
    """A model kind plus its hyperparameters (defaults follow the reference settings)."""

    kind: ModelKind = ModelKind.TCN_GRU
    channels: int = 10
    kernel_size: int = 2
    dilations: tuple[int, ...] = (1, 2, 4)
    n_blocks: int = 1
    tcn_hidden: int = 10
    hidden: int = 64
    mlp_widths: tuple[int, ...] = (20, 20, 20, 1)
    mlp_activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "dilations", tuple(int(d) for d in self.dilations))
        object.__setattr__(self, "mlp_widths", tuple(int(w) for w in self.mlp_widths))
        k = self.kind
        if k is ModelKind.TCN_GRU:
            if self.kernel_size != 2:
                raise ValueError("only kernel_size 2 is supported")
            if not self.dilations or min(self.dilations) < 1:
                raise ValueError("dilations must be a non-empty list of integers >= 1")
            for name in ("channels", "n_blocks", "tcn_hidden"):
                if getattr(self, name) < 1:
                    raise ValueError(f"{name} must be >= 1")
        if k in (ModelKind.TCN_GRU, ModelKind.GRU_ONLY, ModelKind.RNN_ONLY) and self.hidden < 1:
            raise ValueError("hidden must be >= 1")
        if k is ModelKind.MLP:
            if not self.mlp_widths or min(self.mlp_widths) < 1 or self.mlp_widths[-1] != 1:
                raise ValueError("mlp_widths must be positive and end with 1")
            if self.mlp_activation not in ("tanh", "relu", "sigmoid"):
                raise ValueError("mlp_activation must be tanh, relu or sigmoid")

    def build(self, window_dim: int, rng: np.random.Generator) -> Regressor:
        k = self.kind
        if k is ModelKind.TCN_GRU:
            return TcnGru(self.channels, self.dilations, self.n_blocks, self.tcn_hidden, self.hidden, rng)
        if k is ModelKind.GRU_ONLY:
            return GruOnly(self.hidden, rng)
        if k is ModelKind.RNN_ONLY:
            return RnnOnly(self.hidden, rng)
        return MlpRegressor(window_dim, self.mlp_widths, self.mlp_activation, rng)


@dataclass(frozen=True)
class Metrics:
    mae: float
    mape: float
    rmse: float


def evaluate(pred, actual) -> Metrics:
    """MAE, MAPE (percent) and RMSE; any zero actual value is an error."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    actual = np.asarray(actual, dtype=np.float64).reshape(-1)
    if pred.size != actual.size:
        raise ValueError(f"length mismatch: {pred.size} predictions vs {actual.size} actuals")
    if pred.size == 0:
        raise ValueError("cannot evaluate an empty series")
    if np.any(actual == 0):
        raise ValueError("MAPE undefined: actual series contains zero values")
    err = actual - pred
    return Metrics(
        mae=float(np.mean(np.abs(err))),
        mape=float(np.mean(np.abs(err / actual)) * 100.0),
        rmse=float(np.sqrt(np.mean(err * err))),
    )


@dataclass
class Predictions:
    index: np.ndarray
    actual: np.ndarray
    predicted: np.ndarray

    def to_csv(self, path) -> None:
        save_csv(path, {"index": self.index.tolist(), "actual": self.actual, "predicted": self.predicted}, "%.10f")


@dataclass(frozen=True)
class EvalRow:
    site: str
    model: str
    horizon: int
    mae: float
    mape: float
    rmse: float
    status: str = "ok"


@dataclass
class EvalReport:
    rows: list[EvalRow] = field(default_factory=list)
    predictions: dict[int, Predictions] = field(default_factory=dict)
    mode: str = "paper"

    def metrics(self, horizon: int) -> EvalRow:
        return next(r for r in self.rows if r.horizon == horizon)


class HorizonForecaster:
    """One independently trained regressor per horizon (direct strategy).

    ``mode="paper"`` denoises the whole series before splitting; ``"causal"``
    denoises the training segment alone and, for every test forecast origin,
    the prefix of the series ending at that origin. With ``denoise=False`` the
    raw series is modelled directly.
    """

    def __init__(
        self,
        spec: ModelSpec = ModelSpec(),
        pssa: PssaConfig = PssaConfig(),
        train: TrainConfig = TrainConfig(),
        window_dim: int = 20,
        delay: int = 1,
        horizons: Sequence[int] = (1, 2, 3),
        mode: str = "paper",
        normalize: bool = True,
        denoise: bool = True,
    ):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        if window_dim < 1 or delay < 1:
            raise ValueError("window_dim and delay must be >= 1")
        horizons = tuple(int(h) for h in horizons)
        if not horizons or min(horizons) < 1 or len(set(horizons)) != len(horizons):
            raise ValueError("horizons must be distinct positive integers")
        self.spec, self.pssa, self.train_cfg = spec, pssa, train
        self.window_dim, self.delay, self.horizons = window_dim, delay, horizons
        self.mode, self.normalize, self.denoise = mode, normalize, denoise
        self.scaler: Scaler = IDENTITY_SCALER
        self.models: dict[int, Regressor] = {h: self._new_model(h) for h in horizons}
        self.traces: dict[int, TrainTrace] = {}
        self.pssa_info: dict[str, float] = {}
        self._prefix_cache: dict[bytes, np.ndarray] = {}

    @property
    def span(self) -> int:
        return (self.window_dim - 1) * self.delay

    def _seed(self, h: int) -> int:
        return self.train_cfg.seed + self.horizons.index(h)

    def _new_model(self, h: int) -> Regressor:
        return self.spec.build(self.window_dim, np.random.default_rng(self._seed(h)))

    # -- data preparation -------------------------------------------------

    def _denoise(self, values: np.ndarray) -> np.ndarray:
        return pssa_denoise(TimeSeries(values), self.pssa).denoised.values

    def training_series(self, ts: TimeSeries, n_test: int) -> np.ndarray:
        """The series the regressors learn from, covering the training segment."""
        raw = ts.values
        n_train = self._check_split(raw.size, n_test)
        if not self.denoise:
            return raw[:n_train].copy()
        if self.mode == "paper":
            res = pssa_denoise(ts, self.pssa)
            self.pssa_info = {"m_used": res.m_used, "achieved_r": res.achieved_r, "rank": res.decomposition.rank}
            return res.denoised.values
        res = pssa_denoise(ts.with_values(raw[:n_train]), self.pssa)
        self.pssa_info = {"m_used": res.m_used, "achieved_r": res.achieved_r, "rank": res.decomposition.rank}
        return res.denoised.values

    def _check_split(self, n: int, n_test: int) -> int:
        if not 0 < n_test < n:
            raise DataError(f"n_test must satisfy 0 < n_test < {n}, got {n_test}")
        n_train = n - n_test
        need = self.span + max(self.horizons) + 1
        if n_train < need:
            raise DataError(f"training segment too short: need at least {need} values, got {n_train}")
        return n_train

    def _window(self, values: np.ndarray, origin: int) -> np.ndarray:
        return values[origin - self.span : origin + 1 : self.delay]

    def train_windows(self, series: np.ndarray, n_train: int, h: int) -> tuple[np.ndarray, np.ndarray]:
        """All windows whose target lies inside the training segment."""
        origins = np.arange(self.span, n_train - h)
        idx = origins[:, None] - self.span + self.delay * np.arange(self.window_dim)[None, :]
        return series[idx], series[origins + h]

    def test_origins(self, n: int, n_test: int, h: int) -> np.ndarray:
        """Forecast origins from the last training value up to ``n - 1 - h``."""
        return np.arange(n - n_test - 1, n - h)

    def test_windows(self, ts: TimeSeries, n_test: int, h: int, series: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        raw = ts.values
        n_train = self._check_split(raw.size, n_test)
        origins = self.test_origins(raw.size, n_test, h)
        if not self.denoise:
            X = np.stack([self._window(raw, o) for o in origins])
        elif self.mode == "paper":
            full = series if series is not None and series.size == raw.size else self._denoise(raw)
            X = np.stack([self._window(full, o) for o in origins])
        else:
            X = np.stack([self._window(self._causal_prefix(raw, o), o) for o in origins])
        return X, origins

    def _causal_prefix(self, raw: np.ndarray, origin: int) -> np.ndarray:
        key = raw[: origin + 1].tobytes()
        if key not in self._prefix_cache:
            self._prefix_cache[key] = self._denoise(raw[: origin + 1])
        return self._prefix_cache[key]

    # -- training and prediction ------------------------------------------

    def fit(self, ts: TimeSeries, n_test: int, horizons: Sequence[int] | None = None) -> np.ndarray:
        """Train the regressors (all horizons by default); returns the training series."""
        n_train = self._check_split(len(ts), n_test)
        series = self.training_series(ts, n_test)
        self.scaler = fit_scaler(series[:n_train]) if self.normalize else IDENTITY_SCALER
        scaled = transform(self.scaler, series)
        for h in horizons or self.horizons:
            if h not in self.models:
                raise ValueError(f"horizon {h} is not configured")
            self.models[h] = self._new_model(h)
            X, y = self.train_windows(scaled, n_train, h)
            cfg = replace(self.train_cfg, seed=self._seed(h))
            self.traces[h] = fit(self.models[h], (X, y), cfg)
            log.info("trained h=%d on %d windows, final loss %.4g", h, len(y), self.traces[h].losses[-1])
        return series

    def predict_test(self, ts: TimeSeries, n_test: int, series: np.ndarray | None = None) -> dict[int, Predictions]:
        raw = ts.values
        self._prefix_cache.clear()
        out = {}
        for h in self.horizons:
            X, origins = self.test_windows(ts, n_test, h, series)
            pred = inverse(self.scaler, self.models[h].predict(transform(self.scaler, X)))
            out[h] = Predictions(origins + h, raw[origins + h].copy(), pred)
        self._prefix_cache.clear()
        return out

    # -- persistence -------------------------------------------------------

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {"scaler/mean": np.array(self.scaler.mean), "scaler/std": np.array(self.scaler.std)}
        for h, model in self.models.items():
            for name, value in model.state_dict().items():
                state[f"h{h}/{name}"] = value
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        try:
            self.scaler = Scaler(float(state["scaler/mean"]), float(state["scaler/std"]))
        except KeyError as exc:
            raise ValueError("model file lacks scaler statistics") from exc
        for h, model in self.models.items():
            prefix = f"h{h}/"
            model.load_state_dict({k[len(prefix):]: v for k, v in state.items() if k.startswith(prefix)})


def build_pipeline(
    kind: ModelKind | ModelSpec = ModelKind.TCN_GRU,
    pssa: PssaConfig = PssaConfig(),
    train_cfg: TrainConfig = TrainConfig(),
    **kwargs,
) -> HorizonForecaster:
    """Untrained forecaster with one seeded sub-model per horizon."""
    spec = kind if isinstance(kind, ModelSpec) else ModelSpec(ModelKind(kind))
    return HorizonForecaster(spec, pssa, train_cfg, **kwargs)


def model_label(forecaster: HorizonForecaster) -> str:
    prefix = "P-SSA-" if forecaster.denoise else ""
    return prefix + forecaster.spec.kind.label


def run_pipeline(ts: TimeSeries, forecaster: HorizonForecaster, n_test: int = 200) -> EvalReport:
    """Denoise, split, scale, window, fit per horizon, forecast the test segment and score it.

    Scores compare de-normalized forecasts with the raw (not denoised) test values.
    """
    series = forecaster.fit(ts, n_test)
    preds = forecaster.predict_test(ts, n_test, series)
    report = EvalReport(predictions=preds, mode=forecaster.mode if forecaster.denoise else "raw")
    for h in forecaster.horizons:
        p = preds[h]
        m = evaluate(p.predicted, p.actual)
        report.rows.append(EvalRow(ts.origin_label, model_label(forecaster), h, m.mae, m.mape, m.rmse))
    return report


# -- experiment reports -----------------------------------------------------


def _fmt(v: float) -> str:
    return "FAILED" if math.isnan(v) else f"{v:.4f}"


def write_long_csv(path, rows: Sequence[EvalRow]) -> None:
    save_csv(
        path,
        {
            "site": [r.site for r in rows],
            "model": [r.model for r in rows],
            "horizon": [r.horizon for r in rows],
            "mae": [r.mae for r in rows],
            "mape_pct": [r.mape for r in rows],
            "rmse": [r.rmse for r in rows],
        },
        "%.6f",
    )


def wide_table(rows: Sequence[EvalRow], horizons: Sequence[int]) -> tuple[list[str], list[list[str]]]:
    """One row per (site, model) with MAE/MAPE/RMSE for every horizon, in first-seen order."""
    header = ["site", "model"]
    for h in horizons:
        header += [f"mae_{h}step", f"mape_pct_{h}step", f"rmse_{h}step"]
    cells: dict[tuple[str, str], dict[int, EvalRow]] = {}
    for r in rows:
        cells.setdefault((r.site, r.model), {})[r.horizon] = r
    body = []
    for (site, model), per_h in cells.items():
        line = [site, model]
        for h in horizons:
            r = per_h.get(h)
            line += ["FAILED"] * 3 if r is None else [_fmt(r.mae), _fmt(r.mape), _fmt(r.rmse)]
        body.append(line)
    return header, body


def format_text_table(rows: Sequence[EvalRow], horizons: Sequence[int], mode: str) -> str:
    header, body = wide_table(rows, horizons)
    top = ["", ""] + [f"{h}-step" for h in horizons]
    sub = ["Site", "Model"] + ["MAE", "MAPE(%)", "RMSE"] * len(horizons)
    table = [sub] + body
    widths = [max(len(r[i]) for r in table) for i in range(len(sub))]
    group_w = [sum(widths[2 + 3 * k : 5 + 3 * k]) + 4 for k in range(len(horizons))]
    lines = [f"denoising mode: {mode}"]
    lines.append(
        "  ".join([" " * widths[0], " " * widths[1]] + [t.center(w) for t, w in zip(top[2:], group_w)])
    )
    for r in table:
        lines.append("  ".join(c.ljust(widths[i]) if i < 2 else c.rjust(widths[i]) for i, c in enumerate(r)))
    return "\n".join(lines) + "\n"


@dataclass
class ExperimentResult:
    rows: list[EvalRow]
    files: list[Path]


def run_experiment(
    grid: Sequence[tuple[HorizonForecaster, TimeSeries]],
    out_dir,
    n_test: int = 200,
) -> ExperimentResult:
    """Run every (forecaster, site) cell in order and write the report set.

    Files: ``report.csv`` (site,model,horizon,mae,mape_pct,rmse), ``report_table.csv``
    and ``report.txt`` (one row per site and model), plus one
    ``pred_<site>_<model>_h<h>.csv`` (index,actual,predicted) per cell and
    horizon. A failing cell is recorded with NaN metrics and a failure status;
    the report files are rewritten after every cell.
    """
    if not grid:
        raise ValueError("experiment grid is empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    horizons = sorted({h for f, _ in grid for h in f.horizons})
    rows: list[EvalRow] = []
    files: list[Path] = []
    modes = sorted({f.mode if f.denoise else "raw" for f, _ in grid})
    for forecaster, ts in grid:
        label = model_label(forecaster)
        try:
            report = run_pipeline(ts, forecaster, n_test)
        except Exception as exc:  # keep the rest of the grid going
            log.error("cell %s/%s failed: %s", ts.origin_label, label, exc)
            nan = float("nan")
            rows += [EvalRow(ts.origin_label, label, h, nan, nan, nan, f"failed: {exc}") for h in forecaster.horizons]
        else:
            rows += report.rows
            for h, p in report.predictions.items():
                path = out / f"pred_{ts.origin_label}_{label}_h{h}.csv"
                p.to_csv(path)
                files.append(path)
        files = _write_reports(out, rows, horizons, ",".join(modes)) + [f for f in files if f.name.startswith("pred_")]
    return ExperimentResult(rows, files)


def _write_reports(out: Path, rows: list[EvalRow], horizons, mode: str) -> list[Path]:
    long_path = out / "report.csv"
    write_long_csv(long_path, rows)
    header, body = wide_table(rows, horizons)
    wide_path = out / "report_table.csv"
    save_csv(wide_path, {name: [line[i] for line in body] for i, name in enumerate(header)})
    text_path = out / "report.txt"
    text_path.write_text(format_text_table(rows, horizons, mode), encoding="utf-8")
    status = [r for r in rows if r.status != "ok"]
    fail_path = out / "failures.txt"
    if status:
        fail_path.write_text("".join(f"{r.site},{r.model},{r.horizon},{r.status}\n" for r in status), encoding="utf-8")
    return [long_path, wide_path, text_path]
