"""``aqf`` command-line interface.

Every subcommand reads a :class:`RunConfig` assembled from an optional JSON
file (``--config``) overlaid with any flags given on the command line.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import __version__
from .aqi import AQI_MODES, composite_aqi
from .errors import AqfError, BadSpec, DataError, NumericError, UsageError
from .metrics import evaluate
from .nn import BiLstmNetwork, TrainingConfig, load_model, one_step_predictions, predict, save_model, train
from .preprocess import DEFAULT_FEATURES, DEFAULT_LOOKBACK, TARGETS, chrono_split, fit_scaler, make_windows, transform
from .stats import analysis_report
from .synth import SynthSpec, synth_generate
from .timeseries import BASE_COLUMNS, RATIO_COLUMN, clean, read_csv, to_csv

log = logging.getLogger("aqf")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by all subcommands.

    Field names double as the keys of the ``--config`` JSON file.
    """

    data: str | None = None
    model: str | None = None
    out: str | None = None
    lookback: int = DEFAULT_LOOKBACK
    features: tuple[str, ...] = DEFAULT_FEATURES
    train_fraction: float = 0.8
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    shuffle: bool = True
    threshold: float = 0.05
    aqi_mode: str = "trailing24h"

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if self.lookback < 1:
            raise BadSpec("lookback must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise BadSpec("train_fraction must lie in (0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise BadSpec("epochs and batch_size must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise BadSpec("threshold must lie in (0, 1)")
        if self.aqi_mode not in AQI_MODES:
            raise BadSpec(f"aqi_mode must be one of {AQI_MODES}")
        unknown = [f for f in self.features if f not in BASE_COLUMNS + (RATIO_COLUMN,)]
        if unknown:
            raise BadSpec(f"unknown feature columns: {unknown}")
        if not set(TARGETS) <= set(self.features):
            raise BadSpec("features must include pm25 and pm10")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise BadSpec(f"{path}: not valid JSON ({exc.msg})") from exc
        if not isinstance(doc, dict):
            raise BadSpec(f"{path}: expected a JSON object")
        known = {f.name for f in fields(cls)}
        extra = set(doc) - known
        if extra:
            raise BadSpec(f"{path}: unknown keys {sorted(extra)}")
        return cls(**doc)


# ---------------------------------------------------------------------------
# helpers


def _require(value, flag: str):
    if value is None:
        raise UsageError(f"{flag} is required for this command")
    return value


def _load_frame(cfg: RunConfig):
    frame, report = clean(read_csv(_require(cfg.data, "--data")))
    if report.total_dropped:
        log.info("dropped %d of %d rows while cleaning", report.total_dropped, report.rows_in)
    return frame, report


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
        log.info("wrote %s", path)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _nan_to_none(x):
    return None if isinstance(x, float) and x != x else x


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(cfg: RunConfig, args) -> int:
    frame, report = _load_frame(cfg)
    doc = {
        "rows_in": report.rows_in,
        "rows_out": report.rows_out,
        "dropped": report.dropped,
        "columns": list(frame.names),
        "start": str(frame.timestamps[0]),
        "end": str(frame.timestamps[-1]),
    }
    if cfg.out is not None:
        _emit(to_csv(frame), cfg.out)
    sys.stdout.write(_dump_json(doc))
    return EXIT_OK


def cmd_analyze(cfg: RunConfig, args) -> int:
    frame, _ = _load_frame(cfg)
    rep = analysis_report(frame, threshold=cfg.threshold, max_lag=args.max_lag)
    if cfg.out is None:
        sys.stdout.write(_dump_json(rep))
        return EXIT_OK
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _emit(_dump_json(rep), out / "analysis.json")

    cols = rep["correlation"]["columns"]
    rows = [[c, *(_nan_to_none(v) for v in r)] for c, r in zip(cols, rep["correlation"]["matrix"])]
    _emit(_csv_text(["column", *cols], rows), out / "correlation.csv")

    keys = ["column", "statistic", "p_value", "lags", "n_obs", "verdict", "error"]
    _emit(_csv_text(keys, [[a.get(k, "") for k in keys] for a in rep["adf"]]), out / "adf.csv")

    rows = []
    for grouping, records in rep["groups"].items():
        for r in records:
            rows.append([grouping, r["group"], r["count"], r["mean_pm25"], r["mean_pm10"]])
    _emit(_csv_text(["grouping", "group", "count", "mean_pm25", "mean_pm10"], rows), out / "groups.csv")
    return EXIT_OK


def cmd_train(cfg: RunConfig, args) -> int:
    model_path = Path(_require(cfg.model, "--model"))
    frame, _ = _load_frame(cfg)
    train_part, _ = chrono_split(frame, cfg.train_fraction)
    scaler = fit_scaler(train_part, cfg.features)
    data = make_windows(transform(scaler, train_part), cfg.lookback, cfg.features)
    net = BiLstmNetwork.build(cfg.features, cfg.lookback, seed=cfg.seed, scaler=scaler)
    tc = TrainingConfig(epochs=cfg.epochs, batch_size=cfg.batch_size, seed=cfg.seed, shuffle=cfg.shuffle)
    history = train(net, data, tc)

    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_model(net, model_path)
    log_path = Path(cfg.out) if cfg.out else model_path.with_name("training_log.csv")
    _emit(history.to_csv(timing=not args.no_timing), str(log_path))
    print(
        f"trained on {len(data)} windows ({history.steps_per_epoch} steps/epoch), "
        f"final loss {history.losses[-1]:.4e}; model -> {model_path}"
    )
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig, args) -> int:
    net = load_model(_require(cfg.model, "--model"))
    frame, _ = _load_frame(cfg)
    train_part, _ = chrono_split(frame, cfg.train_fraction)
    rows, pred, actual = one_step_predictions(net, frame)
    held_out = rows >= len(train_part)
    pred, actual = pred[held_out], actual[held_out]
    if args.scaled:
        targets = net.scaler.subset(TARGETS)
        report = evaluate(transform(targets, pred), transform(targets, actual), units="scaled")
    else:
        report = evaluate(pred, actual)
    _emit(_dump_json(report.to_dict()), cfg.out)
    return EXIT_OK


def cmd_forecast(cfg: RunConfig, args) -> int:
    net = load_model(_require(cfg.model, "--model"))
    frame, _ = _load_frame(cfg)
    fc = predict(net, frame, steps=args.steps, aqi_mode=cfg.aqi_mode)
    rows = [
        [str(t).replace("T", " "), repr(float(v[0])), repr(float(v[1])), a.composite, a.category.value, fc.aqi_mode]
        for t, v, a in zip(fc.timestamps, fc.values, fc.aqi)
    ]
    _emit(_csv_text(["timestamp", "pm25", "pm10", "aqi", "category", "aqi_mode"], rows), cfg.out)
    return EXIT_OK


def cmd_aqi(cfg: RunConfig, args) -> int:
    res = composite_aqi(args.pm25, args.pm10)
    sys.stdout.write(_dump_json(res.to_dict()))
    return EXIT_OK


def cmd_synth(cfg: RunConfig, args) -> int:
    spec = SynthSpec(rows=args.rows, seed=cfg.seed if args.seed_given else SynthSpec.seed)
    _emit(to_csv(synth_generate(spec)), cfg.out)
    return EXIT_OK


COMMANDS = {
    "validate": (cmd_validate, "parse and clean a CSV and report what was dropped"),
    "analyze": (cmd_analyze, "correlation, ADF stationarity and grouped-mean reports"),
    "train": (cmd_train, "train the Bi-LSTM forecaster and save it"),
    "evaluate": (cmd_evaluate, "score one-step forecasts on the held-out tail"),
    "forecast": (cmd_forecast, "recursive multi-hour forecast with AQI"),
    "aqi": (cmd_aqi, "AQI for a single PM2.5 / PM10 reading"),
    "synth": (cmd_synth, "write a deterministic synthetic dataset"),
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    p.add_argument("--data", default=S, help="input CSV")
    p.add_argument("--model", default=S, help="model JSON path")
    p.add_argument("--out", default=S, help="output file or directory (stdout when omitted)")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--config", default=S, help="JSON file of RunConfig fields; flags override it")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def _pipeline() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    p.add_argument("--lookback", type=int, default=S)
    p.add_argument("--features", default=S, help="comma-separated feature columns")
    p.add_argument("--train-fraction", dest="train_fraction", type=float, default=S)
    return p


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="aqf", description="Air-quality analysis and PM forecasting.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    common, pipe = _common(), _pipeline()
    ps = {}
    for name, (_, helptext) in COMMANDS.items():
        parents = [common, pipe] if name in ("train", "evaluate") else [common]
        ps[name] = sub.add_parser(name, parents=parents, help=helptext, description=helptext)

    ps["analyze"].add_argument("--threshold", type=float, default=S)
    ps["analyze"].add_argument("--max-lag", dest="max_lag", type=int, default=None)
    ps["train"].add_argument("--epochs", type=int, default=S)
    ps["train"].add_argument("--batch-size", dest="batch_size", type=int, default=S)
    ps["train"].add_argument("--no-shuffle", dest="shuffle", action="store_false", default=S)
    ps["train"].add_argument("--no-timing", action="store_true", help="omit the seconds column from the log")
    ps["evaluate"].add_argument("--scaled", action="store_true", help="score in [0, 1] scaled units")
    ps["forecast"].add_argument("--steps", type=int, default=24)
    ps["forecast"].add_argument("--aqi-mode", dest="aqi_mode", choices=AQI_MODES, default=S)
    ps["aqi"].add_argument("--pm25", type=float, required=True)
    ps["aqi"].add_argument("--pm10", type=float, required=True)
    ps["synth"].add_argument("--rows", type=int, default=SynthSpec.rows)
    return parser


_CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge the optional JSON config with explicitly given flags."""
    ns = vars(args)
    base = RunConfig.from_file(ns["config"]) if "config" in ns else RunConfig()
    overrides = {k: v for k, v in ns.items() if k in _CONFIG_KEYS}
    if isinstance(overrides.get("features"), str):
        overrides["features"] = tuple(s.strip() for s in overrides["features"].split(",") if s.strip())
    return replace(base, **overrides)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    args.seed_given = "seed" in vars(args)
    func, _ = COMMANDS[args.command]
    try:
        cfg = resolve_config(args)
        return func(cfg, args)
    except UsageError as exc:
        print(f"aqf {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"aqf {args.command}: data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"aqf {args.command}: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except AqfError as exc:
        print(f"aqf {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
