"""Command-line entry point: load a flat TOML experiment file, run it, write results.

Config keys (all optional; omitted keys take the reference-scenario defaults)::

    schema_version = 1
    mode = "stackelberg"            # stackelberg | auction | both
    output_path = "results.csv"
    output_format = "csv"           # csv | json
    emit_trace = false
    seed = 0
    runs = 500
    cell_radius = 500.0             # m
    cluster_radius = 100.0          # m
    n_counterparties = 10
    n_clusters = 10
    noise_density_dbm_hz = -174.0
    bandwidth_hz = 5e6
    gain = 1.0
    max_power_mw = 100.0
    interferer_power_mw = 100.0     # defaults to max_power_mw
    xi_r = 3e-5
    xi_d = 0.1
    beta = 20.0
    cost_low = 0.1
    cost_high = 0.5
    cache_hit = 0.3                 # or the three zipf_* keys below
    zipf_catalog_size = 10
    zipf_exponent = 0.56
    zipf_device_capacity = 3
    backhaul_cost_s = 0.1
    background_users_v = 20
    omega = 200
    buyer_selects = true
    auction_supply_mw = 100.0
    auction_initial_price = 5.0
    auction_step = 0.5
    auction_max_clocks = 100000
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import shutil
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .auction import AuctionConfig, AuctionError, AuctionOutcome
from .caching import CachingError, ZipfCatalog
from .scenario import ScenarioConfig, ScenarioError, SummaryStats, run_monte_carlo

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MODES = ("stackelberg", "auction", "both")
FORMATS = ("csv", "json")
SUMMARY_COLUMNS = ("n", "metric", "mean", "stddev", "runs")
TRACE_COLUMNS = ("clock", "price", "buyer_id", "bid", "clinch")

_AUCTION_KEYS = {
    "auction_supply_mw": "supply",
    "auction_initial_price": "initial_price",
    "auction_step": "step",
    "auction_max_clocks": "max_clocks",
}
_ZIPF_KEYS = {
    "zipf_catalog_size": "catalog_size",
    "zipf_exponent": "exponent",
    "zipf_device_capacity": "device_capacity",
}
_SCENARIO_KEYS = {f.name: f for f in fields(ScenarioConfig) if f.name not in ("auction", "cache_hit")}
_INT_KEYS = {
    "n_counterparties", "n_clusters", "background_users_v", "omega", "seed", "runs",
    "auction_max_clocks", "zipf_catalog_size", "zipf_device_capacity",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    mode: str = "stackelberg"
    config: ScenarioConfig = field(default_factory=ScenarioConfig)
    output_path: Path = Path("results.csv")
    output_format: str = "csv"
    emit_trace: bool = False

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode: expected one of {', '.join(MODES)}, got {self.mode!r}")
        if self.output_format not in FORMATS:
            raise ConfigError(
                f"output_format: expected one of {', '.join(FORMATS)}, got {self.output_format!r}"
            )
        object.__setattr__(self, "output_path", Path(self.output_path))

    @property
    def solver_modes(self) -> tuple[str, ...]:
        return ("stackelberg", "auction") if self.mode == "both" else (self.mode,)


def _coerce(key: str, value: Any) -> Any:
    if key in ("emit_trace", "buyer_selects"):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true or false, got {value!r}")
        return value
    if key in ("mode", "output_format", "output_path"):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if key in _INT_KEYS:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def spec_from_mapping(doc: dict[str, Any]) -> ExperimentSpec:
    """Build a validated ExperimentSpec from flat key-value pairs; unknown keys are errors."""
    doc = dict(doc)
    version = doc.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported version {version!r}, expected {SCHEMA_VERSION}")
    known = {"mode", "output_path", "output_format", "emit_trace", "cache_hit"}
    known |= set(_SCENARIO_KEYS) | set(_AUCTION_KEYS) | set(_ZIPF_KEYS)
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key")
    for key, value in doc.items():
        if isinstance(value, (dict, list)):
            raise ConfigError(f"{key}: nested values are not allowed in a flat config")
        doc[key] = _coerce(key, value)

    scenario_kwargs = {k: doc[k] for k in _SCENARIO_KEYS if k in doc}
    zipf = {v: doc[k] for k, v in _ZIPF_KEYS.items() if k in doc}
    if zipf and "cache_hit" in doc:
        raise ConfigError("cache_hit: give either cache_hit or the zipf_* keys, not both")
    try:
        if zipf:
            if len(zipf) != len(_ZIPF_KEYS):
                missing = sorted(k for k in _ZIPF_KEYS if _ZIPF_KEYS[k] not in zipf)
                raise ConfigError(f"{missing[0]}: required when any zipf_* key is given")
            scenario_kwargs["cache_hit"] = ZipfCatalog(**zipf)
        elif "cache_hit" in doc:
            scenario_kwargs["cache_hit"] = doc["cache_hit"]
        auction_kwargs = {v: doc[k] for k, v in _AUCTION_KEYS.items() if k in doc}
        scenario_kwargs["auction"] = AuctionConfig(**auction_kwargs)
        config = ScenarioConfig(**scenario_kwargs)
    except (ScenarioError, AuctionError, CachingError) as exc:
        raise ConfigError(str(exc)) from exc

    spec_kwargs = {k: doc[k] for k in ("mode", "output_path", "output_format", "emit_trace") if k in doc}
    return ExperimentSpec(config=config, **spec_kwargs)


def load_config(path: str | Path) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # The decoder message carries "(at line L, column C)".
        raise ConfigError(f"{path}: parse error: {exc}") from exc
    return spec_from_mapping(doc)


def spec_to_mapping(spec: ExperimentSpec) -> dict[str, Any]:
    cfg = spec.config
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "mode": spec.mode,
        "output_path": str(spec.output_path),
        "output_format": spec.output_format,
        "emit_trace": spec.emit_trace,
    }
    for key in _SCENARIO_KEYS:
        value = getattr(cfg, key)
        if value is not None:
            doc[key] = value
    if isinstance(cfg.cache_hit, ZipfCatalog):
        for key, attr in _ZIPF_KEYS.items():
            doc[key] = getattr(cfg.cache_hit, attr)
    else:
        doc["cache_hit"] = cfg.cache_hit
    for key, attr in _AUCTION_KEYS.items():
        doc[key] = getattr(cfg.auction, attr)
    return doc


def dump_config(spec: ExperimentSpec) -> str:
    return tomli_w.dumps(spec_to_mapping(spec))


def fmt(value: float) -> str:
    """12 significant digits, the precision every output file is written at."""
    if isinstance(value, int):
        return str(value)
    return f"{value:.12g}"


def _summary_records(stats: SummaryStats) -> list[dict[str, Any]]:
    return [
        {"n": n, "metric": m, "mean": mean, "stddev": std, "runs": runs}
        for n, m, mean, std, runs in stats.rows()
    ]


def write_summary(stats: SummaryStats, path: Path, output_format: str) -> None:
    records = _summary_records(stats)
    for rec in records:
        if not (math.isfinite(rec["mean"]) and math.isfinite(rec["stddev"]) and rec["stddev"] >= 0):
            raise ValueError(f"non-finite statistic in row {rec}")
    with path.open("w", encoding="utf-8", newline="") as fh:
        if output_format == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SUMMARY_COLUMNS)
            for rec in records:
                writer.writerow([fmt(rec[c]) if c in ("mean", "stddev") else rec[c] for c in SUMMARY_COLUMNS])
        else:
            rows = [
                {**rec, "mean": float(fmt(rec["mean"])), "stddev": float(fmt(rec["stddev"]))}
                for rec in records
            ]
            json.dump({"schema_version": SCHEMA_VERSION, "rows": rows}, fh, indent=2)
            fh.write("\n")


def write_trace(outcome: AuctionOutcome, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for rec in outcome.trace:
            for buyer_id, (bid, clinch) in enumerate(zip(rec.bids, rec.clinches)):
                writer.writerow([rec.clock, fmt(rec.price), buyer_id, fmt(bid), fmt(clinch)])


def trace_dir(output_path: Path) -> Path:
    return output_path.with_name(output_path.stem + "_traces")


def run_experiment(spec: ExperimentSpec) -> int:
    """Run the experiment and write its files; returns a process exit status."""
    out = spec.output_path
    traces = trace_dir(out)
    emit = spec.emit_trace and "auction" in spec.solver_modes
    created_traces = False

    def sink(n: int, run: int, outcome: AuctionOutcome) -> None:
        write_trace(outcome, traces / f"trace_n{n}_run{run}.csv")

    try:
        if emit:
            created_traces = not traces.exists()
            traces.mkdir(parents=True, exist_ok=True)
        stats = run_monte_carlo(spec.config, spec.solver_modes, sink if emit else None)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_summary(stats, out, spec.output_format)
    except (OSError, ValueError, ArithmeticError) as exc:
        log.error("experiment failed: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        out.unlink(missing_ok=True)
        if created_traces:
            shutil.rmtree(traces, ignore_errors=True)
        return 1
    log.info("wrote %s", out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="d2dmarket", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a Monte Carlo experiment")
    run.add_argument("--config", required=True, type=Path, help="flat TOML experiment file")
    run.add_argument("--seed", type=int)
    run.add_argument("--runs", type=int)
    run.add_argument("--out", type=Path, help="summary output path")
    run.add_argument("--format", choices=FORMATS)
    run.add_argument("--emit-trace", action="store_true", help="write auction clock traces")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        spec = load_config(args.config)
        overrides: dict[str, Any] = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.runs is not None:
            overrides["runs"] = args.runs
        if overrides:
            try:
                spec = replace(spec, config=replace(spec.config, **overrides))
            except ScenarioError as exc:
                raise ConfigError(str(exc)) from exc
        if args.out is not None:
            spec = replace(spec, output_path=args.out)
        if args.format is not None:
            spec = replace(spec, output_format=args.format)
        if args.emit_trace:
            spec = replace(spec, emit_trace=True)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    return run_experiment(spec)


if __name__ == "__main__":
    sys.exit(main())
