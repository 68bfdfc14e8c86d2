"""Seeded Monte-Carlo sweeps over SNR, RF chains or fronthaul capacity.

A run is described by an :class:`ExperimentConfig` (usually loaded from
JSON), executed trial by trial, and written out as a raw CSV with one row
per (scheme, sweep value, trial), an aggregate CSV with per-point means and
standard errors, and a JSON metadata file.

Every trial draws its channel from ``(seed, trial)`` only, so all sweep
values and schemes of one trial see the same channel, and rows do not
depend on execution order or on the number of workers.
"""

import csv
import dataclasses
import datetime
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata

import jsonschema
import numpy as np

from . import channel, model
from .baselines import fully_digital, random_rf
from .exceptions import InvalidParameterError
from .optimizer import OptimizerOptions, joint_optimize
from .subsolver import SolveOptions

SCHEMES = ("proposed", "random_rf", "fully_digital")
SWEEP_AXES = ("snr_db", "rf_chains", "fronthaul")
RAW_HEADER = ("scheme", "sweep_value", "trial", "seed", "sum_rate", "iterations", "wall_ms", "max_violation")
AGG_HEADER = ("scheme", "sweep_value", "mean", "se", "n")
THREADS_ENV = "CRAN_HBF_THREADS"
SIG_DIGITS = 9

_NUM = {"type": "number"}
_NUM_OR_LIST = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 1}]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["sweep", "values"],
    "properties": {
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_rrh": {"type": "integer", "minimum": 1},
                "n_ue": {"type": "integer", "minimum": 1},
                "n_ant": {"type": "integer", "minimum": 1},
                "n_rf": {"type": "integer", "minimum": 1},
                "power": _NUM_OR_LIST,
                "capacity": _NUM_OR_LIST,
                "weights": {"oneOf": [{"type": "null"}, _NUM_OR_LIST]},
            },
        },
        "sweep": {"enum": list(SWEEP_AXES)},
        "values": {"type": "array", "items": _NUM, "minItems": 1},
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "schemes": {"type": "array", "items": {"enum": list(SCHEMES)}, "minItems": 1, "uniqueItems": True},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "conv_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_inner_iters": {"type": "integer", "minimum": 1},
                "max_outer_rounds": {"type": "integer", "minimum": 1},
                "rho": {"type": "number", "minimum": 0},
                "subsolver": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "kkt_tol": {"type": "number", "exclusiveMinimum": 0},
                        "barrier_mu": {"type": "number", "exclusiveMinimum": 1},
                        "barrier_t0": {"type": "number", "exclusiveMinimum": 0},
                        "max_newton_iters": {"type": "integer", "minimum": 1},
                    },
                },
            },
        },
        "record_timing": {"type": "boolean"},
    },
}

META_SCHEMA = {
    "type": "object",
    "required": ["config", "version", "timestamp", "rows", "errors"],
    "properties": {
        "config": CONFIG_SCHEMA,
        "version": {"type": "string"},
        "timestamp": {"type": "string"},
        "rows": {"type": "integer", "minimum": 0},
        "errors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["scheme", "sweep_value", "trial", "message"],
                "properties": {
                    "scheme": {"enum": list(SCHEMES)},
                    "sweep_value": _NUM,
                    "trial": {"type": "integer"},
                    "message": {"type": "string"},
                },
            },
        },
    },
}


def _round_sig(x, digits=SIG_DIGITS):
    """Round to ``digits`` significant digits (what the CSV stores)."""
    x = float(x)
    if not math.isfinite(x) or x == 0.0:
        return x
    return float(format(x, f".{digits - 1}e"))


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, f".{SIG_DIGITS}g")


@dataclass
class ExperimentConfig:
    """Declarative description of one sweep.

    ``scenario`` holds :class:`SystemConfig` fields; the swept field is
    overridden per sweep value (``snr_db`` sets every power budget to
    ``10**(v/10)``).  ``record_timing=False`` writes NaN wall times so that
    the raw CSV is byte-identical across runs.
    """

    scenario: dict = field(default_factory=dict)
    sweep: str = "snr_db"
    values: list = field(default_factory=lambda: [0.0])
    trials: int = 1
    seed: int = 0
    schemes: list = field(default_factory=lambda: list(SCHEMES))
    solver: OptimizerOptions = field(default_factory=OptimizerOptions)
    record_timing: bool = False

    def __post_init__(self):
        if isinstance(self.solver, dict):
            self.solver = OptimizerOptions(**self.solver)
        if self.sweep not in SWEEP_AXES:
            raise InvalidParameterError(f"sweep must be one of {SWEEP_AXES}, got {self.sweep!r}")
        if int(self.trials) < 1:
            raise InvalidParameterError("trials must be >= 1")
        if not self.values:
            raise InvalidParameterError("values must not be empty")
        self.values = [float(v) for v in self.values]
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise InvalidParameterError("sweep values must be strictly increasing")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown or not self.schemes:
            raise InvalidParameterError(f"unknown schemes {sorted(unknown)}; choose from {SCHEMES}")
        self.schemes = [s for s in SCHEMES if s in self.schemes]
        base = self.base_system()
        if self.sweep == "rf_chains":
            for v in self.values:
                if v != int(v) or not 1 <= v <= base.n_ant:
                    raise InvalidParameterError(f"rf_chains value {v} must be an integer in [1, {base.n_ant}]")
        if self.sweep == "fronthaul" and min(self.values) <= 0:
            raise InvalidParameterError("fronthaul capacities must be positive")
        for v in self.values:
            self.system(v)

    def base_system(self):
        return model.SystemConfig(**self.scenario)

    def system(self, value):
        """SystemConfig at one sweep value."""
        if self.sweep == "snr_db":
            return self.base_system().replace(power=snr_to_power(value, self.base_system()))
        if self.sweep == "rf_chains":
            return self.base_system().replace(n_rf=int(value))
        return self.base_system().replace(capacity=float(value))

    def to_dict(self):
        solver = dataclasses.asdict(self.solver)
        scenario = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.scenario.items()}
        return {"scenario": scenario, "sweep": self.sweep, "values": list(self.values),
                "trials": int(self.trials), "seed": int(self.seed), "schemes": list(self.schemes),
                "solver": solver, "record_timing": bool(self.record_timing)}

    @classmethod
    def from_dict(cls, data):
        """Validate against :data:`CONFIG_SCHEMA` and build the config.

        Raises jsonschema.ValidationError or InvalidParameterError.
        """
        jsonschema.validate(data, CONFIG_SCHEMA)
        data = dict(data)
        solver = dict(data.pop("solver", {}))
        if "subsolver" in solver:
            solver["subsolver"] = SolveOptions(**solver["subsolver"])
        return cls(solver=OptimizerOptions(**solver), **data)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class Row:
    scheme: str
    sweep_value: float
    trial: int
    seed: int
    sum_rate: float
    iterations: int
    wall_ms: float
    max_violation: float

    @property
    def key(self):
        return (SCHEMES.index(self.scheme), self.sweep_value, self.trial)

    @property
    def is_error(self):
        return math.isnan(self.sum_rate)


@dataclass
class ResultTable:
    """Rows sorted by (scheme, sweep value, trial), plus per-row error messages."""

    rows: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: r.key)
        keys = [r.key for r in self.rows]
        if len(set(keys)) != len(keys):
            raise InvalidParameterError("duplicate (scheme, sweep_value, trial) rows")

    def __len__(self):
        return len(self.rows)

    def select(self, scheme, value=None):
        return [r for r in self.rows if r.scheme == scheme and (value is None or r.sweep_value == value)]

    def equals(self, other):
        """Row-wise equality treating NaN as equal to NaN."""
        if len(self.rows) != len(other.rows):
            return False
        for a, b in zip(self.rows, other.rows):
            for x, y in zip(dataclasses.astuple(a), dataclasses.astuple(b)):
                if x != y and not (isinstance(x, float) and isinstance(y, float) and math.isnan(x) and math.isnan(y)):
                    return False
        return True


def snr_to_power(snr_db, cfg=None):
    """Per-RRH power budget 10^(snr_db/10) over unit noise, one entry per RRH."""
    n = 1 if cfg is None else cfg.n_rrh
    return np.full(n, 10.0 ** (float(snr_db) / 10.0))


def _run_scheme(scheme, h, system, opts, seed, trial):
    rf_init = channel.rf_stream(seed, trial)
    if scheme == "proposed":
        _, _, report = joint_optimize(h, system, opts, rng=rf_init)
    elif scheme == "random_rf":
        _, _, report = random_rf(h, system, opts, rng=rf_init)
    else:
        _, report = fully_digital(h, system, opts)
    return report


def _make_row(scheme, value, trial, seed, report, record_timing):
    return Row(scheme, _round_sig(value), int(trial), int(seed), _round_sig(max(report.sum_rate, 0.0)),
               int(report.iterations), _round_sig(report.wall_ms) if record_timing else math.nan,
               _round_sig(report.max_violation))


def _error_row(scheme, value, trial, seed):
    return Row(scheme, _round_sig(value), int(trial), int(seed), math.nan, -1, math.nan, math.nan)


def run_trial(cfg, trial):
    """All (scheme, value) rows of one trial; returns (rows, errors)."""
    base = cfg.base_system()
    h = channel.draw_channel(base.n_ue, base.n_rrh, base.n_ant, cfg.seed, trial)
    rows, errors = [], []
    cached_fd = None
    for scheme in cfg.schemes:
        for value in cfg.values:
            system = cfg.system(value)
            try:
                if scheme == "fully_digital" and cfg.sweep == "rf_chains":
                    # the fully digital design does not depend on the number of RF chains
                    if cached_fd is None:
                        cached_fd = _run_scheme(scheme, h, system, cfg.solver, cfg.seed, trial)
                    report = cached_fd
                else:
                    report = _run_scheme(scheme, h, system, cfg.solver, cfg.seed, trial)
                rows.append(_make_row(scheme, value, trial, cfg.seed, report, cfg.record_timing))
            except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
                rows.append(_error_row(scheme, value, trial, cfg.seed))
                errors.append({"scheme": scheme, "sweep_value": _round_sig(value), "trial": int(trial),
                               "message": f"{type(exc).__name__}: {exc}"})
    return rows, errors


def resolve_threads(threads=None):
    """Worker count: explicit argument, else the environment variable, else 1."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError as exc:
                raise InvalidParameterError(f"{THREADS_ENV}={env!r} is not an integer") from exc
        else:
            threads = 1
    if int(threads) < 1:
        raise InvalidParameterError("thread count must be >= 1")
    return int(threads)


def run_experiment(cfg, threads=None):
    """Run every trial of ``cfg`` and collect a :class:`ResultTable`."""
    threads = resolve_threads(threads)
    trials = range(int(cfg.trials))
    if threads == 1:
        results = [run_trial(cfg, t) for t in trials]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_trial, [cfg] * len(trials), trials))
    rows = [r for rows, _ in results for r in rows]
    errors = [e for _, errs in results for e in errs]
    errors.sort(key=lambda e: (SCHEMES.index(e["scheme"]), e["sweep_value"], e["trial"]))
    return ResultTable(rows, errors)


@dataclass(frozen=True)
class Aggregate:
    scheme: str
    sweep_value: float
    mean: float
    se: float
    n: int
    n_errors: int = 0


def aggregate(table):
    """Mean and standard error of the sum-rate per (scheme, sweep value).

    Error rows are excluded and counted in ``n_errors``; a group with only
    error rows is omitted with a warning.  The standard error uses the
    unbiased sample variance and is 0 for a single trial.
    """
    if not len(table):
        raise InvalidParameterError("cannot aggregate an empty table")
    groups = {}
    for row in table.rows:
        groups.setdefault((row.scheme, row.sweep_value), []).append(row)
    out = []
    for (scheme, value), rows in sorted(groups.items(), key=lambda kv: (SCHEMES.index(kv[0][0]), kv[0][1])):
        good = np.array([r.sum_rate for r in rows if not r.is_error])
        n_err = len(rows) - good.size
        if good.size == 0:
            warnings.warn(f"all {n_err} rows of {scheme} at {value} failed; group omitted")
            continue
        se = float(np.std(good, ddof=1) / np.sqrt(good.size)) if good.size > 1 else 0.0
        out.append(Aggregate(scheme, value, float(np.mean(good)), se, int(good.size), n_err))
    return out


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def emit(table, aggregates, prefix, cfg=None):
    """Write ``<prefix>_raw.csv``, ``<prefix>_agg.csv`` and ``<prefix>_meta.json``.

    Returns the three paths.  I/O failures are re-raised as OSError naming
    the offending path.
    """
    paths = {k: f"{prefix}_{k}" for k in ("raw.csv", "agg.csv", "meta.json")}
    meta = {"config": cfg.to_dict() if cfg is not None else {}, "version": _version(),
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "rows": len(table), "errors": list(table.errors)}
    if cfg is not None:
        jsonschema.validate(meta, META_SCHEMA)
    try:
        path = paths["raw.csv"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RAW_HEADER)
            for r in table.rows:
                writer.writerow([r.scheme, _fmt(r.sweep_value), r.trial, r.seed, _fmt(r.sum_rate),
                                 r.iterations, _fmt(r.wall_ms), _fmt(r.max_violation)])
        path = paths["agg.csv"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(AGG_HEADER)
            for a in aggregates:
                writer.writerow([a.scheme, _fmt(a.sweep_value), _fmt(a.mean), _fmt(a.se), a.n])
        path = paths["meta.json"]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return paths["raw.csv"], paths["agg.csv"], paths["meta.json"]


def read_raw(path):
    """Parse a raw CSV written by :func:`emit` back into a :class:`ResultTable`."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RAW_HEADER:
            raise InvalidParameterError(f"{path}: unexpected header {reader.fieldnames}")
        rows = [Row(d["scheme"], float(d["sweep_value"]), int(d["trial"]), int(d["seed"]), float(d["sum_rate"]),
                    int(d["iterations"]), float(d["wall_ms"]), float(d["max_violation"])) for d in reader]
    return ResultTable(rows)
