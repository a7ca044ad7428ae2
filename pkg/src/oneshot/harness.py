"""Experiment configuration, sweeps, slope fits, and report files.

A sweep runs every (estimator, machine count, repetition) cell of the
lattice with a seed packed injectively from the cell coordinates, so any
subset of cells can run anywhere, in any order, on any number of workers,
and the assembled CSV is always the same.  Rows are journaled to
``<out>.partial`` as they complete (crash-safe append); the final file is
written in canonical order and the journal removed, so an interrupted
sweep can be resumed without redoing finished cells.
"""

from __future__ import annotations

import concurrent.futures
import csv
import math
import os

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import rngs
from .baselines import avgm, naive_1d, one_bit
from .errors import ConfigError, OneshotError
from .functions import FunctionDistribution, make_distribution
from .multires import run_multires
from .results import EstimateResult
from .solver import SolverConfig

CSV_HEADER = ["estimator", "m", "n", "rep", "seed", "error",
              "bits_per_signal", "wall_time_s", "uncovered", "clamped"]

ESTIMATOR_IDS = {"multires": 0, "avgm": 1, "naive_1d": 2, "one_bit": 3}


@dataclass
class ExperimentConfig:
    distribution: dict
    estimators: list
    m_values: list
    n: int = 1
    repetitions: int = 1
    master_seed: int = 0
    polylog_factor: Optional[float] = None
    strict_split: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)
    workers: int = 1
    out: str = "sweep.csv"

    def __post_init__(self):
        if not self.estimators:
            raise ConfigError("at least one estimator is required")
        for est in self.estimators:
            if est not in ESTIMATOR_IDS:
                raise ConfigError(f"unknown estimator {est!r}; "
                                  f"expected one of {sorted(ESTIMATOR_IDS)}")
        if not self.m_values:
            raise ConfigError("m_values must be non-empty")
        if any(b <= a for a, b in zip(self.m_values, self.m_values[1:])):
            raise ConfigError("m_values must be strictly increasing")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if "kind" not in self.distribution:
            raise ConfigError("distribution spec needs a 'kind'")


def load_config(path: str) -> ExperimentConfig:
    """Read a TOML experiment file (tables: distribution, sweep, protocol,
    solver)."""
    try:
        import tomllib
    except ImportError:  # python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    dist = dict(raw.get("distribution", {}))
    sweep = dict(raw.get("sweep", {}))
    protocol = dict(raw.get("protocol", {}))
    solver_raw = dict(raw.get("solver", {}))
    try:
        solver = SolverConfig(**solver_raw)
    except TypeError as exc:
        raise ConfigError(f"bad solver table: {exc}") from None
    try:
        return ExperimentConfig(
            distribution=dist,
            estimators=list(sweep.get("estimators", [])),
            m_values=[int(v) for v in sweep.get("m_values", [])],
            n=int(sweep.get("n", 1)),
            repetitions=int(sweep.get("repetitions", 1)),
            master_seed=int(sweep.get("master_seed", 0)),
            polylog_factor=protocol.get("polylog_factor"),
            strict_split=bool(protocol.get("strict_split", False)),
            solver=solver,
            workers=int(sweep.get("workers", 1)),
            out=str(sweep.get("out", "sweep.csv")),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


@dataclass
class SweepRow:
    estimator: str
    m: int
    n: int
    rep: int
    seed: int
    error: float
    bits_per_signal: int
    wall_time_s: float
    uncovered: int
    clamped: int

    def csv_line(self) -> str:
        err = repr(float(self.error))
        return (f"{self.estimator},{self.m},{self.n},{self.rep},{self.seed},"
                f"{err},{self.bits_per_signal},{self.wall_time_s:.6f},"
                f"{self.uncovered},{self.clamped}")


def _build_distribution(spec: dict, master_seed: int, rep: int) -> FunctionDistribution:
    """Instantiate the distribution for one repetition.

    ``theta_star = "uniform"`` draws a fresh truth from [0, 1]^d for each
    repetition, from a stream that depends only on (master_seed, rep), so
    every estimator and machine count sees the same instances.
    """
    spec = dict(spec)
    kind = spec.pop("kind")
    d = int(spec.pop("d", 1))
    if spec.get("theta_star") == "uniform":
        rng = rngs.generator(master_seed, rngs.pack_fields(rngs.TAG_CONFIG, rep=rep))
        spec["theta_star"] = rng.uniform(0.0, 1.0, size=d)
    return make_distribution(kind, d, **spec)


def run_estimator(name: str, dist: FunctionDistribution, m: int, n: int,
                  rng: np.random.Generator, cfg: ExperimentConfig) -> EstimateResult:
    if name == "multires":
        return run_multires(dist, m, n, rng=rng, solver_cfg=cfg.solver,
                            polylog_factor=cfg.polylog_factor,
                            strict_split=cfg.strict_split)
    if name == "avgm":
        return avgm(dist, m, n, rng=rng, solver_cfg=cfg.solver)
    if name == "naive_1d":
        return naive_1d(dist, m, rng=rng)
    if name == "one_bit":
        return one_bit(dist, m, n, rng=rng, solver_cfg=cfg.solver)
    raise ConfigError(f"unknown estimator {name!r}")


def _run_cell(cfg: ExperimentConfig, est: str, m_idx: int, rep: int) -> SweepRow:
    m = cfg.m_values[m_idx]
    seed_id = rngs.run_seed(cfg.master_seed, ESTIMATOR_IDS[est], m_idx, rep)
    rng = rngs.generator(cfg.master_seed, seed_id)
    start = time.perf_counter()
    try:
        dist = _build_distribution(cfg.distribution, cfg.master_seed, rep)
        result = run_estimator(est, dist, m, cfg.n, rng, cfg)
        error = math.nan if result.error is None else result.error
        bits = result.bits_per_signal
        uncovered = result.diag("uncovered")
        clamped = result.diag("clamped")
    except OneshotError:
        # per-row failure record; the sweep carries on
        error, bits, uncovered, clamped = math.nan, 0, 0, 0
    wall = time.perf_counter() - start
    return SweepRow(estimator=est, m=m, n=cfg.n, rep=rep, seed=seed_id,
                    error=error, bits_per_signal=bits, wall_time_s=wall,
                    uncovered=uncovered, clamped=clamped)


def _lattice(cfg: ExperimentConfig):
    for est in cfg.estimators:
        for m_idx in range(len(cfg.m_values)):
            for rep in range(cfg.repetitions):
                yield est, m_idx, rep


def write_rows(path: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for row in rows:
            fh.write(row.csv_line() + "\n")


def read_rows(path: str) -> list:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ConfigError(f"unexpected CSV header in {path}")
        for rec in reader:
            rows.append(SweepRow(
                estimator=rec["estimator"], m=int(rec["m"]), n=int(rec["n"]),
                rep=int(rec["rep"]), seed=int(rec["seed"]),
                error=float(rec["error"]),
                bits_per_signal=int(rec["bits_per_signal"]),
                wall_time_s=float(rec["wall_time_s"]),
                uncovered=int(rec["uncovered"]), clamped=int(rec["clamped"])))
    return rows


def run_sweep(cfg: ExperimentConfig, resume: bool = False,
              progress: Optional[Callable[[SweepRow], None]] = None) -> list:
    """Run every lattice cell; returns rows in canonical order and writes
    the CSV to cfg.out."""
    journal = cfg.out + ".partial"
    done = {}
    if resume:
        for path in (cfg.out, journal):
            if os.path.exists(path):
                try:
                    for row in read_rows(path):
                        done[(row.estimator, row.m, row.rep)] = row
                except (OSError, ConfigError, ValueError):
                    pass

    cells = [(est, m_idx, rep) for est, m_idx, rep in _lattice(cfg)
             if (est, cfg.m_values[m_idx], rep) not in done]

    out_dir = os.path.dirname(os.path.abspath(cfg.out))
    os.makedirs(out_dir, exist_ok=True)
    new_rows = {}
    with open(journal, "a", newline="") as jfh:
        if jfh.tell() == 0:
            jfh.write(",".join(CSV_HEADER) + "\n")

        def finish(cell, row):
            new_rows[cell] = row
            jfh.write(row.csv_line() + "\n")
            jfh.flush()
            if progress is not None:
                progress(row)

        if cfg.workers == 1 or len(cells) <= 1:
            for cell in cells:
                finish(cell, _run_cell(cfg, *cell))
        else:
            with concurrent.futures.ThreadPoolExecutor(cfg.workers) as pool:
                futures = {pool.submit(_run_cell, cfg, *cell): cell
                           for cell in cells}
                for fut in concurrent.futures.as_completed(futures):
                    finish(futures[fut], fut.result())

    ordered = []
    for est, m_idx, rep in _lattice(cfg):
        key = (est, m_idx, rep)
        ordered.append(new_rows.get(key, done.get((est, cfg.m_values[m_idx], rep))))
    write_rows(cfg.out, ordered)
    os.remove(journal)
    return ordered


# -- statistics ----------------------------------------------------------------


_AGGREGATES = {
    "mean": np.mean,
    "median": np.median,
    "rms": lambda v: float(np.sqrt(np.mean(np.square(v)))),
}


@dataclass
class SlopeFit:
    slope: float
    stderr: float
    points: int


def fit_slope(rows, estimator: str, agg: str = "mean") -> SlopeFit:
    """Least squares of log2(aggregated error) on log2(m) for one estimator."""
    if agg not in _AGGREGATES:
        raise ConfigError(f"unknown aggregate {agg!r}")
    groups = {}
    for row in rows:
        if row.estimator == estimator and math.isfinite(row.error):
            groups.setdefault(row.m, []).append(row.error)
    if len(groups) < 3:
        raise ConfigError("need at least 3 distinct m values to fit a slope")
    ms = np.array(sorted(groups))
    vals = np.array([_AGGREGATES[agg](np.array(groups[m])) for m in ms])
    if np.any(vals <= 0):
        raise ConfigError("aggregated errors must be positive on a log scale")
    x = np.log2(ms)
    y = np.log2(vals)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ y) / sxx
    resid = y - (y.mean() + slope * xc)
    dof = len(x) - 2
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else math.inf
    return SlopeFit(slope=slope, stderr=stderr, points=len(x))


def emit_report(rows, path: str) -> dict:
    """Write raw rows, a per-(estimator, m) summary, and log-log plot data.

    Returns the mapping of artifact names to paths.
    """
    if not rows:
        raise ConfigError("no rows to report")
    stem, _ = os.path.splitext(path)
    raw_path = path
    write_rows(raw_path, rows)

    groups = {}
    for row in rows:
        groups.setdefault((row.estimator, row.m), []).append(row)
    summary_path = stem + "_summary.csv"
    with open(summary_path, "w", newline="") as fh:
        fh.write("estimator,m,n,count,mean_error,median_error,"
                 "p10_error,p90_error,mean_bits_per_signal\n")
        for (est, m), grp in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1])):
            errs = np.array([g.error for g in grp if math.isfinite(g.error)])
            if errs.size == 0:
                continue
            bits = np.mean([g.bits_per_signal for g in grp])
            fh.write(f"{est},{m},{grp[0].n},{errs.size},{errs.mean()!r},"
                     f"{np.median(errs)!r},{np.percentile(errs, 10)!r},"
                     f"{np.percentile(errs, 90)!r},{bits!r}\n")

    loglog_path = stem + "_loglog.csv"
    with open(loglog_path, "w", newline="") as fh:
        fh.write("estimator,log2_m,log2_mean_error,log2_median_error\n")
        for (est, m), grp in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1])):
            errs = np.array([g.error for g in grp if math.isfinite(g.error)])
            if errs.size == 0 or errs.mean() <= 0:
                continue
            fh.write(f"{est},{math.log2(m)!r},{math.log2(errs.mean())!r},"
                     f"{math.log2(np.median(errs))!r}\n")
    return {"raw": raw_path, "summary": summary_path, "loglog": loglog_path}
