"""Command-line interface.

Subcommands: ``run`` (one estimator instance), ``sweep`` (full experiment
lattice), ``report`` (summaries and plot data from a rows CSV),
``codec dump`` (bit-level signal decomposition), ``selfcheck`` (invariant
suite).  Errors exit nonzero with a single machine-readable line on
stderr: ``error: {"type": ..., "message": ...}``.
"""

from __future__ import annotations

import functools
import json
import sys

import click
import numpy as np

from . import rngs
from ._backend import kernel_backend
from .codec import EncodedSignal, budget_report, dump_fields, encode
from .errors import OneshotError
from .harness import (ExperimentConfig, config_from_dict, emit_report,
                      fit_slope, load_config, read_rows, run_estimator,
                      run_sweep, _build_distribution)
from .multigrid import compute_params, sample_level, sample_point
from .codec import Signal, quantizer_for_level
from . import selfcheck as selfcheck_mod


def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except OneshotError as exc:
            line = json.dumps({"type": type(exc).__name__, "message": str(exc)})
            click.echo(f"error: {line}", err=True)
            sys.exit(1)
    return wrapper


@click.group()
def main():
    """One-shot distributed optimization simulator."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True,
              help="TOML experiment file providing the distribution and solver.")
@click.option("--estimator", required=True,
              type=click.Choice(["multires", "avgm", "naive_1d", "one_bit"]))
@click.option("--m", "m", type=int, required=True, help="Number of machines.")
@click.option("--n", "n", type=int, default=None, help="Samples per machine.")
@click.option("--seed", type=int, default=None, help="Master seed override.")
@_guard
def run(config_path, estimator, m, n, seed):
    """Run a single estimator instance and print its result as JSON."""
    cfg = load_config(config_path)
    if seed is not None:
        cfg.master_seed = seed
    if n is not None:
        cfg.n = n
    dist = _build_distribution(cfg.distribution, cfg.master_seed, rep=0)
    rng = rngs.generator(cfg.master_seed, rngs.run_seed(cfg.master_seed, 0, 0, 0))
    result = run_estimator(estimator, dist, m, cfg.n, rng, cfg)
    click.echo(json.dumps({
        "estimator": result.estimator,
        "m": result.m,
        "n": result.n,
        "theta_hat": [float(v) for v in np.atleast_1d(result.theta_hat)],
        "error": result.error,
        "total_bits": result.total_bits,
        "bits_per_signal": result.bits_per_signal,
        "diagnostics": {k: (v if isinstance(v, (int, float, str)) else str(v))
                        for k, v in result.diagnostics.items()},
        "kernel_backend": kernel_backend(),
    }))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None, help="Master seed override.")
@click.option("--workers", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--resume", is_flag=True, default=False,
              help="Skip cells already present in the output or journal.")
@_guard
def sweep(config_path, seed, workers, out, resume):
    """Run the full (estimator, m, repetition) lattice of an experiment."""
    cfg = load_config(config_path)
    if seed is not None:
        cfg.master_seed = seed
    if workers is not None:
        cfg.workers = workers
    if out is not None:
        cfg.out = out
    rows = run_sweep(cfg, resume=resume)
    click.echo(f"wrote {len(rows)} rows to {cfg.out}")


@main.command()
@click.argument("rows_csv", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None,
              help="Report path stem (default: alongside the input).")
@click.option("--slope", "slopes", multiple=True,
              help="Also fit log-log slopes for the named estimators.")
@_guard
def report(rows_csv, out, slopes):
    """Summaries and log-log plot data from a sweep CSV."""
    rows = read_rows(rows_csv)
    paths = emit_report(rows, out or rows_csv)
    for name, path in paths.items():
        click.echo(f"{name}: {path}")
    for est in slopes:
        fit = fit_slope(rows, est)
        click.echo(f"slope[{est}]: {fit.slope:.4f} +- {fit.stderr:.4f}")


@main.group()
def codec():
    """Wire-format inspection tools."""


@codec.command()
@click.option("--d", type=int, default=1)
@click.option("--m", type=int, default=10_000)
@click.option("--n", type=int, default=1)
@click.option("--polylog-factor", type=float, default=None)
@click.option("--hex", "hex_bits", type=str, default=None,
              help="Signal as <hexbytes>:<bit_length>; default draws one at random.")
@click.option("--seed", type=int, default=0)
@_guard
def dump(d, m, n, polylog_factor, hex_bits, seed):
    """Print a signal's field decomposition bit by bit."""
    params = compute_params(d, m, n, polylog_factor)
    if hex_bits is not None:
        payload, _, blen = hex_bits.partition(":")
        enc = EncodedSignal(bits=bytes.fromhex(payload), bit_length=int(blen))
    else:
        from .codec import layout

        lay = layout(params)
        rng = rngs.generator(seed)
        level = sample_level(rng, params)
        addr = sample_point(rng, params, level)
        spec = quantizer_for_level(params, level)
        sig = Signal(s_index=tuple(int(v) for v in rng.integers(0, lay.n_axis, size=d)),
                     addr=addr,
                     delta_q=tuple(int(v) for v in rng.integers(0, spec.steps, size=d)))
        enc = encode(sig, params)
    click.echo(f"bit_length={enc.bit_length} bytes={enc.bits.hex()}")
    for name, width, value in dump_fields(enc, params):
        click.echo(f"  {name:<12} width={width:<3} value={value}")
    rep = budget_report(params)
    click.echo(f"per-level bits: {rep['per_level_bits']} "
               f"(budget constant c={rep['c']:.3f} over d*ceil(log2(mn))={rep['nominal_bits']})")


@main.command()
@click.option("--fast", is_flag=True, default=False, help="Smaller sample sizes.")
@_guard
def selfcheck(fast):
    """Run the invariant suite and report one line per check."""
    results = selfcheck_mod.run_all(fast=fast)
    failed = 0
    for name, ok, detail in results:
        status = "ok " if ok else "FAIL"
        click.echo(f"[{status}] {name}" + (f" ({detail})" if detail else ""))
        failed += 0 if ok else 1
    click.echo(f"kernel backend: {kernel_backend()}")
    if failed:
        click.echo(f"error: {json.dumps({'type': 'SelfcheckFailure', 'message': f'{failed} checks failed'})}",
                   err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
