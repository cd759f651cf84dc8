"""Batch command line interface.

Subcommands: ``estimate`` (prices CSV to realized series, correlation and
summary artifacts), ``price`` (closed-form swap pricing from JSON configs),
``simulate`` (Monte Carlo estimate; ``--seed`` is mandatory, there is no
hidden entropy), ``calibrate`` (NLS fit to a realized series) and ``report``
(fitted-vs-realized plot plus the RMSE/APE/AAE/ARPE table).

Every command is deterministic given inputs, flags and seed, and writes
exactly one ``run_manifest.json`` (command, config paths, input hashes,
seed, tool version, timestamp) into its output directory; set
SOURCE_DATE_EPOCH to pin the timestamp for byte-identical reruns.

Exit codes: 0 success, 2 input validation, 3 numerical failure (including
calibration non-convergence), 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .bns import expected_realized_variance_bns, price_swap_bns
from .calibrate import (
    CalibrationProblem,
    default_bounds,
    error_metrics,
    fit,
    initial_guess,
    model_curve,
    param_names,
)
from .core import (
    BnsPortfolioParams,
    SwapContract,
    validate_correlation,
)
from .errors import (
    GenvarswapError,
    NumericalError,
    ParseError,
    ValidationError,
)
from .heston import HestonPortfolio, expected_realized_variance, price_swap
from .marketdata import (
    estimate_correlation,
    load_prices,
    load_realized_csv,
    log_returns,
    realized_to_csv,
    rolling_determinants,
    summary_stats,
    summary_to_csv,
)
from .montecarlo import (
    SimConfig,
    bns_realized_variance_mc,
    ensemble_to_csv,
    heston_realized_variance_mc,
    simulate_bns,
    simulate_heston,
)
from .svgplot import grouped_histogram, heatmap, line_chart

__all__ = ["RunManifest", "main"]


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record written once per output directory."""

    command: str
    config: dict
    input_hashes: dict
    seed: int | None
    version: str
    timestamp: str

    @classmethod
    def build(cls, command: str, inputs: dict, seed: int | None = None) -> "RunManifest":
        hashes = {}
        for name, path in inputs.items():
            digest = hashlib.sha256()
            with open(path, "rb") as fh:
                digest.update(fh.read())
            hashes[name] = digest.hexdigest()
        epoch = int(os.environ.get("SOURCE_DATE_EPOCH", time.time()))
        stamp = datetime.datetime.fromtimestamp(epoch, datetime.timezone.utc).isoformat()
        return cls(
            command=command,
            config={name: str(path) for name, path in inputs.items()},
            input_hashes=hashes,
            seed=seed,
            version=__version__,
            timestamp=stamp,
        )

    def write(self, out_dir: str) -> None:
        payload = {
            "command": self.command,
            "config": self.config,
            "input_hashes": self.input_hashes,
            "seed": self.seed,
            "version": self.version,
            "timestamp": self.timestamp,
        }
        with open(os.path.join(out_dir, "run_manifest.json"), "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _ensure_out(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None


def _load_model(path: str):
    """Read a model document; returns ('heston', HestonPortfolio) or ('bns', (params, corr))."""
    doc = _load_json(path)
    kind = doc.get("model")
    if kind == "heston":
        return kind, HestonPortfolio.from_dict(doc)
    if kind == "bns":
        corr = validate_correlation(np.asarray(doc["correlation"], dtype=float))
        return kind, (BnsPortfolioParams.from_dict(doc), corr)
    raise ValidationError(f"{path}: model must be 'heston' or 'bns', got {kind!r}")


def _load_correlation_csv(path: str):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ParseError(f"{path}: expected a ticker header plus matrix rows")
    tickers = [c.strip() for c in rows[0]]
    try:
        matrix = np.array([[float(c) for c in row] for row in rows[1:]])
    except ValueError:
        raise ParseError(f"{path}: matrix entries must be numbers") from None
    if matrix.shape != (len(tickers), len(tickers)):
        raise ParseError(f"{path}: matrix shape {matrix.shape} does not match header")
    return tickers, validate_correlation(matrix)


def _write_correlation_csv(path: str, tickers, corr) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(tickers)
        for row in corr.c:
            writer.writerow([f"{x:.17g}" for x in row])


# estimate


def cmd_estimate(args) -> int:
    out = _ensure_out(args.out)
    ps = load_prices(args.prices)
    returns = log_returns(ps)
    series = rolling_determinants(
        returns,
        window=args.window,
        annualization=args.annualization,
        rolling=args.rolling,
    )
    corr = estimate_correlation(returns)
    cumulative = np.cumsum(returns, axis=0)
    summaries = summary_stats(cumulative, ps.tickers)

    realized_to_csv(series, os.path.join(out, "realized.csv"))
    _write_correlation_csv(os.path.join(out, "correlation.csv"), ps.tickers, corr)
    summary_to_csv(summaries, os.path.join(out, "summary.csv"))

    grouped_histogram(
        os.path.join(out, "histogram.svg"),
        {t: returns[:, i] for i, t in enumerate(ps.tickers)},
        title="Daily log returns",
        xlabel="log return",
    )
    heatmap(
        os.path.join(out, "correlation.svg"),
        corr.c,
        ps.tickers,
        title="Return correlation",
    )
    day_grid = np.arange(1, returns.shape[0] + 1) / args.annualization
    line_chart(
        os.path.join(out, "cumulative.svg"),
        {t: (day_grid, cumulative[:, i]) for i, t in enumerate(ps.tickers)},
        title="Cumulative log returns",
        ylabel="cumulative log return",
    )
    RunManifest.build("estimate", {"prices": args.prices}).write(out)

    mode = "rolling" if args.rolling else "blocked"
    print(f"rows: {len(ps.dates)} (dropped {ps.dropped_rows})")
    print(f"windows: {series.n_windows} ({mode}, window={args.window})")
    print(f"|C| = {corr.det_c:.6g}")
    print(f"wrote realized.csv, correlation.csv, summary.csv and 3 SVGs to {out}")
    return 0


# price


def cmd_price(args) -> int:
    kind, model = _load_model(args.model)
    contract = SwapContract.from_dict(_load_json(args.contract))
    if kind == "heston":
        ev = expected_realized_variance(contract.maturity, model)
        price = price_swap(ev, contract)
    else:
        portfolio, corr = model
        ev = expected_realized_variance_bns(contract.maturity, portfolio, corr)
        price = price_swap_bns(ev, contract)

    header = f"{'model':<8} {'maturity':>9} {'E[sigma_R^2]':>14} {'k_var':>12} {'price':>14}"
    row = f"{kind:<8} {contract.maturity:>9.4f} {ev:>14.6e} {contract.k_var:>12.6e} {price:>14.6e}"
    print(header)
    print(row)
    if args.out:
        out = _ensure_out(args.out)
        with open(os.path.join(out, "price.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model", "maturity", "expected_realized_variance", "k_var", "price"])
            writer.writerow(
                [kind, f"{contract.maturity:.12g}", f"{ev:.17g}", f"{contract.k_var:.17g}", f"{price:.17g}"]
            )
        RunManifest.build(
            "price", {"model": args.model, "contract": args.contract}
        ).write(out)
    return 0


# simulate


def cmd_simulate(args) -> int:
    out = _ensure_out(args.out)
    kind, model = _load_model(args.model)
    sim_doc = _load_json(args.sim)
    record = sim_doc.get("record_times")
    cfg = SimConfig(
        n_paths=int(sim_doc["n_paths"]),
        dt=float(sim_doc["dt"]),
        horizon=float(sim_doc["horizon"]),
        seed=args.seed,
        scheme=sim_doc.get("scheme", "auto"),
        record_times=tuple(record) if record is not None else None,
        block_size=int(sim_doc.get("block_size", 4096)),
    )
    if kind == "heston":
        estimate = heston_realized_variance_mc(model, cfg, threads=args.threads)
    else:
        portfolio, corr = model
        estimate = bns_realized_variance_mc(portfolio, corr, cfg, threads=args.threads)

    with open(os.path.join(out, "mc_estimate.json"), "w") as fh:
        json.dump(estimate.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.paths_csv:
        if kind == "heston":
            ensemble = simulate_heston(model, cfg)
        else:
            ensemble = simulate_bns(model[0], cfg)
        ensemble_to_csv(ensemble, os.path.join(out, "paths.csv"))
    RunManifest.build(
        "simulate", {"model": args.model, "sim": args.sim}, seed=args.seed
    ).write(out)
    print(
        f"E[sigma_R^2] ~ {estimate.mean:.6e} +/- {estimate.std_error:.2e} "
        f"({estimate.n_paths} paths)"
    )
    return 0


# calibrate


def cmd_calibrate(args) -> int:
    out = _ensure_out(args.out)
    series = load_realized_csv(args.realized)
    _, corr = _load_correlation_csv(args.correlation)

    if args.init:
        init_doc = _load_json(args.init)
        initial = np.asarray(init_doc["initial"], dtype=float)
        raw_bounds = init_doc.get("bounds")
        if raw_bounds is None:
            bounds = default_bounds(args.model)
        else:
            bounds = tuple(
                (
                    -np.inf if lo is None else float(lo),
                    np.inf if hi is None else float(hi),
                )
                for lo, hi in raw_bounds
            )
    else:
        initial = initial_guess(args.model, series, corr)
        bounds = default_bounds(args.model)

    problem = CalibrationProblem(
        model=args.model, observed=series, corr=corr, initial=initial, bounds=bounds
    )
    result = fit(problem)

    payload = {
        "model": args.model,
        "param_names": list(param_names(args.model)),
        "correlation": corr.c.tolist(),
        **result.to_dict(),
    }
    with open(os.path.join(out, "result.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    RunManifest.build(
        "calibrate", {"realized": args.realized, "correlation": args.correlation}
    ).write(out)

    m = result.metrics
    print(f"converged: {result.converged} after {result.iterations} iterations")
    print(f"sse: {result.sse:.6e}")
    print(f"RMSE {m.rmse:.6e}  APE {m.ape:.6e}  AAE {m.aae:.6e}  ARPE {m.arpe:.6e}")
    if not result.converged:
        print("calibration did not converge; result.json holds the best point", file=sys.stderr)
        return 3
    return 0


# report


def cmd_report(args) -> int:
    out = _ensure_out(args.out)
    series = load_realized_csv(args.realized)

    loaded = []
    inputs = {"realized": args.realized}
    for idx, path in enumerate(args.result):
        if not os.path.exists(path):
            print(f"warning: result file {path} not found, skipping", file=sys.stderr)
            continue
        doc = _load_json(path)
        corr = validate_correlation(np.asarray(doc["correlation"], dtype=float))
        curve = model_curve(doc["model"], np.asarray(doc["params"], dtype=float), corr, series.times)
        metrics = error_metrics(series.values, curve)
        loaded.append((doc["model"], curve, metrics))
        inputs[f"result_{idx + 1}"] = path
    if not loaded:
        raise FileNotFoundError("no result files could be read")

    line_chart(
        os.path.join(out, "fitted_vs_realized.svg"),
        {f"{model} fit": (series.times, curve) for model, curve, _ in loaded},
        points={"realized": (series.times, series.values)},
        title="Realized vs fitted generalized variance",
        ylabel="E[sigma_R^2]",
    )
    header = f"{'model':<8} {'RMSE':>12} {'APE':>12} {'AAE':>12} {'ARPE':>12}"
    print(header)
    with open(os.path.join(out, "metrics.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "RMSE", "APE", "AAE", "ARPE"])
        for model, _, m in loaded:
            writer.writerow(
                [model, f"{m.rmse:.12g}", f"{m.ape:.12g}", f"{m.aae:.12g}", f"{m.arpe:.12g}"]
            )
            print(f"{model:<8} {m.rmse:>12.6e} {m.ape:>12.6e} {m.aae:>12.6e} {m.arpe:>12.6e}")
    RunManifest.build("report", inputs).write(out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genvarswap",
        description="Multivariate variance swaps on the covariance determinant: "
        "estimation, pricing, simulation, calibration, reporting.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="prices CSV -> realized series, correlation, summaries, plots")
    p.add_argument("prices", help="CSV with header date,<ticker1>,<ticker2>,...")
    p.add_argument("--window", type=int, default=10, help="window length in trading days (default 10)")
    p.add_argument("--rolling", action="store_true", help="advance windows by one day instead of blocking")
    p.add_argument("--annualization", type=int, default=252, help="trading days per year (default 252)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("price", help="closed-form swap price from model/contract JSON")
    p.add_argument("--model", required=True, help="model JSON document")
    p.add_argument("--contract", required=True, help="contract JSON document")
    p.add_argument("--out", help="optional output directory for price.csv")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of E[sigma_R^2]")
    p.add_argument("--model", required=True, help="model JSON document")
    p.add_argument("--sim", required=True, help="simulation JSON: n_paths, dt, horizon, ...")
    p.add_argument("--seed", required=True, type=int, help="RNG seed (required; no hidden entropy)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads")
    p.add_argument("--paths-csv", action="store_true", help="also export the variance ensemble")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="NLS fit of model parameters to a realized series")
    p.add_argument("realized", help="realized.csv from `estimate`")
    p.add_argument("correlation", help="correlation.csv from `estimate`")
    p.add_argument("--model", required=True, choices=("heston", "bns"))
    p.add_argument("--init", help="JSON with 'initial' and optional 'bounds' (null = unbounded)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("report", help="fitted-vs-realized plot and metrics table")
    p.add_argument("realized", help="realized.csv the fits refer to")
    p.add_argument("--result", action="append", required=True, help="result.json (repeat for two models)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except GenvarswapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
