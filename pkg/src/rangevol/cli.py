"""Command line interface: estimate, simulate, density, tables.

Every command writes plot-ready CSV (or JSON) with a provenance comment
line; fixed seeds and flags give byte-identical output regardless of the
``RANGEVOL_THREADS`` worker cap.  Exit codes: 0 success, 1 runtime or
convergence failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__, analytics, densities, montecarlo
from .densities import NonConvergenceError, SeriesConfig
from .estimators import (
    EstimatorKind,
    GarmanKlassVariant,
    bridge_value,
    garman_klass_value,
    parkinson_value,
    rogers_satchell_value,
)
from .paths import bar_from_samples

_KIND_NAMES = {
    "parkinson": EstimatorKind.PARKINSON,
    "garman-klass": EstimatorKind.GARMAN_KLASS,
    "rogers-satchell": EstimatorKind.ROGERS_SATCHELL,
    "bridge": EstimatorKind.BRIDGE,
}

_DENSITY_NAMES = (
    "close-pdf",
    "high-pdf",
    "range-pdf",
    "bridge-range-pdf",
    "park-estimator-pdf",
    "bridge-estimator-pdf",
)


class _CliError(RuntimeError):
    """Runtime failure mapped to exit code 1."""


def _provenance(argv) -> str:
    return f"# rangevol {__version__} " + " ".join(argv)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_output(args, header, rows, argv):
    text_rows = [",".join(_fmt(v) for v in row) for row in rows]
    if args.format == "csv":
        body = "\n".join([_provenance(argv), ",".join(header)] + text_rows) + "\n"
    else:
        payload = {
            "provenance": _provenance(argv)[2:],
            "rows": [dict(zip(header, row)) for row in rows],
        }
        body = json.dumps(payload, indent=1, default=float) + "\n"
    if args.out == "-":
        sys.stdout.write(body)
    else:
        with open(args.out, "w") as fh:
            fh.write(body)


def _series_config(args) -> SeriesConfig:
    return SeriesConfig(abs_tol=args.series_tol, max_terms=args.max_terms)


def _parse_gammas(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(","))


def _parse_estimators(text: str, parser) -> tuple[EstimatorKind, ...]:
    kinds = []
    for part in text.split(","):
        name = part.strip().lower()
        if name not in _KIND_NAMES:
            parser.error(f"unknown estimator {part!r}; choose from {', '.join(_KIND_NAMES)}")
        kinds.append(_KIND_NAMES[name])
    return tuple(kinds)


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------

def _read_csv_header(path):
    with open(path) as fh:
        header = fh.readline().strip()
    return [col.strip().lower() for col in header.split(",")]


def _parse_timestamps(raw, path):
    try:
        return np.asarray([float(v) for v in raw], dtype=float)
    except ValueError:
        pass
    try:
        stamps = np.array(raw, dtype="datetime64[ns]")
    except ValueError as exc:
        raise _CliError(f"{path}: cannot parse timestamps: {exc}") from None
    return stamps.astype("int64") / 1e9


def _load_ticks(path):
    # fast path: fully numeric CSV
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 2:
            raise _CliError(f"{path}: tick rows must have exactly two columns")
        return data[:, 0], data[:, 1]
    except ValueError:
        pass  # ISO timestamps or a malformed row; re-read line by line
    raw_t, raw_p = [], []
    with open(path) as fh:
        next(fh)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise _CliError(f"{path}:{lineno}: malformed tick row: {line!r}")
            raw_t.append(parts[0])
            try:
                raw_p.append(float(parts[1]))
            except ValueError:
                raise _CliError(f"{path}:{lineno}: malformed price: {parts[1]!r}") from None
    t = _parse_timestamps(raw_t, path)
    return t, np.asarray(raw_p, dtype=float)


def _estimate_ticks(args, kinds, argv):
    t, p = _load_ticks(args.input)
    if t.size < 2:
        raise _CliError("need at least two ticks")
    if np.any(np.diff(t) < 0):
        raise _CliError("tick timestamps must be non-decreasing")
    window = args.window if args.window is not None else float(t[-1] - t[0])
    if not window > 0:
        raise _CliError("window length must be positive")
    t0 = float(t[0])
    n_windows = max(int(math.ceil((float(t[-1]) - t0) / window - 1e-12)), 1)
    variant = GarmanKlassVariant(args.gk_variant)
    labels = [montecarlo.estimator_label(kind, variant) for kind in kinds]
    header = ["window", "high", "low", "close"] + labels + ["warnings"]
    rows = []
    for w in range(n_windows):
        lo = t0 + w * window
        hi = t0 + (w + 1) * window
        i = int(np.searchsorted(t, lo, side="left"))
        j = int(np.searchsorted(t, hi, side="right"))
        if j - i < 2:
            continue
        bar, bridge = bar_from_samples(
            np.column_stack([t[i:j], p[i:j]]), (lo, hi), log_input=args.log_prices
        )
        row, warn = [w, bar.high, bar.low, bar.close], []
        for kind, label in zip(kinds, labels):
            value = _estimate_value(kind, bar, bridge, variant)
            if value < 0.0:
                warn.append(f"{label}<0")
            row.append(value)
        row.append("|".join(warn))
        rows.append(row)
    return header, rows


def _estimate_value(kind, bar, bridge, variant) -> float:
    if kind is EstimatorKind.PARKINSON:
        return float(parkinson_value(bar.high, bar.low))
    if kind is EstimatorKind.GARMAN_KLASS:
        return float(garman_klass_value(bar.high, bar.low, bar.close, variant))
    if kind is EstimatorKind.ROGERS_SATCHELL:
        return float(rogers_satchell_value(bar.high, bar.low, bar.close))
    return float(bridge_value(bridge.xi, bridge.zeta))


def _estimate_ohlc(args, kinds, argv, parser):
    if EstimatorKind.BRIDGE in kinds:
        if args.estimators is not None:
            parser.error("bridge estimator requires tick input (intra-window path data)")
        kinds = tuple(k for k in kinds if k is not EstimatorKind.BRIDGE)
    variant = GarmanKlassVariant(args.gk_variant)
    labels = [montecarlo.estimator_label(kind, variant) for kind in kinds]
    header = ["window", "high", "low", "close"] + labels + ["warnings"]
    rows = []
    with open(args.input) as fh:
        next(fh)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise _CliError(f"{args.input}:{lineno}: malformed OHLC row: {line!r}")
            window_id = parts[0]
            try:
                o, h, l, c = (float(v) for v in parts[1:])
            except ValueError:
                raise _CliError(f"{args.input}:{lineno}: malformed OHLC numbers") from None
            if args.raw_prices:
                if min(o, h, l, c) <= 0.0:
                    raise _CliError(f"{args.input}:{lineno}: prices must be positive")
                o, h, l, c = math.log(o), math.log(h), math.log(l), math.log(c)
            high, low, close = h - o, l - o, c - o
            if not (low <= 0.0 <= high and low <= close <= high):
                raise _CliError(
                    f"{args.input}:{lineno}: inconsistent OHLC (need low <= open,close <= high)"
                )
            row, warn = [window_id, high, low, close], []
            for kind, label in zip(kinds, labels):
                value = _estimate_value(kind, _Bar(high, low, close), None, variant)
                if value < 0.0:
                    warn.append(f"{label}<0")
                row.append(value)
            row.append("|".join(warn))
            rows.append(row)
    return header, rows


class _Bar:
    """OHLC-derived increments; duck-types PhysicalBar for the kernels."""

    def __init__(self, high, low, close):
        self.high, self.low, self.close = high, low, close


def cmd_estimate(args, parser, argv) -> int:
    header_cols = _read_csv_header(args.input)
    if header_cols == ["timestamp", "price"]:
        kinds = (
            _parse_estimators(args.estimators, parser)
            if args.estimators is not None
            else tuple(_KIND_NAMES.values())
        )
        header, rows = _estimate_ticks(args, kinds, argv)
    elif header_cols == ["window_id", "open", "high", "low", "close"]:
        kinds = (
            _parse_estimators(args.estimators, parser)
            if args.estimators is not None
            else tuple(k for k in _KIND_NAMES.values() if k is not EstimatorKind.BRIDGE)
        )
        header, rows = _estimate_ohlc(args, kinds, argv, parser)
    else:
        raise _CliError(
            f"{args.input}: unrecognized header {','.join(header_cols)!r}; expected "
            "'timestamp,price' or 'window_id,open,high,low,close'"
        )
    _write_output(args, header, rows, argv)
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _emit_ticks(cfg: montecarlo.ExperimentConfig, path: str, sigma: float, horizon: float):
    """Write chained GBM ticks, one window per path, at the first grid drift."""
    scale = sigma * math.sqrt(horizon)
    gamma = cfg.gamma_grid[0]
    n = cfg.n_steps
    tau = np.arange(n + 1) / n
    n_batches = (cfg.n_paths + cfg.batch_size - 1) // cfg.batch_size
    log_price = 0.0
    window = 0
    with open(path, "w") as fh:
        fh.write("timestamp,price\n")
        for b in range(n_batches):
            samples = montecarlo._batch_generator(cfg.seed, b).standard_normal(
                (min(cfg.batch_size, cfg.n_paths - b * cfg.batch_size), n)
            )
            x = np.empty((samples.shape[0], n + 1))
            x[:, 0] = 0.0
            np.cumsum(samples, axis=1, out=x[:, 1:])
            x[:, 1:] /= math.sqrt(n)
            if gamma != 0.0:
                x += gamma * tau[None, :]
            for k in range(x.shape[0]):
                times = (window + tau) * horizon
                prices = np.exp(log_price + scale * x[k])
                start = 1 if window > 0 else 0  # boundary tick already written
                fh.write("\n".join(map("%.12g,%.17g".__mod__, zip(times[start:], prices[start:]))))
                fh.write("\n")
                log_price += scale * float(x[k, -1])
                window += 1


def _theory_columns(label: str, gamma: float, cfg: SeriesConfig):
    if label == "parkinson":
        report = analytics.theoretical_moments(EstimatorKind.PARKINSON, gamma, cfg)
        p = analytics.coverage_probability(EstimatorKind.PARKINSON, gamma, cfg)
        return report.mean, report.variance, p
    if label == "bridge":
        report = analytics.theoretical_moments(EstimatorKind.BRIDGE, 0.0, cfg)
        p = analytics.coverage_probability(EstimatorKind.BRIDGE, 0.0, cfg)
        return report.mean, report.variance, p
    return None, None, None


def cmd_simulate(args, parser, argv) -> int:
    kinds = (
        _parse_estimators(args.estimators, parser)
        if args.estimators is not None
        else tuple(_KIND_NAMES.values())
    )
    cfg = montecarlo.ExperimentConfig(
        n_steps=args.steps,
        n_paths=args.paths,
        gamma_grid=_parse_gammas(args.gammas),
        seed=args.seed,
        estimators=kinds,
        gk_variant=GarmanKlassVariant(args.gk_variant),
        histogram_bins=args.bins,
        batch_size=args.batch_size,
    )
    series_cfg = _series_config(args)
    if args.emit_ticks:
        _emit_ticks(cfg, args.emit_ticks, args.sigma, args.horizon)
    summary = montecarlo.run_experiment(cfg)
    header = [
        "estimator", "gamma", "mean", "mean_se", "variance", "variance_se",
        "p_delta", "p_delta_se", "theory_mean", "theory_variance", "theory_p_delta",
    ]
    theory_cache = {}
    rows = []
    for gamma in cfg.gamma_grid:
        for label in cfg.labels():
            cell = summary.cell(label, gamma)
            key = (label, 0.0 if label == "bridge" else gamma)
            if args.skip_theory:
                theory = (None, None, None)
            else:
                if key not in theory_cache:
                    theory_cache[key] = _theory_columns(label, gamma, series_cfg)
                theory = theory_cache[key]
            rows.append(
                [
                    label, gamma, cell.mean, cell.mean_se, cell.variance, cell.variance_se,
                    cell.p_delta, cell.p_delta_se, *theory,
                ]
            )
    _write_output(args, header, rows, argv)
    return 0


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------

def cmd_density(args, parser, argv) -> int:
    cfg = _series_config(args)
    name = args.name
    gamma = args.gamma

    def evaluate(x: float) -> densities.DensityValue:
        if name == "close-pdf":
            return densities.DensityValue(densities.close_pdf(x, gamma), 0, True)
        if name == "high-pdf":
            return densities.high_pdf(x, gamma, cfg)
        if name == "range-pdf":
            return densities.range_pdf(x, gamma, cfg)
        if name == "bridge-range-pdf":
            return densities.bridge_range_pdf(x, cfg)
        if name == "park-estimator-pdf":
            return densities.parkinson_estimator_pdf(x, gamma, cfg)
        return densities.bridge_estimator_pdf(x, cfg)

    xs = np.linspace(args.x_min, args.x_max, args.points)
    rows = []
    for x in xs:
        value = evaluate(float(x))
        rows.append(
            [float(x), value.value if value.converged else None, value.terms_used]
        )
    _write_output(args, ["x", "value", "terms_used"], rows, argv)
    return 0


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def _mc_cells(kinds, gammas, args):
    """One shared experiment backing the MC-method table rows."""
    wanted = [k for k in kinds if k in (EstimatorKind.GARMAN_KLASS, EstimatorKind.ROGERS_SATCHELL)]
    if not wanted:
        return None
    cfg = montecarlo.ExperimentConfig(
        n_steps=args.mc_steps,
        n_paths=args.mc_paths,
        gamma_grid=gammas,
        seed=args.seed,
        estimators=tuple(wanted),
        gk_variant=GarmanKlassVariant(args.gk_variant),
    )
    return montecarlo.run_experiment(cfg)


def cmd_tables(args, parser, argv) -> int:
    cfg = _series_config(args)
    gammas = _parse_gammas(args.gammas)
    kinds = (
        _parse_estimators(args.estimators, parser)
        if args.estimators is not None
        else tuple(_KIND_NAMES.values())
    )
    header = ["estimator", "x", "value", "method", "se"]
    rows = []
    table = args.table

    def label_of(kind):
        return montecarlo.estimator_label(kind, GarmanKlassVariant(args.gk_variant))

    try:
        if table in ("mean", "variance", "relative-bias"):
            mc = _mc_cells(kinds, gammas, args) if table != "mean" else None
            for gamma in gammas:
                for kind in kinds:
                    if kind is EstimatorKind.PARKINSON or kind is EstimatorKind.BRIDGE:
                        report = analytics.theoretical_moments(kind, gamma, cfg)
                        value = {
                            "mean": report.mean,
                            "variance": report.variance,
                            "relative-bias": report.relative_bias,
                        }[table]
                        rows.append([label_of(kind), gamma, value, "quadrature", None])
                    elif table == "mean":
                        if kind is EstimatorKind.GARMAN_KLASS:
                            for variant in GarmanKlassVariant:
                                value = analytics.garman_klass_mean(gamma, cfg, variant)
                                rows.append(
                                    [montecarlo.estimator_label(kind, variant), gamma,
                                     value, "quadrature", None]
                                )
                        else:
                            value = analytics.rogers_satchell_mean(gamma, cfg)
                            rows.append([label_of(kind), gamma, value, "quadrature", None])
                    else:
                        cell = mc.cell(label_of(kind), gamma)
                        if table == "variance":
                            rows.append(
                                [label_of(kind), gamma, cell.variance, "mc_oracle",
                                 cell.variance_se]
                            )
                        else:
                            # fully empirical relative bias: the simulated mean
                            # carries the same discretization as the variance
                            sd = math.sqrt(cell.variance)
                            rho = (cell.mean - 1.0) / sd
                            rows.append(
                                [label_of(kind), gamma, rho, "mc_oracle", cell.mean_se / sd]
                            )
        elif table == "interval":
            levels = tuple(float(v) for v in args.levels.split(","))
            for kind in kinds:
                if kind not in (EstimatorKind.PARKINSON, EstimatorKind.BRIDGE):
                    continue
                gamma = gammas[0] if kind is EstimatorKind.PARKINSON else 0.0
                for level in levels:
                    report = analytics.IntervalReport(
                        estimator=kind,
                        gamma=gamma,
                        level=level,
                        probability=analytics.interval_probability(kind, gamma, level, cfg),
                    )
                    rows.append(
                        [label_of(kind), report.level, report.probability, "quadrature", None]
                    )
        elif table == "coverage":
            mc = _mc_cells(kinds, gammas, args)
            for gamma in gammas:
                for kind in kinds:
                    if kind in (EstimatorKind.PARKINSON, EstimatorKind.BRIDGE):
                        value = analytics.coverage_probability(kind, gamma, cfg)
                        rows.append([label_of(kind), gamma, value, "quadrature", None])
                    else:
                        cell = mc.cell(label_of(kind), gamma)
                        rows.append(
                            [label_of(kind), gamma, cell.p_delta, "mc_oracle", cell.p_delta_se]
                        )
    except NonConvergenceError as exc:
        raise _CliError(f"table {table!r}: {exc}") from exc
    _write_output(args, header, rows, argv)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--out", default="-", help="output file (default stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--series-tol", type=float, default=1e-12,
                     help="absolute truncation tolerance of the image series")
    sub.add_argument("--max-terms", type=int, default=1_000_000)
    sub.add_argument("--gk-variant", choices=("hl", "hc"), default="hl",
                     help="Garman-Klass cross term: c*d-2*h*l or c*d-2*h*c")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rangevol",
        description="Range-based volatility estimators: estimation, simulation and theory tables.",
    )
    parser.add_argument("--version", action="version", version=f"rangevol {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p_est = subs.add_parser("estimate", help="estimate volatility from tick or OHLC CSV")
    p_est.add_argument("input", help="CSV file: 'timestamp,price' ticks or 'window_id,open,high,low,close'")
    p_est.add_argument("--window", type=float, default=None,
                       help="window length in timestamp units (tick input; default: whole file)")
    p_est.add_argument("--estimators", default=None,
                       help="comma list: parkinson,garman-klass,rogers-satchell,bridge")
    p_est.add_argument("--log-prices", action="store_true",
                       help="tick price column already holds log-prices")
    p_est.add_argument("--raw-prices", action="store_true",
                       help="OHLC columns hold raw prices; take logs first")
    _add_common(p_est)

    p_sim = subs.add_parser("simulate", help="Monte Carlo estimator comparison")
    p_sim.add_argument("--paths", type=int, default=100_000)
    p_sim.add_argument("--steps", type=int, default=5_000)
    p_sim.add_argument("--gammas", default="0,0.5,1,1.5,2")
    p_sim.add_argument("--estimators", default=None)
    p_sim.add_argument("--bins", type=int, default=200)
    p_sim.add_argument("--batch-size", type=int, default=512)
    p_sim.add_argument("--skip-theory", action="store_true",
                       help="leave the theory overlay columns empty")
    p_sim.add_argument("--emit-ticks", default=None, metavar="PATH",
                       help="also write a synthetic tick CSV, one window per path")
    p_sim.add_argument("--sigma", type=float, default=0.2,
                       help="price volatility used with --emit-ticks")
    p_sim.add_argument("--horizon", type=float, default=1.0,
                       help="window length in time units used with --emit-ticks")
    _add_common(p_sim)

    p_den = subs.add_parser("density", help="tabulate an analytic density")
    p_den.add_argument("name", choices=_DENSITY_NAMES)
    p_den.add_argument("--gamma", type=float, default=0.0)
    p_den.add_argument("--x-min", type=float, default=0.01)
    p_den.add_argument("--x-max", type=float, default=6.0)
    p_den.add_argument("--points", type=int, default=600)
    _add_common(p_den)

    p_tab = subs.add_parser("tables", help="theory tables (mean, variance, bias, intervals)")
    p_tab.add_argument("--table", required=True,
                       choices=("mean", "variance", "relative-bias", "interval", "coverage"))
    p_tab.add_argument("--gammas", default="0,0.25,0.5,0.75,1,1.25,1.5,1.75,2")
    p_tab.add_argument("--levels", default="1,1.5,2,3,5,10",
                       help="levels N for the interval table")
    p_tab.add_argument("--estimators", default=None)
    p_tab.add_argument("--mc-paths", type=int, default=200_000,
                       help="paths of the MC oracle behind variance/coverage rows")
    p_tab.add_argument("--mc-steps", type=int, default=5_000)
    _add_common(p_tab)
    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "estimate": cmd_estimate,
        "simulate": cmd_simulate,
        "density": cmd_density,
        "tables": cmd_tables,
    }
    try:
        return handlers[args.command](args, parser, argv)
    except (_CliError, NonConvergenceError, OSError, ValueError) as exc:
        print(f"rangevol: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
