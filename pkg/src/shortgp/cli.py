"""Command-line interface.

Subcommands: ``bound`` (length-scale lower bound for a sampling grid),
``fit`` (single series from a CSV), ``synth`` (the synthetic benchmark
sweep), ``batch`` (fit every series in a CSV) and ``plotdata`` (posterior
curves for one fit).  A flat ``key = value`` config file can preset the
synthetic protocol; command-line flags override it.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import bound
from . import fitting as fitmod, harness
from .kernels import FactorizationError
from .special import QuadratureLimitError

USAGE_ERROR = 1
DATA_ERROR = 2
NUMERICAL_ERROR = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; this tool reserves 2 for
    # data errors, so usage problems are rerouted to exit code 1.
    def error(self, message):
        raise _UsageError(message)


def _add_family_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", choices=["se", "matern"], default=None,
                        help="kernel family (default se)")
    parser.add_argument("--nu", type=float, default=None,
                        help="Matern smoothness (fitting supports 0.5, 1.5, 2.5)")
    parser.add_argument("--alpha", type=float, default=None,
                        help="spectral energy fraction for the bound (default 0.99)")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="shortgp",
        description="GP regression for many short time series with "
        "Nyquist spectral-energy length-scale bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_bound = sub.add_parser("bound", parents=[], help="print the length-scale lower bound")
    p_bound.add_argument("--times", type=str, default=None,
                         help="comma-separated observation times")
    p_bound.add_argument("--delta-t", type=float, default=None,
                         help="sampling interval (alternative to --times)")
    p_bound.add_argument("--gap-rule", choices=["min", "median"], default="min",
                         help="gap statistic for non-uniform times (default min)")
    _add_family_flags(p_bound)

    p_fit = sub.add_parser("fit", help="fit one series from a CSV file")
    p_fit.add_argument("--input", required=True, help="input CSV path")
    p_fit.add_argument("--format", choices=["auto", "long", "wide"], default="auto")
    p_fit.add_argument("--id", default=None, help="series id (default: first series)")
    p_fit.add_argument("--scenario", type=int, choices=[1, 2, 3, 4], default=4,
                       help="constraint scenario 1..4 (default 4: both bounds)")
    p_fit.add_argument("--scenario-set", choices=["synthetic", "expression"],
                       default="synthetic")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--restarts", type=int, default=fitmod.DEFAULT_RESTARTS)
    p_fit.add_argument("--plot-out", default=None,
                       help="also write posterior plot data to this CSV")
    p_fit.add_argument("--resolution", type=int, default=200)
    _add_family_flags(p_fit)

    p_synth = sub.add_parser("synth", help="run the synthetic benchmark sweep")
    p_synth.add_argument("--config", default=None, help="flat key=value config file")
    p_synth.add_argument("--n-grid", type=str, default=None,
                         help="comma-separated sample sizes (default 5,7,9,11,13,15)")
    p_synth.add_argument("--replicates", type=int, default=None)
    p_synth.add_argument("--seed", type=int, default=None)
    p_synth.add_argument("--noise-variance", type=float, default=None)
    p_synth.add_argument("--interval", type=str, default=None,
                         help="training interval as 'lo,hi' (default -5,6)")
    p_synth.add_argument("--test-grid", type=str, default=None,
                         help="test grid as 'lo,hi,count' (default -6,5,10)")
    p_synth.add_argument("--noise-bounds", type=str, default=None,
                         help="noise-variance box as 'lo,hi' (default 0.01,0.1)")
    p_synth.add_argument("--restarts", type=int, default=None)
    p_synth.add_argument("--out-dir", default=None, required=False)
    p_synth.add_argument("--parallelism", type=int, default=None)
    _add_family_flags(p_synth)

    p_batch = sub.add_parser("batch", help="fit every series in a CSV file")
    p_batch.add_argument("--input", required=True)
    p_batch.add_argument("--format", choices=["auto", "long", "wide"], default="auto")
    p_batch.add_argument("--scenario-set", choices=["synthetic", "expression"],
                         default="expression")
    p_batch.add_argument("--seed", type=int, default=0)
    p_batch.add_argument("--restarts", type=int, default=fitmod.DEFAULT_RESTARTS)
    p_batch.add_argument("--noise-flag-threshold", type=float, default=1e-2)
    p_batch.add_argument("--out-dir", required=True)
    p_batch.add_argument("--parallelism", type=int, default=1)
    _add_family_flags(p_batch)

    p_plot = sub.add_parser("plotdata", help="emit posterior curves for one fit")
    p_plot.add_argument("--input", required=True)
    p_plot.add_argument("--format", choices=["auto", "long", "wide"], default="auto")
    p_plot.add_argument("--id", default=None)
    p_plot.add_argument("--scenario", type=int, choices=[1, 2, 3, 4], default=4)
    p_plot.add_argument("--scenario-set", choices=["synthetic", "expression"],
                        default="synthetic")
    p_plot.add_argument("--seed", type=int, default=0)
    p_plot.add_argument("--restarts", type=int, default=fitmod.DEFAULT_RESTARTS)
    p_plot.add_argument("--out", required=True)
    p_plot.add_argument("--resolution", type=int, default=200)
    _add_family_flags(p_plot)

    return parser


def _family(args) -> tuple[str, float | None]:
    family = args.family or "se"
    if family == "matern" and args.nu is None:
        raise _UsageError("--family matern requires --nu")
    return family, (args.nu if family == "matern" else None)


def _select_series(args):
    series_list = harness.ingest_csv(args.input, format=args.format)
    if not series_list:
        raise harness.CsvFormatError("no series found in input")
    if args.id is None:
        return series_list[0]
    for s in series_list:
        if s.id == args.id:
            return s
    raise harness.CsvFormatError(f"series id {args.id!r} not found in input")


def _scenario_for(args, series, family, nu):
    alpha = args.alpha if args.alpha is not None else bound.DEFAULT_ALPHA
    if args.scenario_set == "expression":
        scenarios = fitmod.make_expression_scenarios(series, family, alpha, nu)
    else:
        scenarios = fitmod.make_scenarios(series, family, alpha, nu)
    return scenarios[args.scenario - 1]


def _cmd_bound(args) -> int:
    family, nu = _family(args)
    alpha = args.alpha if args.alpha is not None else bound.DEFAULT_ALPHA
    if (args.times is None) == (args.delta_t is None):
        raise _UsageError("bound needs exactly one of --times or --delta-t")
    upper = None
    if args.times is not None:
        times = np.array([float(v) for v in args.times.split(",")])
        rule = "min_gap" if args.gap_rule == "min" else "median_gap"
        info = bound.delta_t_from_times(times, rule=rule)
        upper = float(times[-1] - times[0])
    else:
        if not args.delta_t > 0.0:
            raise ValueError("--delta-t must be > 0")
        info = bound.SamplingInfo(
            delta_t=args.delta_t,
            nyquist_frequency=1.0 / (2.0 * args.delta_t),
            uniform=True,
        )
    a_l = bound.length_scale_bound(family, alpha, info.delta_t, nu)
    print(f"delta_t             {info.delta_t!r}")
    print(f"nyquist_frequency   {info.nyquist_frequency!r}")
    print(f"uniform_sampling    {info.uniform}")
    if info.rule != "min_gap":
        print(f"gap_rule            {info.rule} (non-default heuristic)")
    print(f"alpha               {alpha!r}")
    print(f"length_scale_lower  {a_l!r}")
    if upper is not None:
        print(f"length_scale_upper  {upper!r}  (observation span)")
    return 0


def _cmd_fit(args) -> int:
    family, nu = _family(args)
    series = _select_series(args)
    scenario = _scenario_for(args, series, family, nu)
    result = fitmod.fit(
        series, family, scenario, seed=args.seed, nu=nu, restarts=args.restarts
    )
    info = bound.delta_t_from_times(series.times)
    alpha = args.alpha if args.alpha is not None else bound.DEFAULT_ALPHA
    diag = fitmod.diagnose(result, info, alpha)
    print(f"series              {series.id!r} (n={len(series)})")
    print(f"scenario            {scenario.label}")
    print(f"length_scale        {result.kernel.length_scale!r}")
    print(f"signal_variance     {result.kernel.signal_variance!r}")
    noise = "fixed per-point" if result.noise_variance is None else repr(result.noise_variance)
    print(f"noise_variance      {noise}")
    print(f"log_marginal_lik    {result.log_marginal_likelihood!r}")
    print(f"converged           {result.converged}")
    print(f"restarts_used       {result.restarts_used}")
    print(f"bound_lower_active  {result.bound_lower_active}")
    print(f"flag_short_length   {diag.length_scale_below_bound}")
    print(f"flag_tiny_noise     {diag.tiny_noise}")
    if args.plot_out:
        harness.emit_fit_plotdata(series, result, args.plot_out, args.resolution)
        print(f"plot_data           {args.plot_out}")
    return 0


def _cmd_synth(args) -> int:
    mapping = harness.load_config(args.config) if args.config else {}
    config = harness.config_from_mapping(mapping)
    if args.replicates is not None:
        config = replace(config, replicates=args.replicates)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.noise_variance is not None:
        config = replace(config, noise_variance=args.noise_variance)
    if args.interval is not None:
        lo, hi = (float(v) for v in args.interval.split(","))
        config = replace(config, interval=(lo, hi))
    if args.test_grid is not None:
        lo, hi, count = args.test_grid.split(",")
        config = replace(config, test_grid=(float(lo), float(hi), int(count)))
    if args.noise_bounds is not None:
        lo, hi = (float(v) for v in args.noise_bounds.split(","))
        config = replace(config, noise_bounds=(lo, hi))
    if args.restarts is not None:
        config = replace(config, restarts=args.restarts)
    if args.family is not None:
        family, nu = _family(args)
        config = replace(config, family=family, nu=nu)
    if args.alpha is not None:
        config = replace(config, alpha=args.alpha)

    if args.n_grid is not None:
        n_grid = [int(v) for v in args.n_grid.split(",")]
    elif "n_grid" in mapping:
        n_grid = [int(v) for v in str(mapping["n_grid"]).split(",")]
    else:
        n_grid = [5, 7, 9, 11, 13, 15]
    out_dir = args.out_dir or mapping.get("out_dir")
    if out_dir is None:
        raise _UsageError("synth needs --out-dir (or out_dir in the config file)")
    parallelism = args.parallelism or int(mapping.get("parallelism", 1))

    report = harness.run_synthetic_experiment(config, n_grid, parallelism=parallelism)
    files = harness.emit_report(report, out_dir)
    for path in files:
        print(path)
    return 0


def _cmd_batch(args) -> int:
    family, nu = _family(args)
    alpha = args.alpha if args.alpha is not None else bound.DEFAULT_ALPHA
    series_list = harness.ingest_csv(args.input, format=args.format)
    if not series_list:
        raise harness.CsvFormatError("no series found in input")
    report = harness.run_batch(
        series_list,
        scenario_set=args.scenario_set,
        family=family,
        nu=nu,
        parallelism=args.parallelism,
        seed=args.seed,
        restarts=args.restarts,
        alpha=alpha,
        noise_flag_threshold=args.noise_flag_threshold,
    )
    files = harness.emit_report(report, args.out_dir)
    for path in files:
        print(path)
    return 0


def _cmd_plotdata(args) -> int:
    family, nu = _family(args)
    series = _select_series(args)
    scenario = _scenario_for(args, series, family, nu)
    result = fitmod.fit(
        series, family, scenario, seed=args.seed, nu=nu, restarts=args.restarts
    )
    harness.emit_fit_plotdata(series, result, args.out, args.resolution)
    print(args.out)
    return 0


_COMMANDS = {
    "bound": _cmd_bound,
    "fit": _cmd_fit,
    "synth": _cmd_synth,
    "batch": _cmd_batch,
    "plotdata": _cmd_plotdata,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (harness.CsvFormatError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except (
        fitmod.AllStartsFailedError,
        FactorizationError,
        QuadratureLimitError,
        bound.BisectionError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
