"""Batch experiment engine: synthetic benchmark sweeps, CSV ingestion,
parallel fitting of many independent series and report emission.

The synthetic benchmark draws noisy samples of sinc(t) = sin(t)/t on an
equally spaced grid, fits each replicate under the four constraint
scenarios, and aggregates over-fit fractions, held-out metric exceedance
fractions and per-replicate scenario winners.  All randomness comes from
counter-based Philox streams keyed by (seed, n, replicate), so any
replicate is reproducible in isolation and results do not depend on the
degree of parallelism.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.random import Generator, Philox

from . import bound, gp
from . import fitting as fitmod
from .kernels import FactorizationError
from .series import NoiseModel, TimeSeries

__all__ = [
    "SyntheticConfig",
    "ReplicateRecord",
    "CellStats",
    "BatchReport",
    "CsvFormatError",
    "sinc",
    "generate_sinc_series",
    "run_synthetic_experiment",
    "run_batch",
    "ingest_csv",
    "export_csv",
    "emit_report",
    "emit_fit_plotdata",
    "load_config",
    "config_from_mapping",
]

_DATA_STREAM = 0x44415441  # "DATA": noise draws for synthetic series
_MASK64 = (1 << 64) - 1

SCENARIO_LABELS = ("no_bounds", "lengthscale_bounded", "noise_bounded", "both_bounded")


class CsvFormatError(ValueError):
    """Malformed input CSV (message carries the offending line number)."""


def sinc(x):
    """sin(x)/x with the removable singularity sinc(0) = 1."""
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


@dataclass(frozen=True)
class SyntheticConfig:
    """Protocol parameters for the synthetic sinc benchmark."""

    n_points: int = 7
    interval: tuple[float, float] = (-5.0, 6.0)
    noise_variance: float = 0.09
    replicates: int = 1000
    test_grid: tuple[float, float, int] = (-6.0, 5.0, 10)
    seed: int = 0
    family: str = "se"
    nu: float | None = None
    alpha: float = bound.DEFAULT_ALPHA
    noise_bounds: tuple[float, float] = fitmod.SYNTHETIC_NOISE_BOUNDS
    restarts: int = fitmod.DEFAULT_RESTARTS
    loglik_threshold: float = -20.0
    mse_threshold: float = 0.1
    noise_flag_threshold: float = 1e-4

    def __post_init__(self) -> None:
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if not self.interval[0] < self.interval[1]:
            raise ValueError("interval must satisfy lo < hi")
        if self.noise_variance < 0.0:
            raise ValueError("noise_variance must be >= 0")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        lo, hi, count = self.test_grid
        if not (lo < hi and int(count) >= 1):
            raise ValueError("test_grid must be (lo, hi, count>=1) with lo < hi")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


def _mix64(*parts: int) -> int:
    """Deterministic splitmix64-style hash of integer tuples (seed derivation)."""
    acc = 0x243F6A8885A308D3
    for p in parts:
        acc = (acc + (int(p) & _MASK64)) & _MASK64
        z = acc
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        acc = z ^ (z >> 31)
    return acc


def generate_sinc_series(config: SyntheticConfig, replicate_index: int) -> TimeSeries:
    """One synthetic replicate: sinc(t) plus Gaussian noise on an equally
    spaced grid.

    Reproducible in isolation: the noise stream is a Philox generator keyed
    by the seed and counter-addressed by (n_points, replicate_index); point
    j consumes the j-th draw of that stream.
    """
    lo, hi = config.interval
    times = np.linspace(lo, hi, config.n_points)
    rng = Generator(
        Philox(
            key=[config.seed, _DATA_STREAM],
            counter=[0, config.n_points, int(replicate_index), 0],
        )
    )
    noise = rng.standard_normal(config.n_points) * math.sqrt(config.noise_variance)
    return TimeSeries(
        times,
        sinc(times) + noise,
        id=f"sinc-n{config.n_points}-r{replicate_index}",
    )


@dataclass(frozen=True)
class ReplicateRecord:
    """Outcome of one (series, scenario) fit inside a batch."""

    series_id: str
    n: int
    replicate: int
    scenario: str
    scenario_index: int
    failed: bool
    length_scale: float | None = None
    signal_variance: float | None = None
    noise_variance: float | None = None  # None for fixed-noise scenarios
    log_marginal_likelihood: float | None = None
    predictive_log_likelihood: float | None = None
    mse: float | None = None
    flag_short_length_scale: bool = False
    flag_tiny_noise: bool = False
    length_scale_lower: float | None = None
    win_loglik: bool = False
    win_mse: bool = False
    all_scenarios_ok: bool = False


@dataclass(frozen=True)
class CellStats:
    """Aggregates for one (scenario, n) cell of a report."""

    count: int
    failed: int
    overfit_fraction_lengthscale: float
    overfit_fraction_noise: float
    low_loglik_fraction: float | None
    high_mse_fraction: float | None
    win_fraction_loglik: float | None
    win_fraction_mse: float | None


@dataclass
class BatchReport:
    """Per-fit records plus aggregate accessors.

    Aggregates are always recomputed from ``rows``, so the emitted raw file
    and the emitted tables can never disagree.  ``structural`` maps each
    scenario label to the over-fit flags that its constraints make
    impossible (used to print "." cells for ingested-data reports).
    """

    scenario_labels: list[str]
    n_values: list[int]
    rows: list[ReplicateRecord]
    loglik_threshold: float = -20.0
    mse_threshold: float = 0.1
    noise_flag_threshold: float = 1e-4
    structural: dict[str, dict[str, bool]] = field(default_factory=dict)
    has_metrics: bool = True

    def _select(self, scenario: str, n: int | None) -> list[ReplicateRecord]:
        return [
            r
            for r in self.rows
            if r.scenario == scenario and (n is None or r.n == n)
        ]

    def cell(self, scenario: str, n: int | None = None) -> CellStats:
        rows = self._select(scenario, n)
        ok = [r for r in rows if not r.failed]
        n_ok = len(ok)

        def frac(flags) -> float:
            return (sum(flags) / n_ok) if n_ok else 0.0

        low = high = None
        if self.has_metrics and n_ok:
            low = frac(
                r.predictive_log_likelihood < self.loglik_threshold for r in ok
            )
            high = frac(r.mse > self.mse_threshold for r in ok)
        win_ll = win_mse = None
        if self.has_metrics:
            eligible = [r for r in rows if r.all_scenarios_ok]
            if eligible:
                win_ll = sum(r.win_loglik for r in eligible) / len(eligible)
                win_mse = sum(r.win_mse for r in eligible) / len(eligible)
        return CellStats(
            count=len(rows),
            failed=len(rows) - n_ok,
            overfit_fraction_lengthscale=frac(r.flag_short_length_scale for r in ok),
            overfit_fraction_noise=frac(r.flag_tiny_noise for r in ok),
            low_loglik_fraction=low,
            high_mse_fraction=high,
            win_fraction_loglik=win_ll,
            win_fraction_mse=win_mse,
        )


def _fit_series_under_scenarios(
    series: TimeSeries,
    scenarios: list[fitmod.Scenario],
    family: str,
    nu: float | None,
    restarts: int,
    fit_seed: int,
    n_label: int,
    replicate: int,
    alpha: float,
    noise_flag_threshold: float,
    test_times: np.ndarray | None,
    test_values: np.ndarray | None,
    loglik_threshold: float,
    mse_threshold: float,
) -> list[ReplicateRecord]:
    sampling = bound.delta_t_from_times(series.times)
    records: list[dict] = []
    for idx, scenario in enumerate(scenarios):
        base = {
            "series_id": series.id,
            "n": n_label,
            "replicate": replicate,
            "scenario": scenario.label,
            "scenario_index": idx,
        }
        try:
            result = fitmod.fit(
                series, family, scenario, seed=fit_seed, nu=nu, restarts=restarts
            )
        except (fitmod.AllStartsFailedError, FactorizationError):
            records.append({**base, "failed": True})
            continue
        diag = fitmod.diagnose(result, sampling, alpha, noise_flag_threshold)
        rec = {
            **base,
            "failed": False,
            "length_scale": result.kernel.length_scale,
            "signal_variance": result.kernel.signal_variance,
            "noise_variance": result.noise_variance,
            "log_marginal_likelihood": result.log_marginal_likelihood,
            "flag_short_length_scale": diag.length_scale_below_bound,
            "flag_tiny_noise": diag.tiny_noise,
            "length_scale_lower": diag.thresholds["length_scale_lower"],
        }
        if test_times is not None:
            noise = fitmod.result_noise_model(result, series)
            rec["predictive_log_likelihood"] = gp.predictive_log_likelihood(
                series, result.kernel, noise, test_times, test_values
            )
            rec["mse"] = gp.mse(series, result.kernel, noise, test_times, test_values)
        records.append(rec)

    all_ok = all(not r["failed"] for r in records)
    if all_ok and test_times is not None:
        # Scenario winners; ties below 1e-10 go to the lowest-numbered
        # scenario (records are in scenario order).
        best_ll = 0
        best_mse = 0
        for i in range(1, len(records)):
            if (
                records[i]["predictive_log_likelihood"]
                > records[best_ll]["predictive_log_likelihood"] + 1e-10
            ):
                best_ll = i
            if records[i]["mse"] < records[best_mse]["mse"] - 1e-10:
                best_mse = i
        records[best_ll]["win_loglik"] = True
        records[best_mse]["win_mse"] = True
    for r in records:
        r["all_scenarios_ok"] = all_ok and test_times is not None
    return [ReplicateRecord(**r) for r in records]


def _synthetic_task(args) -> list[ReplicateRecord]:
    config, n, replicate, scenarios, test_times, test_values = args
    cfg_n = replace(config, n_points=n)
    series = generate_sinc_series(cfg_n, replicate)
    return _fit_series_under_scenarios(
        series,
        scenarios,
        config.family,
        config.nu,
        config.restarts,
        _mix64(config.seed, n, replicate),
        n,
        replicate,
        config.alpha,
        config.noise_flag_threshold,
        test_times,
        test_values,
        config.loglik_threshold,
        config.mse_threshold,
    )


def _map_tasks(task_fn, tasks, parallelism: int):
    if parallelism <= 1 or len(tasks) <= 1:
        return [task_fn(t) for t in tasks]
    chunksize = max(1, len(tasks) // (parallelism * 4))
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(task_fn, tasks, chunksize=chunksize))


def _structural_flags(
    scenarios: list[fitmod.Scenario], noise_flag_threshold: float
) -> dict[str, dict[str, bool]]:
    out = {}
    for sc in scenarios:
        out[sc.label] = {
            "lengthscale_impossible": sc.length_scale_lower > 0.0,
            "noise_impossible": sc.noise_mode == fitmod.NOISE_FIXED
            or (
                sc.noise_mode == fitmod.NOISE_BOUNDED
                and sc.noise_lower is not None
                and sc.noise_lower >= noise_flag_threshold
            ),
        }
    return out


def run_synthetic_experiment(
    config: SyntheticConfig,
    n_grid,
    family: str | None = None,
    parallelism: int = 1,
) -> BatchReport:
    """Full synthetic sweep: for every sample size in ``n_grid`` fit all
    replicates under the four scenarios and aggregate.

    The same replicate data is shared by all four scenarios (required for
    the winner comparison to mean anything), diagnostics use the thresholds
    from ``config``, and a replicate whose fit fails in any scenario is
    excluded from the winner accounting but still reported.  Deterministic
    for a given config regardless of ``parallelism``.
    """
    n_grid = [int(n) for n in n_grid]
    if family is not None:
        config = replace(config, family=family)
    lo, hi, count = config.test_grid
    test_times = np.linspace(lo, hi, int(count))
    test_values = sinc(test_times)

    rows: list[ReplicateRecord] = []
    structural: dict[str, dict[str, bool]] = {}
    labels: list[str] = []
    for n in n_grid:
        cfg_n = replace(config, n_points=n)
        probe = generate_sinc_series(cfg_n, 0)
        scenarios = fitmod.make_scenarios(
            probe, config.family, config.alpha, config.nu, config.noise_bounds
        )
        labels = [s.label for s in scenarios]
        structural = _structural_flags(scenarios, config.noise_flag_threshold)
        tasks = [
            (config, n, rep, scenarios, test_times, test_values)
            for rep in range(config.replicates)
        ]
        for group in _map_tasks(_synthetic_task, tasks, parallelism):
            rows.extend(group)

    return BatchReport(
        scenario_labels=labels,
        n_values=n_grid,
        rows=rows,
        loglik_threshold=config.loglik_threshold,
        mse_threshold=config.mse_threshold,
        noise_flag_threshold=config.noise_flag_threshold,
        structural=structural,
        has_metrics=True,
    )


def _batch_task(args) -> list[ReplicateRecord]:
    (
        series,
        index,
        scenario_set,
        family,
        nu,
        restarts,
        seed,
        alpha,
        noise_flag_threshold,
    ) = args
    scenarios = _scenarios_for_series(series, scenario_set, family, alpha, nu)
    return _fit_series_under_scenarios(
        series,
        scenarios,
        family,
        nu,
        restarts,
        _mix64(seed, index),
        len(series),
        index,
        alpha,
        noise_flag_threshold,
        None,
        None,
        -20.0,
        0.1,
    )


def _scenarios_for_series(
    series: TimeSeries,
    scenario_set,
    family: str,
    alpha: float,
    nu: float | None,
) -> list[fitmod.Scenario]:
    if scenario_set == "synthetic":
        return fitmod.make_scenarios(series, family, alpha, nu)
    if scenario_set == "expression":
        return fitmod.make_expression_scenarios(series, family, alpha, nu)
    if isinstance(scenario_set, (list, tuple)):
        return list(scenario_set)
    raise ValueError(
        "scenario_set must be 'synthetic', 'expression' or a list of Scenario"
    )


def run_batch(
    series_set,
    scenario_set="expression",
    family: str = "se",
    nu: float | None = None,
    parallelism: int = 1,
    seed: int = 0,
    restarts: int = fitmod.DEFAULT_RESTARTS,
    alpha: float = bound.DEFAULT_ALPHA,
    noise_flag_threshold: float = 1e-2,
) -> BatchReport:
    """Fit every series independently under a scenario set.

    ``scenario_set`` is "synthetic" (bounded noise interval), "expression"
    (fixed per-point noise, the default for ingested data) or an explicit
    scenario list applied verbatim.  Preset sets rebuild the length-scale
    bound per series from its own sampling interval.  Per-series failures
    are recorded, never fatal; results are independent of input order and
    of the degree of parallelism.
    """
    series_set = list(series_set)
    if not series_set:
        raise ValueError("series_set must not be empty")
    tasks = [
        (
            s,
            i,
            scenario_set,
            family,
            nu,
            restarts,
            seed,
            alpha,
            noise_flag_threshold,
        )
        for i, s in enumerate(series_set)
    ]
    rows: list[ReplicateRecord] = []
    for group in _map_tasks(_batch_task, tasks, parallelism):
        rows.extend(group)
    labels = [
        s.label
        for s in _scenarios_for_series(series_set[0], scenario_set, family, alpha, nu)
    ]
    structural = _structural_flags(
        _scenarios_for_series(series_set[0], scenario_set, family, alpha, nu),
        noise_flag_threshold,
    )
    return BatchReport(
        scenario_labels=labels,
        n_values=sorted({len(s) for s in series_set}),
        rows=rows,
        noise_flag_threshold=noise_flag_threshold,
        structural=structural,
        has_metrics=False,
    )


# ---------------------------------------------------------------------------
# CSV input and output
# ---------------------------------------------------------------------------


def _parse_float(cell: str, line_no: int, what: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise CsvFormatError(
            f"line {line_no}: cannot parse {what} from {cell!r}"
        ) from None


def _parse_wide_time(cell: str, line_no: int) -> float:
    text = cell.strip()
    if text.lower().startswith("t="):
        text = text[2:]
    return _parse_float(text, line_no, "time from header")


def ingest_csv(path, format: str = "auto") -> list[TimeSeries]:
    """Read time series from a CSV file.

    Long format has columns ``id,time,value`` plus an optional ``variance``
    column that populates per-point noise variances for fixed-noise fitting;
    one series per distinct id, rows in time order.  Wide format has an
    ``id`` column followed by one column per time point whose header cells
    parse as times (a ``t=`` prefix is allowed).  ``format`` may be "long",
    "wide" or "auto" (sniffed from the header).

    Raises CsvFormatError (with a line number) for malformed cells or
    missing columns and for non-increasing times within a series.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("line 1: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        lowered = [h.lower() for h in header]

        if format == "auto":
            format = "long" if ("time" in lowered and "value" in lowered) else "wide"

        if format == "long":
            required = ("id", "time", "value")
            missing = [c for c in required if c not in lowered]
            if missing:
                raise CsvFormatError(
                    f"line 1: long format needs columns {required}, missing {missing}"
                )
            col = {name: lowered.index(name) for name in required}
            var_col = lowered.index("variance") if "variance" in lowered else None
            groups: dict[str, dict[str, list[float]]] = {}
            for line_no, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) < len(header):
                    raise CsvFormatError(f"line {line_no}: expected {len(header)} cells")
                sid = row[col["id"]].strip()
                g = groups.setdefault(sid, {"t": [], "y": [], "v": []})
                g["t"].append(_parse_float(row[col["time"]], line_no, "time"))
                g["y"].append(_parse_float(row[col["value"]], line_no, "value"))
                if var_col is not None:
                    g["v"].append(_parse_float(row[var_col], line_no, "variance"))
            out = []
            for sid, g in groups.items():
                t = np.array(g["t"])
                if np.any(np.diff(t) <= 0.0):
                    raise CsvFormatError(
                        f"series {sid!r}: times must be strictly increasing"
                    )
                out.append(
                    TimeSeries(
                        t,
                        np.array(g["y"]),
                        np.array(g["v"]) if var_col is not None else None,
                        id=sid,
                    )
                )
            return out

        if format == "wide":
            if len(header) < 3 or lowered[0] != "id":
                raise CsvFormatError(
                    "line 1: wide format needs an 'id' column plus at least "
                    "two time columns"
                )
            times = np.array([_parse_wide_time(c, 1) for c in header[1:]])
            if np.any(np.diff(times) <= 0.0):
                raise CsvFormatError(
                    "line 1: wide-format header times must be strictly increasing"
                )
            out = []
            for line_no, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(header):
                    raise CsvFormatError(
                        f"line {line_no}: expected {len(header)} cells, got {len(row)}"
                    )
                values = np.array(
                    [_parse_float(c, line_no, "value") for c in row[1:]]
                )
                out.append(TimeSeries(times, values, id=row[0].strip()))
            return out

    raise ValueError(f"unknown format {format!r}")


def export_csv(series_list, path, format: str = "long") -> None:
    """Write series to CSV in the long format understood by :func:`ingest_csv`.

    Values use full float precision, so export followed by ingest
    reproduces the series exactly.
    """
    if format != "long":
        raise ValueError("only long-format export is supported")
    series_list = list(series_list)
    with_var = any(s.noise_variances is not None for s in series_list)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "time", "value", "variance"] if with_var else ["id", "time", "value"])
        for s in series_list:
            for i in range(len(s)):
                row = [s.id, repr(float(s.times[i])), repr(float(s.values[i]))]
                if with_var:
                    v = 0.0 if s.noise_variances is None else float(s.noise_variances[i])
                    row.append(repr(v))
                writer.writerow(row)


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

_AGGREGATE_FILES = {
    "overfit_lengthscale.csv": "overfit_fraction_lengthscale",
    "overfit_noise.csv": "overfit_fraction_noise",
    "low_loglik.csv": "low_loglik_fraction",
    "high_mse.csv": "high_mse_fraction",
    "win_loglik.csv": "win_fraction_loglik",
    "win_mse.csv": "win_fraction_mse",
    "failed.csv": "failed_fraction",
}

_RAW_COLUMNS = (
    "series_id",
    "n",
    "replicate",
    "scenario",
    "scenario_index",
    "failed",
    "length_scale",
    "signal_variance",
    "noise_variance",
    "log_marginal_likelihood",
    "predictive_log_likelihood",
    "mse",
    "flag_short_length_scale",
    "flag_tiny_noise",
    "length_scale_lower",
    "win_loglik",
    "win_mse",
    "all_scenarios_ok",
)


def _format_raw(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _cell_value(stats: CellStats, metric: str) -> float | None:
    if metric == "failed_fraction":
        return (stats.failed / stats.count) if stats.count else 0.0
    return getattr(stats, metric)


def emit_report(report: BatchReport, out_dir) -> list[str]:
    """Write the aggregate tables, the raw per-fit records and a text summary.

    One CSV per aggregate metric, rows = scenarios, columns = sample sizes
    (a single ``all`` column when the report has no sample-size grid).
    Fractions are printed with four decimal places.  Reports without
    held-out metrics (ingested data) skip the metric tables and print "."
    for over-fit cells that the scenario's constraints make impossible.
    Returns the list of files written.
    """
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []
    by_n = bool(report.n_values) and report.has_metrics
    columns = report.n_values if by_n else [None]
    col_names = [f"n={n}" for n in report.n_values] if by_n else ["all"]

    structural_metric = {
        "overfit_fraction_lengthscale": "lengthscale_impossible",
        "overfit_fraction_noise": "noise_impossible",
    }

    for filename, metric in _AGGREGATE_FILES.items():
        if not report.has_metrics and metric in (
            "low_loglik_fraction",
            "high_mse_fraction",
            "win_fraction_loglik",
            "win_fraction_mse",
        ):
            continue
        path = os.path.join(out_dir, filename)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario", *col_names])
            for label in report.scenario_labels:
                row = [label]
                for n in columns:
                    impossible = (
                        not report.has_metrics
                        and metric in structural_metric
                        and report.structural.get(label, {}).get(
                            structural_metric[metric], False
                        )
                    )
                    if impossible:
                        row.append(".")
                        continue
                    value = _cell_value(report.cell(label, n), metric)
                    row.append("" if value is None else f"{value:.4f}")
                writer.writerow(row)
        written.append(path)

    raw_path = os.path.join(out_dir, "replicates.csv")
    with open(raw_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_RAW_COLUMNS)
        for r in report.rows:
            writer.writerow([_format_raw(getattr(r, c)) for c in _RAW_COLUMNS])
    written.append(raw_path)

    summary_path = os.path.join(out_dir, "summary.txt")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("scenario sweep summary\n")
        fh.write(f"scenarios: {', '.join(report.scenario_labels)}\n")
        if by_n:
            fh.write(f"sample sizes: {report.n_values}\n")
        fh.write(f"fits recorded: {len(report.rows)}\n\n")
        for label in report.scenario_labels:
            fh.write(f"[{label}]\n")
            for n, name in zip(columns, col_names):
                stats = report.cell(label, n)
                parts = [
                    f"fits={stats.count}",
                    f"failed={stats.failed}",
                    f"overfit_l={stats.overfit_fraction_lengthscale:.4f}",
                    f"overfit_noise={stats.overfit_fraction_noise:.4f}",
                ]
                if stats.win_fraction_loglik is not None:
                    parts.append(f"win_loglik={stats.win_fraction_loglik:.4f}")
                if stats.win_fraction_mse is not None:
                    parts.append(f"win_mse={stats.win_fraction_mse:.4f}")
                fh.write(f"  {name}: " + "  ".join(parts) + "\n")
            fh.write("\n")
    written.append(summary_path)
    return written


def emit_fit_plotdata(
    series: TimeSeries,
    result: fitmod.FitResult,
    out_path,
    resolution: int = 200,
    pad_fraction: float = 0.1,
) -> None:
    """Write posterior curves for external plotting.

    Columns: time, mean, latent_sd, observed_sd, is_training_point,
    training_value.  The grid spans the observation window padded by
    ``pad_fraction`` on each side, with every training time included as its
    own row.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    noise = fitmod.result_noise_model(result, series)
    pad = pad_fraction * series.span
    grid = np.linspace(series.times[0] - pad, series.times[-1] + pad, int(resolution))
    train = series.times
    all_times = np.concatenate([grid, train])
    is_train = np.concatenate(
        [np.zeros(len(grid), dtype=bool), np.ones(len(train), dtype=bool)]
    )
    train_value = np.concatenate([np.full(len(grid), np.nan), series.values])
    order = np.argsort(all_times, kind="stable")

    post = gp.posterior_at(series, result.kernel, noise, all_times)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["time", "mean", "latent_sd", "observed_sd", "is_training_point", "training_value"]
        )
        for i in order:
            writer.writerow(
                [
                    repr(float(all_times[i])),
                    repr(float(post.mean[i])),
                    repr(float(math.sqrt(max(post.variance_latent[i], 0.0)))),
                    repr(float(math.sqrt(max(post.variance_observed[i], 0.0)))),
                    "1" if is_train[i] else "0",
                    "" if not is_train[i] else repr(float(train_value[i])),
                ]
            )


# ---------------------------------------------------------------------------
# flat key=value config files
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {
    "n_points": int,
    "interval_lo": float,
    "interval_hi": float,
    "noise_variance": float,
    "replicates": int,
    "test_lo": float,
    "test_hi": float,
    "test_count": int,
    "seed": int,
    "family": str,
    "nu": float,
    "alpha": float,
    "noise_bound_lo": float,
    "noise_bound_hi": float,
    "restarts": int,
    "loglik_threshold": float,
    "mse_threshold": float,
    "noise_flag_threshold": float,
    "n_grid": str,
    "out_dir": str,
    "parallelism": int,
}


def load_config(path) -> dict:
    """Parse a flat ``key = value`` config file ('#' starts a comment)."""
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise CsvFormatError(
                    f"line {line_no}: expected 'key = value', got {text!r}"
                )
            key, value = (part.strip() for part in text.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise CsvFormatError(
                    f"line {line_no}: unknown config key {key!r}"
                )
            try:
                out[key] = _CONFIG_KEYS[key](value)
            except ValueError:
                raise CsvFormatError(
                    f"line {line_no}: cannot parse value for {key!r} from {value!r}"
                ) from None
    return out


def config_from_mapping(mapping: dict) -> SyntheticConfig:
    """Build a SyntheticConfig from a flat mapping (config-file keys)."""
    base = SyntheticConfig()
    kwargs = {}
    if "n_points" in mapping:
        kwargs["n_points"] = int(mapping["n_points"])
    if "interval_lo" in mapping or "interval_hi" in mapping:
        kwargs["interval"] = (
            float(mapping.get("interval_lo", base.interval[0])),
            float(mapping.get("interval_hi", base.interval[1])),
        )
    if "noise_variance" in mapping:
        kwargs["noise_variance"] = float(mapping["noise_variance"])
    if "replicates" in mapping:
        kwargs["replicates"] = int(mapping["replicates"])
    if any(k in mapping for k in ("test_lo", "test_hi", "test_count")):
        kwargs["test_grid"] = (
            float(mapping.get("test_lo", base.test_grid[0])),
            float(mapping.get("test_hi", base.test_grid[1])),
            int(mapping.get("test_count", base.test_grid[2])),
        )
    for key in (
        "seed",
        "family",
        "alpha",
        "restarts",
        "loglik_threshold",
        "mse_threshold",
        "noise_flag_threshold",
    ):
        if key in mapping:
            kwargs[key] = mapping[key]
    if "nu" in mapping and mapping["nu"] is not None:
        kwargs["nu"] = float(mapping["nu"])
    if "noise_bound_lo" in mapping or "noise_bound_hi" in mapping:
        kwargs["noise_bounds"] = (
            float(mapping.get("noise_bound_lo", base.noise_bounds[0])),
            float(mapping.get("noise_bound_hi", base.noise_bounds[1])),
        )
    return replace(base, **kwargs)
