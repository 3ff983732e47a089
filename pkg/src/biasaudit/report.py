"""Audit pipeline orchestration and deterministic report emission.

``run_audit`` executes load -> group -> disaggregate -> bias measures ->
FDR grid -> NRB suite -> attack exposure and returns a ``BiasReport``.
``emit`` writes ``report.json`` plus CSV mirrors of each table/figure.
Identical inputs and config produce byte-identical files. Rates are
serialized both as fractions (machine field) and percent (display
field); costs, log ratios, and meta-measures are plain fractions.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Union

from .attack import GroupExposure, compare_group_exposure
from .config import AuditConfig, config_as_dict
from .detection import (
    GroupMetricVector,
    OperatingPoint,
    compute_sweep,
    disaggregate_at_threshold,
    disaggregate_trial_metric,
    split_scores,
    threshold_for_fpr,
)
from .errors import DataError, DegenerateGroupError
from .measures import (
    MEASURE_NAMES,
    BiasVector,
    compute_measure,
    g2avg_log_ratio,
    g2min_diff,
)
from .meta import FdrResult, NrbResult, fdr, nrb_suite
from .trials import (
    GroupedTrials,
    GroupKey,
    Label,
    assign_groups,
    load_metadata,
    load_trials,
)

SCHEMA_VERSION = 1

REPORT_JSON = "report.json"
TABLE_BASE_METRICS = "table_base_metrics.csv"
TABLE_BIAS_MEASURES = "table_bias_measures.csv"
TABLE_DECOMPOSITION = "table_threshold_decomposition.csv"
FIG_FDR_GRID = "fig_fdr_grid.csv"
FIG_NRB_SUITE = "fig_nrb_suite.csv"

# rate-valued metrics get a percent display field alongside the fraction
_RATE_METRICS_PREFIXES = ("eer", "fpr@", "fnr@")


@dataclass(frozen=True)
class ThresholdDecomposition:
    """Per-group FPR with its difference and log-ratio bias measures at one design FPR."""

    design_fpr: float
    operating_point: OperatingPoint
    fprs: GroupMetricVector
    diff: BiasVector
    log_ratio: BiasVector


@dataclass(frozen=True)
class ExposureBlock:
    design_fpr: float
    threshold: float
    entries: tuple[GroupExposure, ...]


@dataclass
class BiasReport:
    """Full audit result; every table the emitter writes lives here."""

    config: AuditConfig
    warnings: list[str]
    group_sizes: dict[GroupKey, tuple[int, int]]
    unassigned_count: int
    pooled_counts: tuple[int, int]
    base_metrics: list[GroupMetricVector]
    bias_vectors: list[BiasVector]
    decomposition: list[ThresholdDecomposition]
    fdr_grid: list[FdrResult]
    nrb_suite: list[NrbResult]
    exposures: list[ExposureBlock]


def _is_rate_metric(name: str) -> bool:
    return any(name == p or name.startswith(p) for p in _RATE_METRICS_PREFIXES)


def _drop_degenerate(grouped: GroupedTrials, strict: bool) -> tuple[GroupedTrials, list[str]]:
    """Move groups lacking targets or nontargets out of the group map.

    Their trials still count toward every pooled statistic (they join
    the unassigned bucket), they just get no per-group metrics. Under
    strict mode a degenerate group is an error instead.
    """
    warnings: list[str] = []
    kept: dict[GroupKey, list] = {}
    displaced: list = []
    for key, trials in grouped.groups.items():
        n_target = sum(1 for t in trials if t.label is Label.TARGET)
        if 0 < n_target < len(trials):
            kept[key] = trials
            continue
        if strict:
            raise DegenerateGroupError(key)
        side = "target" if n_target == 0 else "nontarget"
        warnings.append(
            f"group {key} has no {side} trials; excluded from per-group metrics "
            f"({len(trials)} trials kept in pooled statistics)"
        )
        displaced.extend(trials)
    if not kept:
        raise DataError("no group has both target and nontarget trials")
    filtered = GroupedTrials(
        groups=kept,
        unassigned=grouped.unassigned + displaced,
        policy=grouped.policy,
        attribute_names=grouped.attribute_names,
    )
    return filtered, warnings


def run_audit(config: AuditConfig) -> BiasReport:
    """Run the full audit pipeline described by ``config``."""
    try:
        trials = load_trials(config.scores_path)
    except OSError as exc:
        raise DataError(f"cannot read scores file {config.scores_path}: {exc}") from exc
    except DataError as exc:
        raise DataError(f"in {config.scores_path}: {exc}") from exc
    try:
        metadata = load_metadata(config.metadata_path)
    except OSError as exc:
        raise DataError(f"cannot read metadata file {config.metadata_path}: {exc}") from exc
    except DataError as exc:
        raise DataError(f"in {config.metadata_path}: {exc}") from exc

    grouped = assign_groups(trials, metadata, config.group_attributes, config.policy)
    grouped, warnings = _drop_degenerate(grouped, strict=config.strict)
    if grouped.unassigned:
        warnings.append(
            f"{len(grouped.unassigned)} trials are unassigned; they count toward "
            "pooled metrics only"
        )

    group_sizes = {
        key: (
            sum(1 for t in trials if t.label is Label.TARGET),
            sum(1 for t in trials if t.label is Label.NONTARGET),
        )
        for key, trials in grouped.groups.items()
    }
    pooled_tar, pooled_non = split_scores(grouped.all_trials())
    pooled_curve = compute_sweep(pooled_tar, pooled_non)

    # base metrics: per-group EER and minCDet, plus FPR/FNR at each design FPR
    base_metrics: list[GroupMetricVector] = [
        disaggregate_trial_metric(grouped, "eer"),
        disaggregate_trial_metric(grouped, "min_cdet", config.dcf),
    ]
    operating_points: dict[float, OperatingPoint] = {}
    for design in sorted(config.design_fprs, reverse=True):
        op = threshold_for_fpr(pooled_curve, design)
        operating_points[design] = op
        for which in ("fpr", "fnr"):
            base_metrics.append(
                disaggregate_at_threshold(
                    grouped, op.threshold, which, label=f"{which}@{design:g}"
                )
            )

    bias_vectors = [
        compute_measure(measure, vector, config.zero_policy, config.average_mode)
        for vector in base_metrics
        for measure in MEASURE_NAMES
    ]

    decomposition = []
    for design in sorted(config.design_fprs, reverse=True):
        op = operating_points[design]
        fprs = next(v for v in base_metrics if v.metric_name == f"fpr@{design:g}")
        decomposition.append(
            ThresholdDecomposition(
                design_fpr=design,
                operating_point=op,
                fprs=fprs,
                diff=g2min_diff(fprs),
                log_ratio=g2avg_log_ratio(fprs, config.zero_policy, config.average_mode),
            )
        )

    grid = []
    for design in sorted(config.design_fprs):
        op = operating_points[design]
        fprs = next(v for v in base_metrics if v.metric_name == f"fpr@{design:g}")
        fnrs = next(v for v in base_metrics if v.metric_name == f"fnr@{design:g}")
        for alpha in sorted(config.alphas):
            grid.append(fdr(fprs, fnrs, alpha, design, op.threshold))

    suite = nrb_suite(
        grouped,
        design_fprs=config.design_fprs,
        dcf=config.dcf,
        zero_policy=config.zero_policy,
        average_mode=config.average_mode,
    )
    for result in suite:
        if result.zero_value_groups:
            warnings.append(
                f"nrb({result.metric_name}) is infinite; zero-valued groups: "
                + ", ".join(str(g) for g in result.zero_value_groups)
            )

    exposures = []
    for design in sorted(config.design_fprs, reverse=True):
        op = operating_points[design]
        fprs = next(v for v in base_metrics if v.metric_name == f"fpr@{design:g}")
        entries = compare_group_exposure(
            fprs,
            attempts_per_hour=config.attempts_per_hour,
            target_probability=config.target_probability,
        )
        if any(e.zero_fpr for e in entries):
            warnings.append(
                f"fpr@{design:g}: zero-FPR groups have unbounded expected attack "
                "time; flagged in the exposure table"
            )
        exposures.append(
            ExposureBlock(design_fpr=design, threshold=op.threshold, entries=tuple(entries))
        )

    return BiasReport(
        config=config,
        warnings=warnings,
        group_sizes=group_sizes,
        unassigned_count=len(grouped.unassigned),
        pooled_counts=(int(pooled_tar.size), int(pooled_non.size)),
        base_metrics=base_metrics,
        bias_vectors=bias_vectors,
        decomposition=decomposition,
        fdr_grid=grid,
        nrb_suite=suite,
        exposures=exposures,
    )


def _json_safe(value: Any) -> Any:
    """Replace non-finite floats with strings so report.json stays strict JSON."""
    if isinstance(value, float):
        if math.isinf(value):
            return "Infinity" if value > 0 else "-Infinity"
        if math.isnan(value):
            return "NaN"
        return value
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _metric_entry(name: str, value: float) -> dict[str, Any]:
    if _is_rate_metric(name):
        return {"unit": "fraction", "fraction": value, "percent": value * 100.0}
    return {"unit": "fraction", "fraction": value}


def report_to_dict(report: BiasReport) -> dict[str, Any]:
    """JSON-ready view of the report (schema documented in the README)."""
    payload: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "config": config_as_dict(report.config),
        "warnings": list(report.warnings),
        "groups": [
            {
                "group": key.label(),
                "n_target": counts[0],
                "n_nontarget": counts[1],
            }
            for key, counts in sorted(report.group_sizes.items())
        ],
        "unassigned_trials": report.unassigned_count,
        "pooled": {
            "n_target": report.pooled_counts[0],
            "n_nontarget": report.pooled_counts[1],
        },
        "base_metrics": [
            {
                "metric": v.metric_name,
                "aggregate": _metric_entry(v.metric_name, v.aggregate),
                "per_group": [
                    {"group": g.label(), **_metric_entry(v.metric_name, v.per_group[g])}
                    for g in sorted(v.per_group)
                ],
            }
            for v in report.base_metrics
        ],
        "bias_measures": [
            {
                "measure": b.measure_name,
                "metric": b.metric_name,
                "reference": b.reference,
                "per_group": [
                    {"group": g.label(), "value": b.per_group[g]}
                    for g in sorted(b.per_group)
                ],
            }
            for b in report.bias_vectors
        ],
        "threshold_decomposition": [
            {
                "design_fpr": d.design_fpr,
                "threshold": d.operating_point.threshold,
                "pooled_fpr": d.operating_point.fpr,
                "pooled_fnr": d.operating_point.fnr,
                "rows": [
                    {
                        "group": g.label(),
                        "fpr": d.fprs.per_group[g],
                        "g2min_diff": d.diff.per_group[g],
                        "g2avg_log_ratio": d.log_ratio.per_group[g],
                    }
                    for g in sorted(d.fprs.per_group)
                ],
            }
            for d in report.decomposition
        ],
        "fdr_grid": [
            {
                "design_fpr": r.design_fpr,
                "alpha": r.alpha,
                "threshold": r.threshold,
                "max_delta_fpr": r.max_delta_fpr,
                "max_delta_fnr": r.max_delta_fnr,
                "fdr": r.fdr,
            }
            for r in report.fdr_grid
        ],
        "nrb_suite": [
            {
                "metric": r.metric_name,
                "group_count": r.group_count,
                "nrb": r.nrb,
                "per_group_log_ratios": [
                    {"group": g.label(), "value": r.per_group_log_ratios[g]}
                    for g in sorted(r.per_group_log_ratios)
                ],
                "zero_value_groups": [g.label() for g in r.zero_value_groups],
            }
            for r in report.nrb_suite
        ],
        "attack_scenarios": [
            {
                "design_fpr": block.design_fpr,
                "threshold": block.threshold,
                "attempts_per_hour": report.config.attempts_per_hour,
                "target_probability": report.config.target_probability,
                "rows": [
                    {
                        "group": e.group.label(),
                        "fpr": e.fpr,
                        "expected_attempts": e.expected_attempts,
                        "expected_hours": e.expected_hours,
                        "hours_to_target_probability": e.hours_to_probability,
                        "zero_fpr": e.zero_fpr,
                    }
                    for e in block.entries
                ],
            }
            for block in report.exposures
        ],
    }
    return _json_safe(payload)


def _fmt(value: float) -> str:
    """Shortest round-trip decimal form; deterministic."""
    return repr(float(value))


def _write_csv(path: Path, header: list[str], rows: list[list[Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_base_metrics_csv(report: BiasReport, output_dir: Union[str, Path]) -> Path:
    rows: list[list[Any]] = []
    for v in report.base_metrics:
        is_rate = _is_rate_metric(v.metric_name)
        for g in sorted(v.per_group):
            value = v.per_group[g]
            rows.append(
                [v.metric_name, g.label(), _fmt(value), _fmt(value * 100.0) if is_rate else ""]
            )
        rows.append(
            [v.metric_name, "pooled", _fmt(v.aggregate),
             _fmt(v.aggregate * 100.0) if is_rate else ""]
        )
    path = Path(output_dir) / TABLE_BASE_METRICS
    _write_csv(path, ["metric", "group", "value_fraction", "value_percent"], rows)
    return path


def write_bias_measures_csv(report: BiasReport, output_dir: Union[str, Path]) -> Path:
    rows = [
        [b.measure_name, b.metric_name, g.label(), _fmt(b.per_group[g]), b.reference]
        for b in report.bias_vectors
        for g in sorted(b.per_group)
    ]
    path = Path(output_dir) / TABLE_BIAS_MEASURES
    _write_csv(path, ["measure", "metric", "group", "value", "reference"], rows)
    return path


def write_decomposition_csv(report: BiasReport, output_dir: Union[str, Path]) -> Path:
    rows = [
        [
            _fmt(d.design_fpr),
            _fmt(d.operating_point.threshold),
            g.label(),
            _fmt(d.fprs.per_group[g]),
            _fmt(d.diff.per_group[g]),
            _fmt(d.log_ratio.per_group[g]),
        ]
        for d in report.decomposition
        for g in sorted(d.fprs.per_group)
    ]
    path = Path(output_dir) / TABLE_DECOMPOSITION
    _write_csv(
        path,
        ["design_fpr", "threshold", "group", "fpr", "g2min_diff", "g2avg_log_ratio"],
        rows,
    )
    return path


def write_fdr_grid_csv(report: BiasReport, output_dir: Union[str, Path]) -> Path:
    rows = [[_fmt(r.design_fpr), _fmt(r.alpha), _fmt(r.fdr)] for r in report.fdr_grid]
    path = Path(output_dir) / FIG_FDR_GRID
    _write_csv(path, ["design_fpr", "alpha", "fdr"], rows)
    return path


def write_nrb_suite_csv(report: BiasReport, output_dir: Union[str, Path]) -> Path:
    rows = [[r.metric_name, _fmt(r.nrb)] for r in report.nrb_suite]
    path = Path(output_dir) / FIG_NRB_SUITE
    _write_csv(path, ["metric_name", "nrb"], rows)
    return path


def emit(report: BiasReport, output_dir: Union[str, Path]) -> list[Path]:
    """Write the report files into ``output_dir`` and return their paths.

    Always: report.json, table_base_metrics.csv, table_bias_measures.csv,
    table_threshold_decomposition.csv. With ``emit_figures`` (default):
    fig_fdr_grid.csv and fig_nrb_suite.csv.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    report_path = out / REPORT_JSON
    report_path.write_text(
        json.dumps(report_to_dict(report), indent=2, allow_nan=False) + "\n",
        encoding="utf-8",
    )
    written.append(report_path)

    written.append(write_base_metrics_csv(report, out))
    written.append(write_bias_measures_csv(report, out))
    written.append(write_decomposition_csv(report, out))
    if report.config.emit_figures:
        written.append(write_fdr_grid_csv(report, out))
        written.append(write_nrb_suite_csv(report, out))
    return written
