"""End-to-end tests for the audit pipeline and report emission."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from biasaudit import (
    AuditConfig,
    DataError,
    DegenerateGroupError,
    GroupingPolicy,
    GroupScoreModel,
    SynthSpec,
    emit,
    generate,
    report_to_dict,
    run_audit,
    write_metadata,
    write_trials,
)
from biasaudit.report import (
    FIG_FDR_GRID,
    FIG_NRB_SUITE,
    REPORT_JSON,
    TABLE_BASE_METRICS,
    TABLE_BIAS_MEASURES,
    TABLE_DECOMPOSITION,
)
from helpers import gk


def write_two_group_fixture(tmp_path, n=4000, seed=414):
    spec = SynthSpec(
        models=(
            GroupScoreModel(gk(gender="f", nationality="x"), 2.0, 0.0, 1.0, n, n),
            GroupScoreModel(gk(gender="m", nationality="y"), 1.0, 0.0, 1.0, n, n),
        ),
        seed=seed,
    )
    trials, metadata = generate(spec)
    scores_path = tmp_path / "scores.csv"
    metadata_path = tmp_path / "metadata.csv"
    write_trials(trials, scores_path)
    write_metadata(metadata, metadata_path)
    return scores_path, metadata_path


def base_config(tmp_path, **kwargs):
    scores_path, metadata_path = write_two_group_fixture(tmp_path)
    defaults = dict(
        scores_path=str(scores_path),
        metadata_path=str(metadata_path),
        group_attributes=("gender", "nationality"),
        design_fprs=(0.05, 0.1),
        alphas=(0.0, 0.5, 1.0),
        output_dir=str(tmp_path / "out"),
    )
    defaults.update(kwargs)
    return AuditConfig(**defaults)


def test_run_audit_rank_preservation_across_measures(tmp_path):
    report = run_audit(base_config(tmp_path))
    payload = report_to_dict(report)
    metrics = {e["metric"]: e for e in payload["base_metrics"]}
    measures: dict[tuple[str, str], dict[str, float]] = {}
    for entry in payload["bias_measures"]:
        measures[(entry["measure"], entry["metric"])] = {
            row["group"]: row["value"] for row in entry["per_group"]
        }
    for metric_name, metric_entry in metrics.items():
        raw = {row["group"]: row["fraction"] for row in metric_entry["per_group"]}
        by_raw = sorted(raw, key=lambda g: (raw[g], g))
        diff = measures[("g2min_diff", metric_name)]
        ratio = measures[("g2avg_ratio", metric_name)]
        log_ratio = measures[("g2avg_log_ratio", metric_name)]
        assert sorted(diff, key=lambda g: (diff[g], g)) == by_raw
        assert sorted(ratio, key=lambda g: (ratio[g], g)) == by_raw
        assert sorted(log_ratio, key=lambda g: (-log_ratio[g], g)) == by_raw


def test_run_audit_single_group_with_unassigned(tmp_path):
    n = 3000
    spec = SynthSpec(
        models=(GroupScoreModel(gk(cohort="a"), 1.0, 0.0, 1.0, n, n),), seed=55
    )
    trials, metadata = generate(spec)
    # drop metadata for a slice of speakers so their trials go unassigned
    known = {m.speaker_id for m in metadata[: len(metadata) - 800]}
    metadata = [m for m in metadata if m.speaker_id in known]
    scores_path, metadata_path = tmp_path / "s.csv", tmp_path / "m.csv"
    write_trials(trials, scores_path)
    write_metadata(metadata, metadata_path)

    config = AuditConfig(
        scores_path=str(scores_path),
        metadata_path=str(metadata_path),
        group_attributes=("cohort",),
        design_fprs=(0.1, 0.25),
        alphas=(0.0, 1.0),
        output_dir=str(tmp_path / "out"),
    )
    report = run_audit(config)
    assert any("unassigned" in w for w in report.warnings)
    assert all(r.fdr == 1.0 for r in report.fdr_grid)
    # single group: the suite value is the lone group's absolute log ratio
    for result in report.nrb_suite:
        lone = next(iter(result.per_group_log_ratios.values()))
        assert result.nrb == abs(lone)
        assert result.group_count == 1


def test_run_audit_missing_scores_file(tmp_path):
    config = AuditConfig(
        scores_path=str(tmp_path / "nope.csv"),
        metadata_path=str(tmp_path / "also_nope.csv"),
        group_attributes=("gender",),
        output_dir=str(tmp_path / "out"),
    )
    with pytest.raises(DataError) as exc:
        run_audit(config)
    assert "nope.csv" in str(exc.value)


def degenerate_fixture(tmp_path):
    """A healthy group plus a group holding only target trials."""
    scores_path, metadata_path = tmp_path / "s.csv", tmp_path / "m.csv"
    n = 1500
    spec = SynthSpec(
        models=(GroupScoreModel(gk(cohort="good"), 1.0, 0.0, 1.0, n, n),), seed=3
    )
    trials, metadata = generate(spec)
    from biasaudit import Label, SpeakerMetadata, TrialRecord

    extra_meta = [SpeakerMetadata(f"bad{i}", {"cohort": "bad"}) for i in range(4)]
    extra = [
        TrialRecord("bad0", "bad1", Label.TARGET, 0.4),
        TrialRecord("bad2", "bad3", Label.TARGET, 1.1),
    ]
    write_trials(trials + extra, scores_path)
    write_metadata(metadata + extra_meta, metadata_path)
    return scores_path, metadata_path


def test_degenerate_group_warns_and_is_pooled_only(tmp_path):
    scores_path, metadata_path = degenerate_fixture(tmp_path)
    config = AuditConfig(
        scores_path=str(scores_path),
        metadata_path=str(metadata_path),
        group_attributes=("cohort",),
        design_fprs=(0.1,),
        alphas=(0.5,),
        output_dir=str(tmp_path / "out"),
    )
    report = run_audit(config)
    assert any("cohort=bad" in w for w in report.warnings)
    assert [k.label() for k in report.group_sizes] == ["cohort=good"]
    # the two displaced trials still count toward the pooled population
    assert report.pooled_counts[0] == 1500 + 2


def test_degenerate_group_raises_under_strict(tmp_path):
    scores_path, metadata_path = degenerate_fixture(tmp_path)
    config = AuditConfig(
        scores_path=str(scores_path),
        metadata_path=str(metadata_path),
        group_attributes=("cohort",),
        design_fprs=(0.1,),
        alphas=(0.5,),
        output_dir=str(tmp_path / "out"),
        strict=True,
    )
    with pytest.raises(DegenerateGroupError):
        run_audit(config)


def test_emit_writes_six_deterministic_files(tmp_path):
    config = base_config(tmp_path)
    report = run_audit(config)
    first = emit(report, tmp_path / "out1")
    assert [p.name for p in first] == [
        REPORT_JSON, TABLE_BASE_METRICS, TABLE_BIAS_MEASURES,
        TABLE_DECOMPOSITION, FIG_FDR_GRID, FIG_NRB_SUITE,
    ]
    second = emit(run_audit(config), tmp_path / "out2")
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()
    # LF line endings everywhere
    for path in first:
        assert b"\r" not in path.read_bytes()


def test_emit_figures_flag_skips_figure_files(tmp_path):
    config = base_config(tmp_path, emit_figures=False)
    report = run_audit(config)
    written = emit(report, tmp_path / "out")
    assert [p.name for p in written] == [
        REPORT_JSON, TABLE_BASE_METRICS, TABLE_BIAS_MEASURES, TABLE_DECOMPOSITION,
    ]


def test_fdr_grid_csv_has_a_row_per_cell(tmp_path):
    config = base_config(
        tmp_path,
        design_fprs=(0.001, 0.01, 0.025, 0.05, 0.1),
        alphas=(0.0, 0.25, 0.5, 0.75, 1.0),
    )
    report = run_audit(config)
    paths = emit(report, config.output_dir)
    grid_csv = next(p for p in paths if p.name == FIG_FDR_GRID)
    lines = grid_csv.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "design_fpr,alpha,fdr"
    assert len(lines) == 1 + 25


def test_report_json_is_strict_json_and_internally_consistent(tmp_path):
    config = base_config(tmp_path)
    report = run_audit(config)
    paths = emit(report, config.output_dir)
    payload = json.loads(paths[0].read_text(encoding="utf-8"))
    assert payload["schema_version"] == 1
    assert payload["config"]["groups"] == ["gender", "nationality"]

    metrics = {e["metric"]: e for e in payload["base_metrics"]}
    for entry in payload["bias_measures"]:
        base = metrics[entry["metric"]]
        raw = {r["group"]: r["fraction"] for r in base["per_group"]}
        aggregate = base["aggregate"]["fraction"]
        got = {r["group"]: r["value"] for r in entry["per_group"]}
        if entry["measure"] == "g2min_diff":
            best = min(raw.values())
            expected = {g: v - best for g, v in raw.items()}
            expected[min(g for g, v in raw.items() if v == best)] = 0.0
        elif entry["measure"] == "g2avg_ratio":
            expected = {g: v / aggregate for g, v in raw.items()}
        else:
            expected = {g: -math.log(v / aggregate) for g, v in raw.items()}
        assert got == expected


def test_report_unit_discipline(tmp_path):
    config = base_config(tmp_path)
    payload = report_to_dict(run_audit(config))
    for entry in payload["base_metrics"]:
        rows = entry["per_group"] + [entry["aggregate"]]
        for row in rows:
            if entry["metric"] == "min_cdet":
                assert "percent" not in row
            else:
                assert row["percent"] == row["fraction"] * 100.0
            assert row["unit"] == "fraction"


def test_enrollment_only_policy_flows_through(tmp_path):
    scores_path, metadata_path = write_two_group_fixture(tmp_path)
    config = AuditConfig(
        scores_path=str(scores_path),
        metadata_path=str(metadata_path),
        group_attributes=("gender",),
        policy=GroupingPolicy.ENROLLMENT_ONLY,
        design_fprs=(0.1,),
        alphas=(0.5,),
        output_dir=str(tmp_path / "out"),
    )
    report = run_audit(config)
    assert report.config.policy is GroupingPolicy.ENROLLMENT_ONLY
    assert {k.label() for k in report.group_sizes} == {"gender=f", "gender=m"}
