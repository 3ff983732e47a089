"""Command-line entry point.

Subcommands: ``audit`` (full pipeline), ``metrics``, ``fdr``, ``nrb``
(single slices of the pipeline), ``scenario`` (attack exposure from
hand-given FPRs), and ``synth`` (fixture generation). All pipeline
subcommands read the same key=value config file; flags override it.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 degenerate-group error under ``--strict``.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Sequence

import click

from .attack import AttackScenario, attempts_for_probability, expected_time_to_success
from .config import AuditConfig, build_config, parse_config_file
from .errors import (
    AuditError,
    ConfigError,
    DataError,
    DegenerateGroupError,
)
from .report import (
    emit,
    run_audit,
    write_base_metrics_csv,
    write_fdr_grid_csv,
    write_nrb_suite_csv,
)
from .synth import generate, load_synth_spec
from .trials import GroupingPolicy, write_metadata, write_trials


def _config_options(command):
    opts = [
        click.option("--config", "config_path", type=click.Path(), default=None,
                     help="key=value config file"),
        click.option("--scores", default=None, help="trial scores CSV"),
        click.option("--metadata", default=None, help="speaker metadata CSV"),
        click.option("--groups", default=None,
                     help="comma-separated grouping attributes, e.g. gender,nationality"),
        click.option("--policy", default=None,
                     type=click.Choice(["both-match", "enrollment-only"])),
        click.option("--design-fprs", default=None, help="comma-separated design FPRs"),
        click.option("--alphas", default=None, help="comma-separated FDR alphas"),
        click.option("--dcf-pt", type=float, default=None, help="DCF target prior"),
        click.option("--dcf-cmiss", type=float, default=None, help="DCF miss cost"),
        click.option("--dcf-cfa", type=float, default=None, help="DCF false-accept cost"),
        click.option("--dcf-normalize/--no-dcf-normalize", default=None),
        click.option("--zero-policy", default=None,
                     type=click.Choice(["error", "infinity", "smooth"])),
        click.option("--average-mode", default=None,
                     type=click.Choice(["pooled", "group_mean"])),
        click.option("--out", default=None, help="output directory"),
        click.option("--preset", default=None, type=click.Choice(["paper"]),
                     help="pin grids to the standard five-by-five preset"),
        click.option("--strict/--no-strict", default=None,
                     help="treat degenerate groups as fatal"),
    ]
    for opt in reversed(opts):
        command = opt(command)
    return command


def _parse_float_list(raw: str | None) -> tuple[float, ...] | None:
    if raw is None:
        return None
    try:
        return tuple(float(p) for p in raw.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse float list from {raw!r}") from exc


def _assemble_config(config_path, preset, **flags) -> AuditConfig:
    file_values = parse_config_file(config_path) if config_path else None
    groups = flags.pop("groups")
    policy = flags.pop("policy")
    overrides = {
        "scores_path": flags.pop("scores"),
        "metadata_path": flags.pop("metadata"),
        "group_attributes": tuple(
            p.strip() for p in groups.split(",") if p.strip()
        ) if groups else None,
        "design_fprs": _parse_float_list(flags.pop("design_fprs")),
        "alphas": _parse_float_list(flags.pop("alphas")),
        "dcf_p_target": flags.pop("dcf_pt"),
        "dcf_c_miss": flags.pop("dcf_cmiss"),
        "dcf_c_fa": flags.pop("dcf_cfa"),
        "dcf_normalize": flags.pop("dcf_normalize"),
        "zero_policy": flags.pop("zero_policy"),
        "average_mode": flags.pop("average_mode"),
        "output_dir": flags.pop("out"),
        "strict": flags.pop("strict"),
    }
    if policy is not None:
        overrides["policy"] = GroupingPolicy(policy)
    return build_config(file_values, preset=preset, **overrides)


@click.group()
@click.version_option(package_name="biasaudit")
def cli():
    """Audit score-based verification systems for group bias."""


@cli.command()
@_config_options
def audit(config_path, preset, **flags):
    """Run the full audit and write the report file set."""
    config = _assemble_config(config_path, preset, **flags)
    report = run_audit(config)
    written = emit(report, config.output_dir)
    for warning in report.warnings:
        click.echo(f"warning: {warning}", err=True)
    for path in written:
        click.echo(f"wrote {path}")


@cli.command()
@_config_options
def metrics(config_path, preset, **flags):
    """Compute disaggregated base metrics only."""
    config = _assemble_config(config_path, preset, **flags)
    report = run_audit(config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    click.echo(f"wrote {write_base_metrics_csv(report, out)}")


@cli.command()
@_config_options
def fdr(config_path, preset, **flags):
    """Compute the FDR grid only."""
    config = _assemble_config(config_path, preset, **flags)
    report = run_audit(config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    click.echo(f"wrote {write_fdr_grid_csv(report, out)}")


@cli.command()
@_config_options
def nrb(config_path, preset, **flags):
    """Compute the NRB base-metric suite only."""
    config = _assemble_config(config_path, preset, **flags)
    report = run_audit(config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    click.echo(f"wrote {write_nrb_suite_csv(report, out)}")


@cli.command()
@click.option("--fpr", "fprs", multiple=True, required=True,
              help="per-attempt false-accept probability, optionally LABEL=VALUE; repeatable")
@click.option("--rate", default=60.0, show_default=True,
              help="attack attempts per hour")
@click.option("--target-probability", default=0.5, show_default=True,
              help="success probability for the geometric model")
@click.option("--attempts", type=int, default=None,
              help="also report the success probability after this many attempts")
@click.option("--json", "as_json", is_flag=True, help="emit JSON instead of text")
def scenario(fprs, rate, target_probability, attempts, as_json):
    """Attack-exposure arithmetic for one or more FPRs."""
    parsed: list[tuple[str, float]] = []
    for i, raw in enumerate(fprs):
        label, _, value = raw.rpartition("=")
        try:
            parsed.append((label or f"fpr{i}", float(value)))
        except ValueError as exc:
            raise ConfigError(f"cannot parse --fpr {raw!r}") from exc

    rows = []
    for label, fpr_value in parsed:
        try:
            s = AttackScenario(fpr=fpr_value, attempts_per_hour=rate)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        expected_attempts, expected_hours = expected_time_to_success(s)
        n_q = attempts_for_probability(s, target_probability)
        row = {
            "label": label,
            "fpr": fpr_value,
            "expected_attempts": expected_attempts,
            "expected_hours": expected_hours,
            "attempts_to_target_probability": n_q,
            "hours_to_target_probability": n_q / rate,
        }
        if attempts is not None:
            from .attack import success_probability

            row["success_probability_at_attempts"] = success_probability(s, attempts)
        rows.append(row)
    rows.sort(key=lambda r: (-r["fpr"], r["label"]))

    if as_json:
        click.echo(json.dumps({"attempts_per_hour": rate, "rows": rows}, indent=2))
        return
    click.echo(f"attempts/hour: {rate:g}   target probability: {target_probability:g}")
    for row in rows:
        line = (
            f"{row['label']}: fpr={row['fpr']:g}  "
            f"expected {row['expected_attempts']:.6g} attempts "
            f"({row['expected_hours']:.4g} h); "
            f"p>={target_probability:g} after {row['attempts_to_target_probability']} "
            f"attempts ({row['hours_to_target_probability']:.4g} h)"
        )
        if "success_probability_at_attempts" in row:
            line += (
                f"; p(success in {attempts}) = "
                f"{row['success_probability_at_attempts']:.4f}"
            )
        click.echo(line)


@cli.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(),
              help="JSON synthesis spec (see README for the schema)")
@click.option("--seed", type=int, default=None, help="override the seed in the spec file")
@click.option("--out", default="synth_out", show_default=True, help="output directory")
def synth(spec_path, seed, out):
    """Generate synthetic scores and metadata CSVs from a JSON spec."""
    try:
        spec = load_synth_spec(spec_path, seed=seed)
    except OSError as exc:
        raise DataError(f"cannot read spec {spec_path}: {exc}") from exc
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"bad synthesis spec {spec_path}: {exc}") from exc
    trials, metadata = generate(spec)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    scores_path = out_dir / "scores.csv"
    metadata_path = out_dir / "metadata.csv"
    write_trials(trials, scores_path)
    write_metadata(metadata, metadata_path)
    click.echo(f"wrote {scores_path} ({len(trials)} trials)")
    click.echo(f"wrote {metadata_path} ({len(metadata)} speakers)")


def main(argv: Sequence[str] | None = None) -> int:
    """Console entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except DegenerateGroupError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except AuditError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
