"""Audit configuration: defaults, flat key=value config files, overrides.

Config files are UTF-8 text, one ``key = value`` pair per line, ``#``
comments and blank lines ignored. List values are comma-separated.
Recognized keys match the dataclass fields below (with ``scores``,
``metadata``, ``groups`` and ``out`` as the path/list spellings).
Defaults reproduce the standard audit preset: design FPRs
{0.001, 0.01, 0.025, 0.05, 0.1} and alphas {0, 0.25, 0.5, 0.75, 1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Union

from .detection import DcfParams
from .errors import ConfigError
from .measures import AVERAGE_MODES, ZERO_POLICIES
from .meta import DEFAULT_ALPHAS, DEFAULT_DESIGN_FPRS
from .trials import GroupingPolicy

PAPER_PRESET = {
    "design_fprs": DEFAULT_DESIGN_FPRS,
    "alphas": DEFAULT_ALPHAS,
}


@dataclass(frozen=True)
class AuditConfig:
    """Everything one audit run needs; echoed verbatim into the report."""

    scores_path: str
    metadata_path: str
    group_attributes: tuple[str, ...]
    policy: GroupingPolicy = GroupingPolicy.BOTH_MATCH
    dcf: DcfParams = field(default_factory=DcfParams)
    design_fprs: tuple[float, ...] = DEFAULT_DESIGN_FPRS
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    zero_policy: str = "error"
    average_mode: str = "pooled"
    output_dir: str = "audit_out"
    emit_figures: bool = True
    attempts_per_hour: float = 60.0
    target_probability: float = 0.5
    strict: bool = False

    def __post_init__(self):
        if not self.scores_path or not self.metadata_path:
            raise ConfigError("scores and metadata paths must be nonempty")
        if not self.group_attributes:
            raise ConfigError("at least one group attribute is required")
        if not self.design_fprs or any(not 0.0 < f <= 1.0 for f in self.design_fprs):
            raise ConfigError("design_fprs must be nonempty, each in (0, 1]")
        if not self.alphas or any(not 0.0 <= a <= 1.0 for a in self.alphas):
            raise ConfigError("alphas must be nonempty, each in [0, 1]")
        if self.zero_policy not in ZERO_POLICIES:
            raise ConfigError(f"zero_policy must be one of {ZERO_POLICIES}")
        if self.average_mode not in AVERAGE_MODES:
            raise ConfigError(f"average_mode must be one of {AVERAGE_MODES}")
        if not self.attempts_per_hour > 0.0:
            raise ConfigError("attempts_per_hour must be positive")
        if not 0.0 < self.target_probability < 1.0:
            raise ConfigError("target_probability must lie in (0, 1)")


def parse_config_file(path: Union[str, Path]) -> dict[str, str]:
    """Read a flat key=value config file into a string mapping."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = stripped.partition("=")
        values[key.strip().lower()] = value.strip()
    return values


def _parse_bool(raw: str, key: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: cannot parse boolean from {raw!r}")


def _parse_floats(raw: str, key: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in raw.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse float list from {raw!r}") from exc


def _parse_policy(raw: str) -> GroupingPolicy:
    normalized = raw.strip().lower().replace("_", "-")
    for policy in GroupingPolicy:
        if policy.value == normalized:
            return policy
    raise ConfigError(
        f"policy must be one of {[p.value for p in GroupingPolicy]}, got {raw!r}"
    )


def build_config(
    file_values: Mapping[str, str] | None = None,
    preset: str | None = None,
    **overrides: Any,
) -> AuditConfig:
    """Merge defaults, config-file values, a preset, and explicit overrides.

    Precedence, lowest to highest: defaults, config file, preset,
    overrides (pass None to leave a field alone).
    """
    merged: dict[str, Any] = {}

    if file_values:
        parsers = {
            "scores": ("scores_path", str),
            "metadata": ("metadata_path", str),
            "groups": ("group_attributes", lambda raw: tuple(
                p.strip() for p in raw.split(",") if p.strip()
            )),
            "policy": ("policy", _parse_policy),
            "design_fprs": ("design_fprs", lambda raw: _parse_floats(raw, "design_fprs")),
            "alphas": ("alphas", lambda raw: _parse_floats(raw, "alphas")),
            "dcf_c_miss": ("dcf_c_miss", float),
            "dcf_c_fa": ("dcf_c_fa", float),
            "dcf_p_target": ("dcf_p_target", float),
            "dcf_normalize": ("dcf_normalize", lambda raw: _parse_bool(raw, "dcf_normalize")),
            "zero_policy": ("zero_policy", str),
            "average_mode": ("average_mode", str),
            "out": ("output_dir", str),
            "emit_figures": ("emit_figures", lambda raw: _parse_bool(raw, "emit_figures")),
            "attempts_per_hour": ("attempts_per_hour", float),
            "target_probability": ("target_probability", float),
            "strict": ("strict", lambda raw: _parse_bool(raw, "strict")),
        }
        for key, raw in file_values.items():
            if key not in parsers:
                raise ConfigError(f"unknown config key {key!r}")
            field_name, parse = parsers[key]
            try:
                merged[field_name] = parse(raw)
            except ConfigError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key}: bad value {raw!r}: {exc}") from exc

    if preset is not None:
        if preset != "paper":
            raise ConfigError(f"unknown preset {preset!r}")
        merged.update(PAPER_PRESET)
        merged.pop("dcf_c_miss", None)
        merged.pop("dcf_c_fa", None)
        merged.pop("dcf_p_target", None)
        merged.pop("dcf_normalize", None)

    for key, value in overrides.items():
        if value is not None:
            merged[key] = value

    dcf_kwargs = {
        name[4:]: merged.pop(name)
        for name in ("dcf_c_miss", "dcf_c_fa", "dcf_p_target", "dcf_normalize")
        if name in merged
    }
    if dcf_kwargs and "dcf" not in merged:
        try:
            merged["dcf"] = DcfParams(**dcf_kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    try:
        return AuditConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_as_dict(config: AuditConfig) -> dict[str, Any]:
    """Config echo for the report header, JSON-ready."""
    return {
        "scores": config.scores_path,
        "metadata": config.metadata_path,
        "groups": list(config.group_attributes),
        "policy": config.policy.value,
        "dcf": {
            "c_miss": config.dcf.c_miss,
            "c_fa": config.dcf.c_fa,
            "p_target": config.dcf.p_target,
            "normalize": config.dcf.normalize,
        },
        "design_fprs": list(config.design_fprs),
        "alphas": list(config.alphas),
        "zero_policy": config.zero_policy,
        "average_mode": config.average_mode,
        "out": config.output_dir,
        "emit_figures": config.emit_figures,
        "attempts_per_hour": config.attempts_per_hour,
        "target_probability": config.target_probability,
        "strict": config.strict,
    }
