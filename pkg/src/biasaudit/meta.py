"""Meta-measures aggregating bias across groups: FDR and normalised reliability bias.

The fairness discrepancy rate combines the largest group FPR gap and the
largest group FNR gap at one shared threshold:

    fdr = 1 - (alpha * max_delta_fpr + (1 - alpha) * max_delta_fnr)

so 1 means least biased and 0 most biased. The normalised reliability
bias is the mean absolute group-to-average log ratio of any base metric;
0 means every group equals the aggregate and larger means more biased.
Grid cells and suite entries are independent pure computations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .detection import (
    DcfParams,
    GroupMetricVector,
    compute_sweep,
    disaggregate_at_threshold,
    disaggregate_trial_metric,
    split_scores,
    threshold_for_fpr,
)
from .errors import GroupSetMismatchError
from .measures import g2avg_log_ratio
from .trials import GroupedTrials, GroupKey

DEFAULT_DESIGN_FPRS = (0.001, 0.01, 0.025, 0.05, 0.1)
DEFAULT_ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class FdrResult:
    alpha: float
    design_fpr: float
    threshold: float
    max_delta_fpr: float
    max_delta_fnr: float
    fdr: float


@dataclass(frozen=True)
class NrbResult:
    """Mean absolute group-to-average log ratio for one base metric.

    ``zero_value_groups`` lists groups whose metric was exactly zero
    under zero-policy 'infinity' (each contributes +inf and makes the
    whole measure +inf).
    """

    metric_name: str
    group_count: int
    nrb: float
    per_group_log_ratios: dict[GroupKey, float]
    zero_value_groups: tuple[GroupKey, ...] = ()


def _max_minus_min(v: GroupMetricVector) -> float:
    """Largest pairwise group gap; 0 for a single group."""
    values = list(v.per_group.values())
    return max(values) - min(values)


def fdr(
    group_fprs: GroupMetricVector,
    group_fnrs: GroupMetricVector,
    alpha: float,
    design_fpr: float,
    threshold: float,
) -> FdrResult:
    """Fairness discrepancy rate at one shared threshold.

    Both vectors must cover the same group set at the same threshold.
    The max-minus-min gap equals the maximum of the group-to-min
    differences, i.e. the maximum over all pairwise gaps.
    """
    if not (0.0 <= alpha <= 1.0):
        raise ValueError("alpha must lie in [0, 1]")
    if group_fprs.group_keys() != group_fnrs.group_keys():
        raise GroupSetMismatchError(
            "FPR and FNR vectors cover different group sets: "
            f"{[str(g) for g in group_fprs.group_keys()]} vs "
            f"{[str(g) for g in group_fnrs.group_keys()]}"
        )
    max_delta_fpr = _max_minus_min(group_fprs)
    max_delta_fnr = _max_minus_min(group_fnrs)
    value = 1.0 - (alpha * max_delta_fpr + (1.0 - alpha) * max_delta_fnr)
    return FdrResult(
        alpha=alpha,
        design_fpr=design_fpr,
        threshold=threshold,
        max_delta_fpr=max_delta_fpr,
        max_delta_fnr=max_delta_fnr,
        fdr=value,
    )


def fdr_grid(
    grouped: GroupedTrials,
    design_fprs: tuple[float, ...] = DEFAULT_DESIGN_FPRS,
    alphas: tuple[float, ...] = DEFAULT_ALPHAS,
) -> list[FdrResult]:
    """FDR over the (design_fpr, alpha) grid, ordered ascending by both.

    For each design FPR the shared threshold is calibrated on the pooled
    population, then every group's FPR and FNR at that threshold feed
    the FDR at each alpha.
    """
    if not design_fprs or not alphas:
        raise ValueError("design_fprs and alphas must be nonempty")
    pooled_tar, pooled_non = split_scores(grouped.all_trials())
    pooled_curve = compute_sweep(pooled_tar, pooled_non)

    results: list[FdrResult] = []
    for design in sorted(design_fprs):
        op = threshold_for_fpr(pooled_curve, design)
        fprs = disaggregate_at_threshold(grouped, op.threshold, "fpr", label=f"fpr@{design:g}")
        fnrs = disaggregate_at_threshold(grouped, op.threshold, "fnr", label=f"fnr@{design:g}")
        for alpha in sorted(alphas):
            results.append(fdr(fprs, fnrs, alpha, design, op.threshold))
    return results


def nrb(
    v: GroupMetricVector,
    zero_policy: str = "error",
    average_mode: str = "pooled",
) -> NrbResult:
    """Normalised reliability bias of one base-metric vector."""
    log_ratios = g2avg_log_ratio(v, zero_policy=zero_policy, average_mode=average_mode)
    count = len(log_ratios.per_group)
    value = sum(abs(r) for r in log_ratios.per_group.values()) / count
    zero_groups = tuple(
        sorted(g for g, r in log_ratios.per_group.items() if math.isinf(r))
    )
    return NrbResult(
        metric_name=v.metric_name,
        group_count=count,
        nrb=value,
        per_group_log_ratios=dict(log_ratios.per_group),
        zero_value_groups=zero_groups,
    )


def nrb_suite(
    grouped: GroupedTrials,
    design_fprs: tuple[float, ...] = DEFAULT_DESIGN_FPRS,
    dcf: DcfParams = DcfParams(),
    zero_policy: str = "error",
    average_mode: str = "pooled",
) -> list[NrbResult]:
    """NRB across the base-metric suite.

    Order: EER, minCDet, then an FPR/FNR pair per design FPR, pairs
    sorted by descending design FPR.
    """
    results = [
        nrb(disaggregate_trial_metric(grouped, "eer"), zero_policy, average_mode),
        nrb(disaggregate_trial_metric(grouped, "min_cdet", dcf), zero_policy, average_mode),
    ]
    pooled_tar, pooled_non = split_scores(grouped.all_trials())
    pooled_curve = compute_sweep(pooled_tar, pooled_non)
    for design in sorted(design_fprs, reverse=True):
        op = threshold_for_fpr(pooled_curve, design)
        for which in ("fpr", "fnr"):
            vector = disaggregate_at_threshold(
                grouped, op.threshold, which, label=f"{which}@{design:g}"
            )
            results.append(nrb(vector, zero_policy, average_mode))
    return results
