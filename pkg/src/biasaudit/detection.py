"""Threshold sweeps and detection metrics: FPR, FNR, EER, minCDet.

The decision rule everywhere is accept iff score >= threshold. The
threshold grid of a sweep is every distinct observed score plus a +inf
sentinel, so at the lowest grid point fpr is 1 and fnr is 0, and at the
sentinel fpr is 0 and fnr is 1. All operations here are pure functions
of immutable inputs and safe to run concurrently per group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateGroupError, EmptyPopulationError
from .trials import GroupedTrials, GroupKey, Label, TrialRecord


@dataclass(frozen=True)
class SweepCurve:
    """FPR/FNR evaluated on the full threshold grid of one population.

    ``fpr[i]`` is the fraction of nontarget scores >= thresholds[i];
    ``fnr[i]`` the fraction of target scores < thresholds[i]. fpr is
    nonincreasing and fnr nondecreasing in the threshold.
    """

    thresholds: np.ndarray
    fpr: np.ndarray
    fnr: np.ndarray
    n_target: int
    n_nontarget: int


@dataclass(frozen=True)
class OperatingPoint:
    threshold: float
    fpr: float
    fnr: float


@dataclass(frozen=True)
class DcfParams:
    """Detection-cost parameters: cost(t) = c_miss*p_target*fnr(t) + c_fa*(1-p_target)*fpr(t).

    With ``normalize`` the minimum cost is divided by
    min(c_miss*p_target, c_fa*(1-p_target)), the cost of the better
    trivial all-accept/all-reject system.
    """

    c_miss: float = 1.0
    c_fa: float = 1.0
    p_target: float = 0.05
    normalize: bool = True

    def __post_init__(self):
        if not (self.c_miss > 0 and self.c_fa > 0):
            raise ValueError("c_miss and c_fa must be positive")
        if not (0.0 < self.p_target < 1.0):
            raise ValueError("p_target must lie in (0, 1)")


@dataclass(frozen=True)
class GroupMetricVector:
    """One base metric per group plus the pooled aggregate value.

    For count-based metrics (FPR/FNR at a threshold) the error and
    population counts are retained so the 'smooth' zero-policy can
    re-form rates; metrics without a count decomposition (EER, minCDet)
    leave them as None.
    """

    metric_name: str
    per_group: dict[GroupKey, float]
    aggregate: float
    per_group_counts: dict[GroupKey, tuple[int, int]] | None = None
    aggregate_counts: tuple[int, int] | None = None

    def __post_init__(self):
        if not self.per_group:
            raise ValueError("per_group must be nonempty")
        values = [*self.per_group.values(), self.aggregate]
        if any(not math.isfinite(v) or v < 0.0 for v in values):
            raise ValueError("metric values must be finite and nonnegative")

    def group_keys(self) -> tuple[GroupKey, ...]:
        return tuple(sorted(self.per_group))


def split_scores(trials: Iterable[TrialRecord]) -> tuple[np.ndarray, np.ndarray]:
    """Split trials into (target_scores, nontarget_scores) arrays."""
    tar, non = [], []
    for t in trials:
        (tar if t.label is Label.TARGET else non).append(t.score)
    return np.asarray(tar, dtype=float), np.asarray(non, dtype=float)


def compute_sweep(
    target_scores: Sequence[float],
    nontarget_scores: Sequence[float],
    max_thresholds: int | None = None,
) -> SweepCurve:
    """Evaluate FPR and FNR over the exact threshold grid.

    ``max_thresholds`` optionally subsamples the distinct-score grid at
    evenly spaced quantiles (endpoints kept); rates stay exact at the
    retained thresholds. Intended for very large score sets.
    """
    tar = np.asarray(target_scores, dtype=float)
    non = np.asarray(nontarget_scores, dtype=float)
    if tar.size == 0:
        raise EmptyPopulationError("target")
    if non.size == 0:
        raise EmptyPopulationError("nontarget")
    if not (np.isfinite(tar).all() and np.isfinite(non).all()):
        raise ValueError("scores must be finite")

    taus = np.unique(np.concatenate([tar, non]))
    if max_thresholds is not None and taus.size > max_thresholds:
        idx = np.unique(
            np.round(np.linspace(0, taus.size - 1, num=max_thresholds)).astype(int)
        )
        taus = taus[idx]
    taus = np.append(taus, np.inf)

    tar_sorted = np.sort(tar)
    non_sorted = np.sort(non)
    fnr = np.searchsorted(tar_sorted, taus, side="left") / tar.size
    fpr = (non.size - np.searchsorted(non_sorted, taus, side="left")) / non.size
    for arr in (taus, fpr, fnr):
        arr.flags.writeable = False
    return SweepCurve(
        thresholds=taus,
        fpr=fpr,
        fnr=fnr,
        n_target=int(tar.size),
        n_nontarget=int(non.size),
    )


def rates_at_threshold(
    target_scores: Sequence[float],
    nontarget_scores: Sequence[float],
    threshold: float,
) -> tuple[float, float]:
    """(fpr, fnr) at one threshold under the accept-iff-score>=t rule."""
    tar = np.asarray(target_scores, dtype=float)
    non = np.asarray(nontarget_scores, dtype=float)
    fpr = float(np.count_nonzero(non >= threshold)) / non.size if non.size else math.nan
    fnr = float(np.count_nonzero(tar < threshold)) / tar.size if tar.size else math.nan
    return fpr, fnr


def eer(curve: SweepCurve) -> tuple[float, float]:
    """Equal error rate and its threshold.

    fnr - fpr is nondecreasing along the grid; the crossing is located
    and both rates are linearly interpolated to their common value. An
    exact fnr == fpr grid point is returned as-is. When the crossing
    falls in the sentinel segment the rate interpolation is still well
    defined and the last finite threshold is reported.
    """
    diff = curve.fnr - curve.fpr
    idx = int(np.searchsorted(diff, 0.0, side="left"))
    if diff[idx] == 0.0:
        return float(curve.fpr[idx]), float(curve.thresholds[idx])
    lo, hi = idx - 1, idx
    t = -diff[lo] / (diff[hi] - diff[lo])
    value = float(curve.fpr[lo] + t * (curve.fpr[hi] - curve.fpr[lo]))
    tau_hi = curve.thresholds[hi]
    if math.isinf(tau_hi):
        threshold = float(curve.thresholds[lo])
    else:
        threshold = float(curve.thresholds[lo] + t * (tau_hi - curve.thresholds[lo]))
    return value, threshold


def min_cdet(curve: SweepCurve, params: DcfParams = DcfParams()) -> tuple[float, float]:
    """Minimum detection cost over the grid and the smallest minimizing threshold."""
    cost = (
        params.c_miss * params.p_target * curve.fnr
        + params.c_fa * (1.0 - params.p_target) * curve.fpr
    )
    i = int(np.argmin(cost))  # first occurrence: ties break to the smallest threshold
    value = float(cost[i])
    if params.normalize:
        value /= min(params.c_miss * params.p_target, params.c_fa * (1.0 - params.p_target))
    return value, float(curve.thresholds[i])


def threshold_for_fpr(curve: SweepCurve, target_fpr: float) -> OperatingPoint:
    """Smallest grid threshold whose FPR does not exceed ``target_fpr``.

    The achieved fpr may be below the target on finite data; a
    calibrated system never exceeds its design false-accept rate.
    """
    if not (0.0 < target_fpr <= 1.0):
        raise ValueError("target_fpr must lie in (0, 1]")
    i = int(np.argmax(curve.fpr <= target_fpr))  # fpr nonincreasing: first True
    return OperatingPoint(
        threshold=float(curve.thresholds[i]),
        fpr=float(curve.fpr[i]),
        fnr=float(curve.fnr[i]),
    )


def _group_scores(
    grouped: GroupedTrials,
) -> dict[GroupKey, tuple[np.ndarray, np.ndarray]]:
    return {key: split_scores(trials) for key, trials in sorted(grouped.groups.items())}


def disaggregate_trial_metric(
    grouped: GroupedTrials,
    metric: str,
    dcf: DcfParams | None = None,
) -> GroupMetricVector:
    """Per-group EER or minCDet, each on the group's own sweep and threshold.

    ``metric`` is ``"eer"`` or ``"min_cdet"``. The aggregate is the same
    metric on the pooled full trial list (unassigned trials included).
    """
    if metric not in ("eer", "min_cdet"):
        raise ValueError(f"unknown trial metric {metric!r}")
    params = dcf if dcf is not None else DcfParams()

    def evaluate(tar: np.ndarray, non: np.ndarray) -> float:
        curve = compute_sweep(tar, non)
        return eer(curve)[0] if metric == "eer" else min_cdet(curve, params)[0]

    per_group: dict[GroupKey, float] = {}
    for key, (tar, non) in _group_scores(grouped).items():
        if tar.size == 0 or non.size == 0:
            raise DegenerateGroupError(key)
        per_group[key] = evaluate(tar, non)

    pooled_tar, pooled_non = split_scores(grouped.all_trials())
    aggregate = evaluate(pooled_tar, pooled_non)
    return GroupMetricVector(metric_name=metric, per_group=per_group, aggregate=aggregate)


def disaggregate_at_threshold(
    grouped: GroupedTrials,
    threshold: float,
    which: str,
    label: str | None = None,
) -> GroupMetricVector:
    """Per-group FPR or FNR at one shared threshold.

    ``which`` is ``"fpr"`` or ``"fnr"``. The aggregate is the pooled rate
    at the same threshold. Error/population counts are recorded for the
    'smooth' zero-policy.
    """
    if which not in ("fpr", "fnr"):
        raise ValueError(f"unknown rate {which!r}")
    metric_name = label if label is not None else f"{which}@tau={threshold:g}"

    def rate(tar: np.ndarray, non: np.ndarray, key) -> tuple[float, int, int]:
        if which == "fpr":
            if non.size == 0:
                raise DegenerateGroupError(key, "has no nontarget trials")
            errors = int(np.count_nonzero(non >= threshold))
            return errors / non.size, errors, int(non.size)
        if tar.size == 0:
            raise DegenerateGroupError(key, "has no target trials")
        errors = int(np.count_nonzero(tar < threshold))
        return errors / tar.size, errors, int(tar.size)

    per_group: dict[GroupKey, float] = {}
    per_group_counts: dict[GroupKey, tuple[int, int]] = {}
    for key, (tar, non) in _group_scores(grouped).items():
        value, errors, population = rate(tar, non, key)
        per_group[key] = value
        per_group_counts[key] = (errors, population)

    pooled_tar, pooled_non = split_scores(grouped.all_trials())
    aggregate, agg_errors, agg_population = rate(pooled_tar, pooled_non, "pooled")
    return GroupMetricVector(
        metric_name=metric_name,
        per_group=per_group,
        aggregate=aggregate,
        per_group_counts=per_group_counts,
        aggregate_counts=(agg_errors, agg_population),
    )
