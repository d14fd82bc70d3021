"""Shuffle aggregates and expansion metrics.

All ratios are exact ``Fraction`` values so threshold comparisons in the
classifier are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from memadvisor.ingest import ProfileSet, RunProfile, StageRecord

__all__ = [
    "ExpansionMetrics",
    "InsufficientRunsError",
    "compute_metrics",
    "inc_rate",
    "mean_alpha",
    "run_alpha",
    "run_shuffle",
    "stage_shuffle",
]

# Byte counts are persisted as JSON integers; keep them within int64.
MAX_BYTES = (1 << 63) - 1


class InsufficientRunsError(ValueError):
    pass


@dataclass(frozen=True)
class ExpansionMetrics:
    per_run_shuffle_bytes: tuple[int, ...]
    per_run_alpha: tuple[Fraction, ...]
    alpha_mean: Fraction
    inc_shuf: Fraction | None


def stage_shuffle(s: StageRecord) -> int:
    total = s.shuffle_read_bytes + s.shuffle_write_bytes
    if total > MAX_BYTES:
        raise OverflowError(f"stage {s.stage_index} shuffle {total} exceeds the byte-count range")
    return total


def run_shuffle(r: RunProfile) -> int:
    """Largest per-stage shuffle volume of one run (loading stage included)."""
    return max(stage_shuffle(s) for s in r.stages)


def run_alpha(r: RunProfile) -> Fraction:
    return Fraction(run_shuffle(r), r.input_bytes)


def mean_alpha(ps: ProfileSet) -> Fraction:
    alphas = [run_alpha(r) for r in ps.runs]
    return sum(alphas, Fraction(0)) / len(alphas)


def inc_rate(ps: ProfileSet) -> Fraction:
    """Unweighted mean of the slopes between consecutive runs.

    Negative slopes (shuffle shrinking as input grows) are kept, not clamped.
    """
    runs = ps.runs
    if len(runs) < 2:
        raise InsufficientRunsError(f"need at least 2 runs to compute inc_shuf, got {len(runs)}")
    rates = [
        Fraction(run_shuffle(b) - run_shuffle(a), b.input_bytes - a.input_bytes)
        for a, b in zip(runs, runs[1:])
    ]
    return sum(rates, Fraction(0)) / len(rates)


def compute_metrics(ps: ProfileSet) -> ExpansionMetrics:
    shuffles = tuple(run_shuffle(r) for r in ps.runs)
    alphas = tuple(Fraction(s, r.input_bytes) for s, r in zip(shuffles, ps.runs))
    return ExpansionMetrics(
        per_run_shuffle_bytes=shuffles,
        per_run_alpha=alphas,
        alpha_mean=sum(alphas, Fraction(0)) / len(alphas),
        inc_shuf=inc_rate(ps) if len(ps.runs) >= 2 else None,
    )
