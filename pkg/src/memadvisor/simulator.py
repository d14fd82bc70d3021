"""Synthetic workloads and a stage-by-stage executor memory simulator.

This is the desk-scale stand-in for running workloads on a cluster. It
re-derives per-stage memory charges on its own rather than calling the
predictor, so comparing the two catches mistakes in either.

Memory model per stage, inside the Spark share of the heap:

* pinned storage: the cached input slice (only when input caching is on);
  it cannot be evicted, and if it alone exceeds the share the executor
  runs out of memory.
* execution: shuffle buffers; may evict un-pinned storage, and whatever
  still does not fit spills to disk.
* un-pinned storage: input blocks read by the loading stage; evicted first.

All quantities are exact ``Fraction`` bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from statistics import fmean
from typing import NamedTuple

import numpy as np

from memadvisor.classifier import Category
from memadvisor.predictor import ClusterConfig, MemoryPlan, plan
from memadvisor.units import MB

__all__ = [
    "BASELINE_BYTES",
    "CapacityStats",
    "EvaluationReport",
    "SimResult",
    "SimWorkloadSpec",
    "StageOccupancy",
    "alpha_band",
    "evaluate_plan",
    "generate",
    "simulate",
]

BASELINE_BYTES = 2048 * MB

# (low, high, low_inclusive, high_inclusive) on max-shuffle / input
_BANDS = {
    Category.SHRINKING: (Fraction(0), Fraction(1, 2), False, True),
    Category.MEDIUM: (Fraction(1, 2), Fraction(1), False, False),
    Category.EXPANDING_MEDIUM: (Fraction(1), Fraction(3), True, False),
    Category.EXPANDING_RAPID: (Fraction(3), Fraction(6), True, True),
}


def alpha_band(category: Category) -> tuple[Fraction, Fraction, bool, bool]:
    return _BANDS[category]


def _in_band(alpha: Fraction, category: Category) -> bool:
    lo, hi, lo_inc, hi_inc = _BANDS[category]
    above = alpha >= lo if lo_inc else alpha > lo
    below = alpha <= hi if hi_inc else alpha < hi
    return above and below


def _band_bytes(category: Category, input_bytes: int, cap_at_factor: bool) -> tuple[int, int]:
    """Inclusive integer range of the largest stage shuffle for ``category``."""
    n = input_bytes
    lo, hi = {
        Category.SHRINKING: (1, n // 2),
        Category.MEDIUM: (n // 2 + 1, n - 1),
        Category.EXPANDING_MEDIUM: (n, 3 * n - 1),
        Category.EXPANDING_RAPID: (3 * n, 6 * n),
    }[category]
    if cap_at_factor:
        hi = min(hi, category.factor * n)
    if lo > hi:
        raise ValueError(f"input of {input_bytes} bytes is too small for a {category.value} band")
    return lo, hi


@dataclass(frozen=True)
class SimWorkloadSpec:
    category: Category
    input_bytes: int
    stage_count: int
    per_stage_shuffle_bytes: tuple[int, ...]
    seed: int

    @property
    def max_shuffle_bytes(self) -> int:
        return max(self.per_stage_shuffle_bytes)

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.max_shuffle_bytes, self.input_bytes)

    def within_factor(self) -> bool:
        return self.max_shuffle_bytes <= self.category.factor * self.input_bytes


def generate(
    category: Category,
    input_bytes: int,
    stage_count: int,
    seed: int,
    cap_at_factor: bool = False,
) -> SimWorkloadSpec:
    """Draw a workload whose largest stage shuffle falls in the category's band.

    Stage 0 is the loading stage and never shuffles. With ``cap_at_factor``
    the band is clipped so no stage exceeds ``factor * input`` (only changes
    ExpandingRapid, whose band reaches 6x).
    """
    if stage_count < 2:
        raise ValueError(f"need at least 2 stages, got {stage_count}")
    if input_bytes <= 0:
        raise ValueError(f"input must be positive, got {input_bytes}")
    rng = np.random.default_rng(seed)
    lo, hi = _band_bytes(category, input_bytes, cap_at_factor)
    peak = int(rng.integers(lo, hi, endpoint=True))
    peak_stage = int(rng.integers(1, stage_count))
    shuffles = [0]
    for i in range(1, stage_count):
        shuffles.append(peak if i == peak_stage else int(rng.integers(0, peak, endpoint=True)))
    spec = SimWorkloadSpec(category, input_bytes, stage_count, tuple(shuffles), seed)
    assert _in_band(spec.alpha, category)
    return spec


class StageOccupancy(NamedTuple):
    stage_index: int
    occupancy_bytes: Fraction
    charged_bytes: Fraction
    spilled_bytes: Fraction
    evicted_bytes: Fraction


@dataclass(frozen=True)
class SimResult:
    capacity_bytes: int
    spark_share_bytes: Fraction
    peak_executor_bytes: Fraction
    spilled_bytes: Fraction
    evicted_bytes: Fraction
    charged_bytes: Fraction
    oom: bool
    headroom_bytes: Fraction
    timeline: tuple[StageOccupancy, ...]

    def to_dict(self) -> dict:
        return {
            "capacity_bytes": self.capacity_bytes,
            "spark_share_bytes": str(self.spark_share_bytes),
            "peak_executor_bytes": str(self.peak_executor_bytes),
            "spilled_bytes": str(self.spilled_bytes),
            "evicted_bytes": str(self.evicted_bytes),
            "charged_bytes": str(self.charged_bytes),
            "oom": self.oom,
            "headroom_bytes": str(self.headroom_bytes),
            "timeline": [[t.stage_index, str(t.occupancy_bytes)] for t in self.timeline],
        }


def _stage_charges(spec: SimWorkloadSpec, cfg: ClusterConfig) -> list[tuple[Fraction, Fraction, Fraction]]:
    """(pinned storage, un-pinned storage, execution) demand per stage."""
    n_in = spec.input_bytes
    block = cfg.block_size_bytes
    tasks = cfg.tasks_per_executor
    blocks = (n_in + block - 1) // block
    executors = (n_in + tasks * block - 1) // (tasks * block)
    concurrent_shuffle_tasks = tasks if tasks < cfg.parallelism else cfg.parallelism

    charges = [(Fraction(0), Fraction(min(tasks, blocks) * block), Fraction(0))]
    for shuffle in spec.per_stage_shuffle_bytes[1:]:
        pinned = Fraction(n_in, executors) if cfg.cache_input else Fraction(0)
        execution = Fraction(shuffle, cfg.parallelism) * concurrent_shuffle_tasks
        charges.append((pinned, Fraction(0), execution))
    return charges


def simulate(spec: SimWorkloadSpec, capacity_bytes: int, cfg: ClusterConfig | None = None) -> SimResult:
    cfg = cfg or ClusterConfig()
    if capacity_bytes <= cfg.reserved_memory_bytes:
        raise ValueError(
            f"capacity {capacity_bytes} must exceed reserved memory {cfg.reserved_memory_bytes}"
        )
    share = (capacity_bytes - cfg.reserved_memory_bytes) * cfg.spark_memory_fraction

    timeline = []
    for i, (pinned, unpinned, execution) in enumerate(_stage_charges(spec, cfg)):
        free = max(share - pinned, Fraction(0))
        exec_resident = min(execution, free)
        storage_resident = min(unpinned, free - exec_resident)
        spilled = execution - exec_resident
        evicted = unpinned - storage_resident
        timeline.append(
            StageOccupancy(
                stage_index=i,
                occupancy_bytes=pinned + exec_resident + storage_resident,
                charged_bytes=pinned + unpinned + execution,
                spilled_bytes=spilled,
                evicted_bytes=evicted,
            )
        )

    peak = max(t.occupancy_bytes for t in timeline)
    return SimResult(
        capacity_bytes=capacity_bytes,
        spark_share_bytes=share,
        peak_executor_bytes=peak,
        spilled_bytes=sum((t.spilled_bytes for t in timeline), Fraction(0)),
        evicted_bytes=sum((t.evicted_bytes for t in timeline), Fraction(0)),
        charged_bytes=sum((t.charged_bytes for t in timeline), Fraction(0)),
        oom=peak > share,
        headroom_bytes=share - peak,
        timeline=tuple(timeline),
    )


@dataclass(frozen=True)
class CapacityStats:
    capacity_bytes: int
    oom_rate: float
    spill_rate: float
    mean_spilled_bytes: float
    mean_waste_ratio: float
    min_headroom_bytes: Fraction

    @classmethod
    def from_results(cls, capacity_bytes: int, results: list[SimResult]) -> "CapacityStats":
        return cls(
            capacity_bytes=capacity_bytes,
            oom_rate=sum(r.oom for r in results) / len(results),
            spill_rate=sum(r.spilled_bytes > 0 for r in results) / len(results),
            mean_spilled_bytes=fmean(float(r.spilled_bytes) for r in results),
            mean_waste_ratio=fmean(float(r.headroom_bytes / r.spark_share_bytes) for r in results),
            min_headroom_bytes=min(r.headroom_bytes for r in results),
        )

    def to_dict(self) -> dict:
        return {
            "capacity_bytes": self.capacity_bytes,
            "capacity_mb": -(-self.capacity_bytes // MB),
            "oom_rate": self.oom_rate,
            "spill_rate": self.spill_rate,
            "mean_spilled_bytes": self.mean_spilled_bytes,
            "mean_waste_ratio": self.mean_waste_ratio,
            "min_headroom_bytes": str(self.min_headroom_bytes),
        }


@dataclass(frozen=True)
class EvaluationReport:
    category: Category
    input_bytes: int
    trials: int
    seed: int
    cap_at_factor: bool
    plan: MemoryPlan
    planned: CapacityStats
    baseline: CapacityStats

    @property
    def savings_ratio(self) -> float:
        """Fraction of the baseline capacity the plan saves (negative if it needs more)."""
        return 1 - self.planned.capacity_bytes / self.baseline.capacity_bytes

    def to_dict(self) -> dict:
        return {
            "category": self.category.value,
            "input_bytes": self.input_bytes,
            "trials": self.trials,
            "seed": self.seed,
            "cap_at_factor": self.cap_at_factor,
            "plan": self.plan.to_dict(),
            "planned": self.planned.to_dict(),
            "baseline": self.baseline.to_dict(),
            "savings_ratio": self.savings_ratio,
        }


def evaluate_plan(
    category: Category,
    input_bytes: int,
    cfg: ClusterConfig | None = None,
    trials: int = 100,
    seed: int = 0,
    baseline_bytes: int = BASELINE_BYTES,
    cap_at_factor: bool = False,
    max_stages: int = 8,
) -> EvaluationReport:
    """Run generated workloads against the planned capacity and a fixed baseline."""
    cfg = cfg or ClusterConfig()
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    the_plan = plan(category, input_bytes, cfg)
    rng = np.random.default_rng(seed)
    planned, base = [], []
    for _ in range(trials):
        spec = generate(
            category,
            input_bytes,
            stage_count=int(rng.integers(2, max_stages, endpoint=True)),
            seed=int(rng.integers(0, 2**63 - 1)),
            cap_at_factor=cap_at_factor,
        )
        planned.append(simulate(spec, the_plan.capacity_bytes, cfg))
        base.append(simulate(spec, baseline_bytes, cfg))
    return EvaluationReport(
        category=category,
        input_bytes=input_bytes,
        trials=trials,
        seed=seed,
        cap_at_factor=cap_at_factor,
        plan=the_plan,
        planned=CapacityStats.from_results(the_plan.capacity_bytes, planned),
        baseline=CapacityStats.from_results(baseline_bytes, base),
    )
