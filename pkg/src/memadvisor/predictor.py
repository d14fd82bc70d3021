"""Per-executor memory capacity from category, target input and cluster settings.

The executor heap is modeled as::

    capacity = spark_memory + user_memory + reserved

where spark_memory is 75% of the heap above ``reserved``. spark_memory is
the larger of what the loading stage and the shuffle stages need:

    first  = block * min(tasks_per_executor, input / block)
    other  = input / executors * cache + shuffle / parallelism * min(tasks_per_executor, parallelism)
    shuffle = factor * input
    executors = ceil(input / (tasks_per_executor * block))

Intermediate values are exact rationals; each byte result is rounded up.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction

from memadvisor.classifier import Category, ClassificationResult
from memadvisor.units import MB, ceil_int

__all__ = [
    "ClusterConfig",
    "MemoryPlan",
    "executors_needed",
    "mem_first_stage",
    "mem_other_stages",
    "plan",
    "predict_shuffle",
]

DEFAULT_RESERVED_BYTES = 300 * MB
MAX_BYTES = (1 << 63) - 1
SPARK_SHARE = Fraction(3, 4)


@dataclass(frozen=True)
class ClusterConfig:
    """Deployment parameters.

    tasks_per_executor corresponds to ``spark.executor.cores`` and
    parallelism to ``spark.default.parallelism``. Defaults follow a small
    cluster with 128 MB blocks, 4 cores per executor, parallelism 4 and
    cached input.
    """

    block_size_bytes: int = 128 * MB
    tasks_per_executor: int = 4
    parallelism: int = 4
    cache_input: bool = True
    reserved_memory_bytes: int = DEFAULT_RESERVED_BYTES
    user_memory_fraction: Fraction = Fraction(1, 4)

    def __post_init__(self) -> None:
        if self.block_size_bytes <= 0:
            raise ValueError(f"block size must be positive, got {self.block_size_bytes}")
        if self.tasks_per_executor < 1:
            raise ValueError(f"tasks per executor must be >= 1, got {self.tasks_per_executor}")
        if self.parallelism < 1:
            raise ValueError(f"parallelism must be >= 1, got {self.parallelism}")
        if self.reserved_memory_bytes < 0:
            raise ValueError(f"reserved memory must be >= 0, got {self.reserved_memory_bytes}")
        object.__setattr__(self, "user_memory_fraction", Fraction(self.user_memory_fraction))
        if not 0 <= self.user_memory_fraction < 1:
            raise ValueError(f"user memory fraction must be in [0, 1), got {self.user_memory_fraction}")

    @property
    def spark_memory_fraction(self) -> Fraction:
        return 1 - self.user_memory_fraction

    @property
    def beta(self) -> int:
        return 1 if self.cache_input else 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["user_memory_fraction"] = str(self.user_memory_fraction)
        return d


@dataclass(frozen=True)
class MemoryPlan:
    category: Category
    input_bytes: int
    num_executors: int
    predicted_shuffle_bytes: int
    mem_first_stage_bytes: int
    mem_other_stages_bytes: int
    mem_spark_bytes: int
    user_memory_bytes: int
    reserved_bytes: int
    capacity_bytes: int

    @property
    def capacity_mb(self) -> int:
        """Capacity rounded up to whole MB, the advised setting."""
        return ceil_int(Fraction(self.capacity_bytes, MB))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["category"] = self.category.value
        d["capacity_mb"] = self.capacity_mb
        return d


def _check(n: int, what: str) -> int:
    if n > MAX_BYTES:
        raise OverflowError(f"{what} of {n} bytes exceeds the byte-count range")
    return n


def predict_shuffle(input_bytes: int, factor_shuf: int) -> int:
    if input_bytes <= 0:
        raise ValueError(f"input must be positive, got {input_bytes}")
    if factor_shuf not in (1, 2, 3, 4):
        raise ValueError(f"expansion factor must be 1..4, got {factor_shuf}")
    return _check(factor_shuf * input_bytes, "predicted shuffle")


def executors_needed(input_bytes: int, cfg: ClusterConfig) -> int:
    if input_bytes <= 0:
        raise ValueError(f"input must be positive, got {input_bytes}")
    per_executor = cfg.tasks_per_executor * cfg.block_size_bytes
    return max(1, -(-input_bytes // per_executor))


def mem_first_stage(input_bytes: int, cfg: ClusterConfig) -> int:
    # input/block is a real quotient: a partial last block only holds its residual bytes
    if input_bytes <= 0:
        raise ValueError(f"input must be positive, got {input_bytes}")
    return min(cfg.tasks_per_executor * cfg.block_size_bytes, input_bytes)


def mem_other_stages(input_bytes: int, shuffle_bytes: int, cfg: ClusterConfig) -> int:
    if input_bytes <= 0 or shuffle_bytes < 0:
        raise ValueError(f"input must be positive and shuffle non-negative, got {input_bytes}, {shuffle_bytes}")
    cached = Fraction(input_bytes, executors_needed(input_bytes, cfg)) * cfg.beta
    shuffle = Fraction(shuffle_bytes, cfg.parallelism) * min(cfg.tasks_per_executor, cfg.parallelism)
    return _check(ceil_int(cached + shuffle), "shuffle-stage memory")


def plan(category: Category | ClassificationResult, input_bytes: int, cfg: ClusterConfig | None = None) -> MemoryPlan:
    """Size one executor for ``input_bytes`` of a workload in ``category``."""
    cfg = cfg or ClusterConfig()
    if isinstance(category, ClassificationResult):
        category = category.category
    if input_bytes <= 0:
        raise ValueError(f"input must be positive, got {input_bytes}")

    shuffle = predict_shuffle(input_bytes, category.factor)
    first = mem_first_stage(input_bytes, cfg)
    other = mem_other_stages(input_bytes, shuffle, cfg)
    spark = max(first, other)
    heap = ceil_int(spark / cfg.spark_memory_fraction)
    # floor keeps a degenerate plan runnable
    capacity = _check(max(heap + cfg.reserved_memory_bytes, cfg.reserved_memory_bytes + MB), "capacity")
    return MemoryPlan(
        category=category,
        input_bytes=input_bytes,
        num_executors=executors_needed(input_bytes, cfg),
        predicted_shuffle_bytes=shuffle,
        mem_first_stage_bytes=first,
        mem_other_stages_bytes=other,
        mem_spark_bytes=spark,
        user_memory_bytes=capacity - cfg.reserved_memory_bytes - spark,
        reserved_bytes=cfg.reserved_memory_bytes,
        capacity_bytes=capacity,
    )
