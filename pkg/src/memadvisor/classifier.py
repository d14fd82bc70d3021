"""Workload categories by data expansion.

    alpha <= 0.5           Shrinking        factor 1
    0.5 < alpha < 1        Medium           factor 2
    alpha >= 1, inc < 2    ExpandingMedium  factor 3
    alpha >= 1, inc >= 2   ExpandingRapid   factor 4
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

from memadvisor.ingest import ProfileSet
from memadvisor.metrics import InsufficientRunsError, compute_metrics

__all__ = [
    "Category",
    "ClassificationResult",
    "InsufficientRunsError",
    "classify",
    "classify_profile",
    "expansion_factor",
]

SHRINKING_MAX = Fraction(1, 2)
EXPANDING_MIN = Fraction(1)
RAPID_INC_MIN = Fraction(2)


class Category(enum.Enum):
    SHRINKING = "Shrinking"
    MEDIUM = "Medium"
    EXPANDING_MEDIUM = "ExpandingMedium"
    EXPANDING_RAPID = "ExpandingRapid"

    @property
    def factor(self) -> int:
        return _FACTORS[self]

    @property
    def slug(self) -> str:
        """CLI spelling, e.g. ``expanding-rapid``."""
        return self.name.lower().replace("_", "-")

    @classmethod
    def parse(cls, text: str) -> "Category":
        key = text.strip().lower().replace("_", "").replace("-", "").replace(".", "")
        for c in cls:
            if c.value.lower() == key:
                return c
        raise ValueError(f"unknown category {text!r}; expected one of {', '.join(c.slug for c in cls)}")


_FACTORS = {
    Category.EXPANDING_RAPID: 4,
    Category.EXPANDING_MEDIUM: 3,
    Category.MEDIUM: 2,
    Category.SHRINKING: 1,
}


@dataclass(frozen=True)
class ClassificationResult:
    category: Category
    alpha_mean: Fraction
    inc_shuf: Fraction | None
    factor_shuf: int

    def __post_init__(self) -> None:
        if self.factor_shuf != _FACTORS[self.category]:
            raise ValueError(
                f"factor_shuf {self.factor_shuf} does not match {self.category.value} (expected {_FACTORS[self.category]})"
            )

    def to_dict(self) -> dict:
        return {
            "category": self.category.value,
            "alpha_mean": str(self.alpha_mean),
            "alpha_mean_float": float(self.alpha_mean),
            "inc_shuf": None if self.inc_shuf is None else str(self.inc_shuf),
            "inc_shuf_float": None if self.inc_shuf is None else float(self.inc_shuf),
            "factor_shuf": self.factor_shuf,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassificationResult":
        return cls(
            category=Category(d["category"]),
            alpha_mean=Fraction(d["alpha_mean"]),
            inc_shuf=None if d.get("inc_shuf") is None else Fraction(d["inc_shuf"]),
            factor_shuf=int(d["factor_shuf"]),
        )


def _exact(x: Real) -> Fraction:
    # Fraction(float) is exact, so 1 - 1e-9 stays strictly below 1.
    return Fraction(x)


def classify(alpha_mean: Real, inc_shuf: Real | None = None) -> Category:
    alpha = _exact(alpha_mean)
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha_mean}")
    if alpha <= SHRINKING_MAX:
        return Category.SHRINKING
    if alpha < EXPANDING_MIN:
        return Category.MEDIUM
    if inc_shuf is None:
        raise InsufficientRunsError(
            "insufficient runs to subdivide Expanding: alpha >= 1 but inc_shuf needs at least 2 profiling runs"
        )
    return Category.EXPANDING_RAPID if _exact(inc_shuf) >= RAPID_INC_MIN else Category.EXPANDING_MEDIUM


def expansion_factor(c: Category) -> int:
    return _FACTORS[c]


def classify_profile(ps: ProfileSet) -> ClassificationResult:
    m = compute_metrics(ps)
    category = classify(m.alpha_mean, m.inc_shuf)
    return ClassificationResult(category, m.alpha_mean, m.inc_shuf, expansion_factor(category))
