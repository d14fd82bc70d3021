"""Byte/MB conversions used at the human-facing boundary."""

from __future__ import annotations

from fractions import Fraction

MB = 1 << 20


def mb_to_bytes(mb: float | int | str) -> int:
    """Convert a MB quantity (possibly fractional) to whole bytes, rounding up."""
    value = Fraction(str(mb)) * MB
    if value <= 0:
        raise ValueError(f"size must be positive, got {mb} MB")
    return ceil_int(value)


def bytes_to_mb_ceil(n: int | Fraction) -> int:
    return ceil_int(Fraction(n) / MB)


def bytes_to_mb(n: int | Fraction) -> float:
    return float(Fraction(n) / MB)


def ceil_int(x: Fraction | int) -> int:
    x = Fraction(x)
    return -((-x.numerator) // x.denominator)


def fraction_to_json(x: Fraction | None) -> str | None:
    """Exact text form: "3" or "7/2"."""
    if x is None:
        return None
    return str(Fraction(x))


def fraction_from_json(s: str | int | None) -> Fraction | None:
    if s is None:
        return None
    return Fraction(s)
