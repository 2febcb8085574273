"""Exact rationals as ``p/q`` strings.

Every coordinate, weight and matrix entry in this package is a
:class:`fractions.Fraction`.  Floats are rejected at the boundary so that
no rounding can sneak into the exact core.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ParseError


def to_fraction(value) -> Fraction:
    """Coerce an int, a ``"p/q"`` string or a Fraction to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad rational {value!r}: {exc}") from None
    raise ParseError(f"cannot interpret {value!r} as an exact rational")


def format_fraction(value: Fraction) -> str:
    """Render in lowest terms, integers included, as ``p/q``."""
    return f"{value.numerator}/{value.denominator}"
