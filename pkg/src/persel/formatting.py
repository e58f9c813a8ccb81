"""Exact decimal rendering of rational values.

Error rates are kept as ``fractions.Fraction`` throughout; only at the
output boundary are they rendered to a fixed number of decimal places,
rounding half to even. The rounding is done in integer arithmetic so the
rendered string is exact for every rational input (no float detour).
"""

from __future__ import annotations

from fractions import Fraction

DEFAULT_PLACES = 4


def decimal_str(value: Fraction | int, places: int = DEFAULT_PLACES) -> str:
    """Render a rational to `places` decimals, rounding half to even."""
    if places < 0:
        raise ValueError("places must be >= 0")
    value = Fraction(value)
    sign = "-" if value < 0 else ""
    scaled = abs(value) * 10**places
    units, rem = divmod(scaled.numerator, scaled.denominator)
    # round half to even on the remainder rem/denominator
    twice = 2 * rem
    if twice > scaled.denominator or (twice == scaled.denominator and units % 2 == 1):
        units += 1
    digits = str(units).rjust(places + 1, "0")
    if places == 0:
        return sign + digits
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def percent_str(count: int, total: int, places: int = 1) -> str:
    """Render ``100 * count / total`` to `places` decimals, half to even."""
    if total <= 0:
        raise ValueError("total must be positive")
    return decimal_str(Fraction(100 * count, total), places)
