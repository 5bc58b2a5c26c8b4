"""Naive Weil heights and canonical heights for rational points.

Orbits are iterated in exact rational arithmetic, so the only approximation
in a canonical-height estimate is the truncation of the defining limit
d^-n h(f^(+-n)(x)).  The truncation error is bounded by the largest observed
Cauchy increment times a safety factor of 10; orbits that revisit a point
short-circuit to an exact zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import BitBudgetExceeded
from .family import HenonFamily

LN2 = math.log(2.0)
ERROR_SAFETY = 10.0
DEFAULT_BIT_BUDGET = 1 << 20


@dataclass(frozen=True)
class RationalPoint:
    x: Fraction
    y: Fraction

    def __init__(self, x, y):
        object.__setattr__(self, "x", Fraction(x))
        object.__setattr__(self, "y", Fraction(y))

    def as_pair(self):
        return self.x, self.y


def log_int(n: int) -> float:
    """log of a positive integer of arbitrary size."""
    if n <= 0:
        raise ValueError("log_int needs a positive integer")
    k = n.bit_length() - 53
    if k <= 0:
        return math.log(n)
    return math.log(n >> k) + k * LN2


def naive_height(p: RationalPoint) -> float:
    """log max(|X|, |Y|, |Z|) for the coprime integer coordinates [X : Y : Z]."""
    x, y = p.x, p.y
    L = math.lcm(x.denominator, y.denominator)
    X = x.numerator * (L // x.denominator)
    Y = y.numerator * (L // y.denominator)
    g = math.gcd(math.gcd(abs(X), abs(Y)), L)
    return log_int(max(abs(X), abs(Y), L) // g)


def param_height(t) -> float:
    """Standard height of a rational parameter: log max(|num|, den)."""
    t = Fraction(t)
    return log_int(max(abs(t.numerator), t.denominator))


@dataclass(frozen=True)
class HeightEstimate:
    value: float
    error: float
    iterations: int
    cauchy_constant: float


def _coord_bits(z) -> int:
    return max(z[0].numerator.bit_length(), z[0].denominator.bit_length(),
               z[1].numerator.bit_length(), z[1].denominator.bit_length())


def _directional_estimate(family: HenonFamily, t, p: RationalPoint, sign: int,
                          n_max: int, bit_budget: int) -> HeightEstimate:
    bound = family.bind(t)
    d = family.degree
    z = p.as_pair()
    seen = {z}
    heights = [naive_height(p)]
    for n in range(1, n_max + 1):
        z = bound.apply(z) if sign > 0 else bound.apply_inverse(z)
        if z in seen:
            return HeightEstimate(value=0.0, error=0.0, iterations=n,
                                  cauchy_constant=0.0)
        seen.add(z)
        heights.append(naive_height(RationalPoint(*z)))
        if _coord_bits(z) > bit_budget:
            if n < 3:
                raise BitBudgetExceeded(
                    f"orbit coordinates outgrew {bit_budget} bits at step {n}")
            break
    n_star = len(heights) - 1
    estimates = [h / d ** n for n, h in enumerate(heights)]
    cauchy = 0.0
    for n in range(n_star):
        cauchy = max(cauchy, d ** (n + 1) * abs(estimates[n + 1] - estimates[n]))
    return HeightEstimate(value=estimates[n_star],
                          error=cauchy * d ** (-n_star) * ERROR_SAFETY,
                          iterations=n_star, cauchy_constant=cauchy)


def canonical_height(family: HenonFamily, t, p: RationalPoint,
                     sign: str = "both", n_max: int = 15,
                     bit_budget: int = DEFAULT_BIT_BUDGET) -> HeightEstimate:
    """Truncated canonical height of a rational point at a rational parameter.

    sign "+" or "-" gives the one-directional height; "both" returns their
    sum (the full canonical height) with summed error bounds.  The exact
    orbit revisiting a point forces the value 0 with error 0: a periodic
    point of an automorphism is periodic in both directions.
    """
    if not family.is_exact:
        raise TypeError("canonical heights require a family over the rationals")
    if n_max < 3:
        raise ValueError("n_max must be >= 3")
    t = Fraction(t)
    if sign in ("+", "plus"):
        return _directional_estimate(family, t, p, +1, n_max, bit_budget)
    if sign in ("-", "minus"):
        return _directional_estimate(family, t, p, -1, n_max, bit_budget)
    if sign != "both":
        raise ValueError("sign must be '+', '-' or 'both'")
    fwd = _directional_estimate(family, t, p, +1, n_max, bit_budget)
    if fwd.error == 0.0 and fwd.value == 0.0:
        return HeightEstimate(value=0.0, error=0.0, iterations=fwd.iterations,
                              cauchy_constant=0.0)
    bwd = _directional_estimate(family, t, p, -1, n_max, bit_budget)
    return HeightEstimate(value=fwd.value + bwd.value,
                          error=fwd.error + bwd.error,
                          iterations=min(fwd.iterations, bwd.iterations),
                          cauchy_constant=max(fwd.cauchy_constant,
                                              bwd.cauchy_constant))


def height_sequence(family: HenonFamily, t, p: RationalPoint, sign: int = 1,
                    n_max: int = 15,
                    bit_budget: int = DEFAULT_BIT_BUDGET):
    """Raw sequence h(f^(sign n)(p)) / d^n, for convergence diagnostics."""
    if not family.is_exact:
        raise TypeError("height sequences require a family over the rationals")
    bound = family.bind(Fraction(t))
    d = family.degree
    z = p.as_pair()
    out = [naive_height(p)]
    for n in range(1, n_max + 1):
        z = bound.apply(z) if sign > 0 else bound.apply_inverse(z)
        out.append(naive_height(RationalPoint(*z)))
        if _coord_bits(z) > bit_budget:
            break
    return [h / d ** n for n, h in enumerate(out)]


@dataclass(frozen=True)
class HarnessReport:
    """Fitted Call-Silverman-style constants with the per-sample slack."""

    c1: float
    c2: float
    rows: tuple

    def to_jsonable(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "rows": [dict(r) for r in self.rows]}


def inequality_harness(family: HenonFamily, samples, n_max: int = 12,
                       bit_budget: int = DEFAULT_BIT_BUDGET) -> HarnessReport:
    """Fit the two height-comparison constants over (t, point) samples.

    c1 bounds h(x) - hhat(x) and c2 bounds hhat(x) - 2 h(x), both relative
    to 1 + the parameter height; fits clamp at zero since negative slack
    only means the inequality is slack.
    """
    if not samples:
        raise ValueError("samples must be nonempty")
    rows = []
    c1 = 0.0
    c2 = 0.0
    for t, p in samples:
        t = Fraction(t)
        est = canonical_height(family, t, p, sign="both", n_max=n_max,
                               bit_budget=bit_budget)
        h = naive_height(p)
        hm = param_height(t)
        slack1 = (h - est.value) / (hm + 1.0)
        slack2 = (est.value - 2.0 * h) / (hm + 1.0)
        c1 = max(c1, slack1)
        c2 = max(c2, slack2)
        rows.append({"t": f"{t.numerator}/{t.denominator}",
                     "x": f"{p.x.numerator}/{p.x.denominator}",
                     "y": f"{p.y.numerator}/{p.y.denominator}",
                     "naive": h, "canonical": est.value, "error": est.error,
                     "param_height": hm, "slack1": slack1, "slack2": slack2})
    return HarnessReport(c1=max(0.0, c1), c2=max(0.0, c2), rows=tuple(rows))
