"""Outward-conservative complex disk arithmetic.

A ball is a center plus a radius; every operation returns a ball containing
the set-wise result, then inflates the radius by 4 machine epsilons relative
to both the radius and the new center magnitude.  That inflation is the
documented rounding model: certificates built on these balls are rigorous up
to it, without directed rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EPS4 = 4.0 * 2.220446049250313e-16


def _inflate(center: complex, radius: float) -> float:
    return radius * (1.0 + EPS4) + abs(center) * EPS4


@dataclass(frozen=True)
class Ball:
    center: complex
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    @classmethod
    def point(cls, c) -> "Ball":
        return cls(complex(c), 0.0)

    @classmethod
    def from_square(cls, center, half_side: float) -> "Ball":
        # half diagonal, widened one ulp so the square is strictly covered
        return cls(complex(center), half_side * math.sqrt(2.0) * (1.0 + EPS4))

    def contains(self, z) -> bool:
        return abs(complex(z) - self.center) <= self.radius

    def __add__(self, other):
        if isinstance(other, Ball):
            c = self.center + other.center
            return Ball(c, _inflate(c, self.radius + other.radius))
        c = self.center + complex(other)
        return Ball(c, _inflate(c, self.radius))

    __radd__ = __add__

    def __neg__(self):
        return Ball(-self.center, self.radius)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Ball) else -complex(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Ball):
            c = self.center * other.center
            r = (abs(self.center) * other.radius
                 + abs(other.center) * self.radius
                 + self.radius * other.radius)
            return Ball(c, _inflate(c, r))
        w = complex(other)
        c = self.center * w
        return Ball(c, _inflate(c, self.radius * abs(w)))

    __rmul__ = __mul__

    def sq(self) -> "Ball":
        return self * self

    def mag_lower(self) -> float:
        return max(0.0, abs(self.center) - self.radius)

    def mag_upper(self) -> float:
        return abs(self.center) + self.radius
