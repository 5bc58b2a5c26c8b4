"""Closed-form data for the quadratic family (x, y) -> (y, y^2 + t - delta x)."""

from __future__ import annotations

import cmath
from dataclasses import dataclass


def fixed_point_ys(delta, t):
    """Ordinates (y_plus, y_minus) of the two fixed points.

    Both solve y^2 + t = (1 + delta) y; the fixed points themselves are
    (y, y) on the diagonal.  The square root takes its principal branch.
    """
    delta = complex(delta)
    t = complex(t)
    root = cmath.sqrt((1 + delta) ** 2 - 4 * t)
    return (1 + delta + root) / 2, (1 + delta - root) / 2


@dataclass(frozen=True)
class ConcentrationOctet:
    """The eight points around which the filled Julia set piles up as |t| grows.

    Built from the fixed-point ordinates y+ and y-: for each of them the four
    points (y, y), (y - delta, y), (y, y - 1) and (y - delta, y - 1).  Every
    point lies on one of the lines y = x + c with offset c in
    {0, delta, -1, delta - 1}.
    """

    delta: complex
    t: complex
    points: tuple

    @property
    def line_offsets(self) -> tuple:
        return (0.0, complex(self.delta), -1.0, complex(self.delta) - 1.0)

    def line_residuals(self) -> tuple:
        """Min |b - a - c| over the four offsets, one entry per point."""
        out = []
        for a, b in self.points:
            out.append(min(abs(b - a - c) for c in self.line_offsets))
        return tuple(out)


def concentration_points(delta, t) -> ConcentrationOctet:
    """The explicit eight-point set for the dissipative quadratic family."""
    delta = complex(delta)
    pts = []
    for y in fixed_point_ys(delta, t):
        pts.extend([(y, y), (y - delta, y), (y, y - 1), (y - delta, y - 1)])
    return ConcentrationOctet(delta=delta, t=complex(t), points=tuple(pts))
