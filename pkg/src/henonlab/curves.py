"""Families of curves in the total space and their fiberwise Green energies.

A curve family is a polynomial chart (t, w) -> (x(t, w), y(t, w)) over a
rectangle of chart coordinates.  The fiber energy at t integrates the max
Green function against its own Laplacian over the chart, the family height
is the Laplacian mass of the fiber-energy profile over a parameter window,
and the non-degeneracy probe reports whether any window carries mass at the
working resolution.  Window masses are lower-bound flavored: the boundary
flag records whether the chart boundary was certified outside the filled
Julia set, which is what makes a window mass trustworthy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InjectivityViolation
from .family import HenonFamily, ParamPoly
from .green import DEFAULT_MAX_ITER, DEFAULT_TOL, green_max_grid, grid_nodes
from .measures import DEFAULT_MASS_TOL, measure_from_potential
from .quadratic import concentration_points


class BivarPoly:
    """Polynomial in (t, w): a tuple of t-polynomials indexed by the w power."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        cs = [c if isinstance(c, ParamPoly) else ParamPoly(c) for c in coeffs]
        while cs and cs[-1].is_zero:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def constant(cls, c) -> "BivarPoly":
        return cls((ParamPoly((c,)),))

    @classmethod
    def w_identity(cls) -> "BivarPoly":
        return cls((ParamPoly(()), ParamPoly((1,))))

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, t, w):
        if not self.coeffs:
            return w * 0
        acc = w * 0 + self.coeffs[-1](t)
        for c in reversed(self.coeffs[:-1]):
            acc = acc * w + c(t)
        return acc

    def __add__(self, other):
        if not isinstance(other, BivarPoly):
            other = BivarPoly.constant(other)
        n = max(len(self.coeffs), len(other.coeffs))
        zero = ParamPoly(())
        a = list(self.coeffs) + [zero] * (n - len(self.coeffs))
        b = list(other.coeffs) + [zero] * (n - len(other.coeffs))
        return BivarPoly([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return BivarPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        if not isinstance(other, BivarPoly):
            other = BivarPoly.constant(other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, BivarPoly):
            if self.is_zero or other.is_zero:
                return BivarPoly(())
            zero = ParamPoly(())
            out = [zero] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                for j, b in enumerate(other.coeffs):
                    out[i + j] = out[i + j] + a * b
            return BivarPoly(out)
        if isinstance(other, ParamPoly):
            return BivarPoly([c * other for c in self.coeffs])
        return BivarPoly([c * other for c in self.coeffs])

    __rmul__ = __mul__


@dataclass(frozen=True)
class CurveFamily:
    """Chart (t, w) -> (x, y) with w ranging over a rectangle."""

    x: BivarPoly
    y: BivarPoly
    w_domain: tuple

    def __call__(self, t, w):
        return self.x(t, w), self.y(t, w)

    def check_injective(self, t, grid: int = 20, tol: float = 1e-9) -> None:
        """Grid check that w -> (x, y) does not collide with itself."""
        W, hx, hy = grid_nodes(self.w_domain, grid, grid)
        W = W.ravel()
        zx, zy = self(t, W)
        pts = np.stack([zx, zy], axis=1)
        sep = np.abs(W[:, None] - W[None, :])
        dist = (np.abs(pts[:, None, 0] - pts[None, :, 0])
                + np.abs(pts[:, None, 1] - pts[None, :, 1]))
        scale = 1.0 + float(np.max(np.abs(pts)))
        clash = (sep > 2 * max(hx, hy)) & (dist <= tol * scale)
        if clash.any():
            raise InjectivityViolation(
                f"chart collides with itself at t = {t!r}")


def constant_line(slope, offset, w_domain) -> CurveFamily:
    """Constant family of lines w -> (w, slope*w + offset)."""
    return CurveFamily(x=BivarPoly.w_identity(),
                       y=BivarPoly((ParamPoly((offset,)), ParamPoly((slope,)))),
                       w_domain=tuple(w_domain))


def iterate_curve(family: HenonFamily, curve: CurveFamily, n: int = 1) -> CurveFamily:
    """Curve family reparameterized through n forward iterates of the map."""
    x, y = curve.x, curve.y
    for _ in range(n):
        for f in family.factors:
            # Horner in y with ParamPoly coefficients
            acc = BivarPoly((f.p[-1],))
            for c in reversed(f.p[:-1]):
                acc = acc * y + BivarPoly((c,))
            x, y = y, acc - BivarPoly([q * f.delta for q in x.coeffs])
    return CurveFamily(x=x, y=y, w_domain=curve.w_domain)


@dataclass(frozen=True)
class FiberEnergy:
    value: float
    boundary_ok: bool
    max_width: float


def fiber_energy(family: HenonFamily, curve: CurveFamily, t,
                 w_resolution: int = 128, max_iter: int = DEFAULT_MAX_ITER,
                 tol: float = DEFAULT_TOL, check_injectivity: bool = True) -> FiberEnergy:
    """Integral of G against dd^c G over the fiber chart at t.

    boundary_ok is True when every chart-boundary cell has a certified
    positive Green lower bound, so the fiber's zero locus is fully inside
    the chart and no measure leaks out (maximum principle).
    """
    if check_injectivity:
        curve.check_injective(t)
    n = w_resolution
    W, _, _ = grid_nodes(curve.w_domain, n, n)
    zx, zy = curve(t, W)
    combined, gp, gm = green_max_grid(family, t, zx, zy,
                                      max_iter=max_iter, tol=tol)
    g = combined.midpoint
    mu = measure_from_potential(g, curve.w_domain)
    value = float((g * mu.cell_mass).sum())
    ring = np.zeros_like(g, dtype=bool)
    ring[0, :] = ring[-1, :] = ring[:, 0] = ring[:, -1] = True
    boundary_ok = bool((combined.lower[ring] > 0).all())
    width = float(np.max(np.maximum(gp.width, gm.width)))
    return FiberEnergy(value=value, boundary_ok=boundary_ok, max_width=width)


@dataclass
class CurveEnergyProfile:
    t_rect: tuple
    t_resolution: tuple
    values: np.ndarray
    boundary_ok: np.ndarray


def energy_profile(family: HenonFamily, curve: CurveFamily, t_rect,
                   t_resolution, w_resolution: int = 64,
                   max_iter: int = DEFAULT_MAX_ITER,
                   tol: float = DEFAULT_TOL) -> CurveEnergyProfile:
    """Fiber energies over a parameter grid (injectivity checked once)."""
    nx, ny = t_resolution
    T, _, _ = grid_nodes(t_rect, nx, ny)
    curve.check_injective(complex(T.flat[0]))
    values = np.zeros(T.shape)
    flags = np.zeros(T.shape, dtype=bool)
    for idx in np.ndindex(T.shape):
        fe = fiber_energy(family, curve, complex(T[idx]),
                          w_resolution=w_resolution, max_iter=max_iter,
                          tol=tol, check_injectivity=False)
        values[idx] = fe.value
        flags[idx] = fe.boundary_ok
    return CurveEnergyProfile(t_rect=tuple(t_rect), t_resolution=(nx, ny),
                              values=values, boundary_ok=flags)


def family_height(family: HenonFamily, curve: CurveFamily, t_rect,
                  t_resolution, w_resolution: int = 64,
                  max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL):
    """Windowed mass of the family height: dd^c of the fiber-energy profile.

    The true height integrates over the whole parameter curve; a window mass
    is a lower-bound style diagnostic and is reported as such.
    """
    profile = energy_profile(family, curve, t_rect, t_resolution,
                             w_resolution, max_iter, tol)
    mass = measure_from_potential(profile.values, t_rect).total
    return mass, profile


@dataclass(frozen=True)
class NondegeneracyVerdict:
    kind: str          # "nonzero-at-resolution" or "vanishing-within"
    value: float
    window_masses: tuple


def nondegeneracy_probe(family: HenonFamily, curve: CurveFamily, windows,
                        mass_tol: float = DEFAULT_MASS_TOL) -> NondegeneracyVerdict:
    """Mass probe over parameter windows.

    Declares nonzero when any window mass clears 10x mass_tol; otherwise
    reports vanishing at the working resolution.  No claim of degeneracy is
    ever made beyond the stated windows and resolutions.
    """
    masses = []
    for win in windows:
        t_rect, t_res, w_res = win
        re_lo, re_hi, im_lo, im_hi = t_rect
        if re_hi <= re_lo or im_hi <= im_lo:
            masses.append(0.0)
            continue
        mass, _ = family_height(family, curve, t_rect, t_res, w_res)
        masses.append(mass)
    peak = max((abs(m) for m in masses), default=0.0)
    if any(m > 10 * mass_tol for m in masses):
        return NondegeneracyVerdict(kind="nonzero-at-resolution",
                                    value=max(masses), window_masses=tuple(masses))
    return NondegeneracyVerdict(kind="vanishing-within",
                                value=max(peak, mass_tol),
                                window_masses=tuple(masses))


@dataclass(frozen=True)
class SigmaDistanceReport:
    rows: tuple
    passed: bool
    warning: str | None


def sigma_distance_check(curve: CurveFamily, delta, t_samples, r: float,
                         w_resolution: int = 512) -> SigmaDistanceReport:
    """Min Euclidean C^2 distance from the fiber chart to the eight-point set.

    Distances are grid minima over the chart rectangle, so they approximate
    the fiber distance from above.  Empty sample lists pass vacuously with a
    warning.
    """
    t_samples = list(t_samples)
    if not t_samples:
        return SigmaDistanceReport(rows=(), passed=True,
                                   warning="no parameter samples supplied")
    W, _, _ = grid_nodes(curve.w_domain, w_resolution, w_resolution)
    rows = []
    ok = True
    for t in t_samples:
        zx, zy = curve(t, W)
        best = math.inf
        for (px, py) in concentration_points(delta, t).points:
            d2 = np.abs(zx - px) ** 2 + np.abs(zy - py) ** 2
            best = min(best, float(np.sqrt(d2.min())))
        rows.append({"t": complex(t), "min_distance": best})
        ok = ok and best >= r
    return SigmaDistanceReport(rows=tuple(rows), passed=ok, warning=None)
