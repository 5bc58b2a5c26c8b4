"""Marked-point Green measures on the parameter plane.

The measure attached to a marked point is the distributional Laplacian of
G+- composed with the marked point, discretized here by a five-point stencil
on a rectangle of cell centers.  The normalization constant 1/(2 pi) is
pinned by the convention that the discrete mass of t -> log|t| over a disk
around the origin equals 1, and every downstream ratio (proportionality
gamma, discrepancy tables) is invariant under it.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateFit, DegenerateParameter, GloballyPeriodic,
                     NotReversible, ResolutionTooCoarse)
from .family import (Dual, HenonFamily, MarkedPoint, ParamPoly,
                     is_globally_periodic)
from .green import (DEFAULT_MAX_ITER, DEFAULT_TOL, GreenEnclosure, green,
                    green_grid, grid_nodes)

DEFAULT_MASS_TOL = 1e-6


@dataclass
class GridMeasure:
    """Discretized positive measure on a parameter rectangle."""

    rect: tuple
    nx: int
    ny: int
    cell_mass: np.ndarray
    total: float
    mass_tol: float = DEFAULT_MASS_TOL

    @property
    def min_cell(self) -> float:
        return float(self.cell_mass.min())

    def negatives(self) -> int:
        """Cells below -mass_tol; discretization noise is reported, not hidden."""
        return int((self.cell_mass < -self.mass_tol).sum())


def measure_from_potential(values: np.ndarray, rect,
                           mass_tol: float = DEFAULT_MASS_TOL) -> GridMeasure:
    """Five-point discrete Laplacian mass of a potential sampled on cell centers."""
    v = np.asarray(values, dtype=float)
    ny, nx = v.shape
    re_lo, re_hi, im_lo, im_hi = rect
    hx = (re_hi - re_lo) / nx
    hy = (im_hi - im_lo) / ny
    mass = np.zeros_like(v)
    lap = ((v[1:-1, 2:] + v[1:-1, :-2] - 2 * v[1:-1, 1:-1]) / hx ** 2
           + (v[2:, 1:-1] + v[:-2, 1:-1] - 2 * v[1:-1, 1:-1]) / hy ** 2)
    mass[1:-1, 1:-1] = lap * hx * hy / (2 * math.pi)
    return GridMeasure(rect=tuple(rect), nx=nx, ny=ny, cell_mass=mass,
                       total=float(mass.sum()), mass_tol=mass_tol)


def marked_green(family: HenonFamily, sigma: MarkedPoint, t, sign: int = 1,
                 max_iter: int = DEFAULT_MAX_ITER,
                 tol: float = DEFAULT_TOL) -> GreenEnclosure:
    """G+- of the family evaluated along the marked point at one parameter."""
    return green(family, t, sigma(complex(t)), sign=sign,
                 max_iter=max_iter, tol=tol)


def marked_potential(family: HenonFamily, sigma: MarkedPoint, sign, rect,
                     resolution, max_iter: int = DEFAULT_MAX_ITER,
                     tol: float = DEFAULT_TOL):
    """(values, max enclosure width) of G+- along sigma over a parameter grid."""
    nx, ny = resolution
    T, _, _ = grid_nodes(rect, nx, ny)
    zx, zy = sigma(T)
    g = green_grid(family, T, zx, zy, sign=sign, max_iter=max_iter, tol=tol)
    return g.midpoint, float(np.max(g.width))


def measure_grid(family: HenonFamily, sigma: MarkedPoint, sign, rect,
                 resolution, max_iter: int = DEFAULT_MAX_ITER,
                 tol: float = DEFAULT_TOL, mass_tol: float = DEFAULT_MASS_TOL,
                 potential=None) -> GridMeasure:
    """Discrete Green measure of the marked point over the rectangle.

    potential overrides the Green computation with a caller-supplied grid of
    values (the calibration and self-test hook).
    """
    nx, ny = resolution
    re_lo, re_hi, im_lo, im_hi = rect
    hx = (re_hi - re_lo) / nx
    hy = (im_hi - im_lo) / ny
    if potential is not None:
        values = np.asarray(potential, dtype=float)
        if values.shape != (ny, nx):
            raise ValueError("potential grid shape does not match resolution")
    else:
        values, max_width = marked_potential(family, sigma, sign, rect,
                                             resolution, max_iter, tol)
        if max_width > 0.1 * min(hx, hy) ** 2:
            raise ResolutionTooCoarse(
                f"enclosure width {max_width:.2e} too large for cell size "
                f"{min(hx, hy):.2e}; raise max_iter or coarsen the grid")
    return measure_from_potential(values, rect, mass_tol=mass_tol)


@dataclass(frozen=True)
class ProportionalityReport:
    gamma: float
    residual: float
    harmonic_defect: float


def proportionality_test(mu_plus: GridMeasure, mu_minus: GridMeasure,
                         g_plus=None, g_minus=None,
                         mass_tol: float = DEFAULT_MASS_TOL) -> ProportionalityReport:
    """Least-squares fit of mu+ against gamma times mu- at the measure level.

    The residual is the relative L1 error of the fit.  When both value grids
    are supplied, the harmonic defect is the total absolute Laplacian mass of
    g+ - gamma g-, which vanishes exactly when the two potentials differ by
    a harmonic function.
    """
    if (mu_plus.rect != mu_minus.rect or mu_plus.nx != mu_minus.nx
            or mu_plus.ny != mu_minus.ny):
        raise ValueError("measures must share rectangle and resolution")
    if abs(mu_minus.total) < mass_tol:
        raise DegenerateFit(
            f"mu- total {mu_minus.total:.2e} below mass_tol {mass_tol:.1e}")
    mp = mu_plus.cell_mass.ravel()
    mm = mu_minus.cell_mass.ravel()
    denom = float(mm @ mm)
    if denom == 0:
        raise DegenerateFit("mu- has no mass in any cell")
    gamma = float(mp @ mm) / denom
    if gamma <= 0:
        raise DegenerateFit(f"fitted gamma {gamma:.2e} is not positive")
    ref = float(np.abs(mp).sum())
    residual = float(np.abs(mp - gamma * mm).sum()) / ref if ref > 0 else 0.0
    defect = math.nan
    if g_plus is not None and g_minus is not None:
        diff = np.asarray(g_plus, dtype=float) - gamma * np.asarray(g_minus, dtype=float)
        defect = float(np.abs(
            measure_from_potential(diff, mu_plus.rect).cell_mass).sum())
    return ProportionalityReport(gamma=gamma, residual=residual,
                                 harmonic_defect=defect)


# ---------------------------------------------------------------------------
# Periodic parameters of a marked point.
# ---------------------------------------------------------------------------

def _rect_seeds(rect, seeds: int):
    re_lo, re_hi, im_lo, im_hi = rect
    re = re_lo + (np.arange(seeds) + 0.5) * (re_hi - re_lo) / seeds
    im = im_lo + (np.arange(seeds) + 0.5) * (im_hi - im_lo) / seeds
    rr, ii = np.meshgrid(re, im, indexing="ij")
    return (rr + 1j * ii).ravel()


def _in_rect(t: complex, rect, slack: float = 0.1) -> bool:
    re_lo, re_hi, im_lo, im_hi = rect
    mr = slack * (re_hi - re_lo)
    mi = slack * (im_hi - im_lo)
    return (re_lo - mr <= t.real <= re_hi + mr
            and im_lo - mi <= t.imag <= im_hi + mi)


def periodic_params(family: HenonFamily, sigma: MarkedPoint, period: int,
                    rect, seeds: int = 12, tol: float = 1e-10,
                    newton_steps: int = 80, dedup_tol: float = 1e-8,
                    periodicity_bound: int = 12):
    """Parameters t in the rectangle where sigma(t) is periodic of period n.

    Gauss-Newton on t -> f_t^n(sigma(t)) - sigma(t), with the derivative
    carried by a dual number through the whole iteration.  Roots are accepted
    at residual <= tol and deduplicated; an empty list is a valid outcome.
    """
    if is_globally_periodic(family, sigma, bound=periodicity_bound):
        raise GloballyPeriodic("marked point is globally periodic")
    T = _rect_seeds(rect, seeds)
    with np.errstate(all="ignore"):
        for _ in range(newton_steps):
            td = Dual(T, np.ones_like(T))
            z = sigma(td)
            bound_map = family.bind(td)
            for _k in range(period):
                z = bound_map.apply(z)
            a, b = sigma(td)
            F1, F2 = z[0] - a, z[1] - b
            J1, J2 = F1.eps, F2.eps
            F1, F2 = F1.val, F2.val
            den = np.abs(J1) ** 2 + np.abs(J2) ** 2
            ok = np.isfinite(den) & (den > 1e-30)
            step = (np.conj(J1) * F1 + np.conj(J2) * F2) / np.where(ok, den, 1.0)
            T = np.where(ok, T - step, T)
            T = np.where(np.isfinite(T), T, 0.0)

    found = []
    for t in T.tolist():
        if not _in_rect(t, rect):
            continue
        try:
            zx, zy = family.iterate(t, sigma(t), period)
        except DegenerateParameter:
            continue
        a, b = sigma(t)
        res = math.hypot(abs(zx - a), abs(zy - b))
        if res <= tol:
            found.append((t, res))
    found.sort(key=lambda p: (p[0].real, p[0].imag))
    out = []
    for t, _ in found:
        if all(abs(t - s) > dedup_tol for s in out):
            out.append(t)
    return out


def _involution(z):
    return (-z[1], -z[0])


def check_reversible(family: HenonFamily, samples: int = 8,
                     tol: float = 1e-9) -> None:
    """Verify tau . f_t . tau = f_t^-1 on a fixed pseudo-random sample."""
    rng = np.random.default_rng(0x7A0)
    for _ in range(samples):
        t = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        z = (complex(rng.uniform(-2, 2), rng.uniform(-2, 2)),
             complex(rng.uniform(-2, 2), rng.uniform(-2, 2)))
        try:
            lhs = _involution(family.evaluate(t, _involution(z)))
            rhs = family.evaluate_inverse(t, z)
        except DegenerateParameter:
            continue
        scale = 1.0 + max(abs(rhs[0]), abs(rhs[1]))
        if max(abs(lhs[0] - rhs[0]), abs(lhs[1] - rhs[1])) > tol * scale:
            raise NotReversible("family fails tau . f . tau = f^-1")


def symmetric_periodic_params(family: HenonFamily, sigma: MarkedPoint,
                              half_period: int, rect, seeds: int = 24,
                              tol: float = 1e-10, newton_steps: int = 80,
                              dedup_tol: float = 1e-8):
    """Parameters where the orbit of a symmetric marked point re-enters x+y=0.

    For a reversible family and sigma on the fixed line of tau(x,y)=(-y,-x),
    a parameter with f_t^n(sigma(t)) back on the line yields a 2n-periodic
    point, so one complex equation (x_n + y_n)(t) = 0 replaces the full
    periodicity system.  Newton runs from a grid of seeds; root counts grow
    with the half period.
    """
    check_reversible(family)
    line_defect = sigma.a + sigma.b
    if not (line_defect.is_zero or line_defect.approx_equal(ParamPoly(()), 1e-12)):
        raise NotReversible("marked point does not lie on the line x + y = 0")
    T = _rect_seeds(rect, seeds)
    with np.errstate(all="ignore"):
        for _ in range(newton_steps):
            td = Dual(T, np.ones_like(T))
            z = sigma(td)
            bound_map = family.bind(td)
            for _k in range(half_period):
                z = bound_map.apply(z)
            g = z[0] + z[1]
            ok = np.isfinite(g.eps) & (np.abs(g.eps) > 1e-30)
            T = np.where(ok, T - g.val / np.where(ok, g.eps, 1.0), T)
            T = np.where(np.isfinite(T), T, 0.0)

    found = []
    for t in T.tolist():
        if not _in_rect(t, rect):
            continue
        try:
            zx, zy = family.iterate(t, sigma(t), half_period)
        except DegenerateParameter:
            continue
        if abs(zx + zy) <= tol:
            found.append(t)
    found.sort(key=lambda w: (w.real, w.imag))
    out = []
    for t in found:
        if all(abs(t - s) > dedup_tol for s in out):
            out.append(t)
    return out


# ---------------------------------------------------------------------------
# Empirical equidistribution report.
# ---------------------------------------------------------------------------

def total_variation(params, mu: GridMeasure, partition=(8, 8)) -> float:
    """TV distance between normalized counting and normalized |mu| masses."""
    cx, cy = partition
    re_lo, re_hi, im_lo, im_hi = mu.rect
    weights = np.abs(mu.cell_mass)
    if weights.sum() <= 0:
        raise ValueError("measure has no mass over the window")
    T, _, _ = grid_nodes(mu.rect, mu.nx, mu.ny)
    bx = np.clip(((T.real - re_lo) / (re_hi - re_lo) * cx).astype(int), 0, cx - 1)
    by = np.clip(((T.imag - im_lo) / (im_hi - im_lo) * cy).astype(int), 0, cy - 1)
    q = np.zeros((cy, cx))
    np.add.at(q, (by, bx), weights)
    q /= q.sum()
    inside = [t for t in params
              if re_lo <= t.real <= re_hi and im_lo <= t.imag <= im_hi]
    p = np.zeros((cy, cx))
    for t in inside:
        ix = min(cx - 1, int((t.real - re_lo) / (re_hi - re_lo) * cx))
        iy = min(cy - 1, int((t.imag - im_lo) / (im_hi - im_lo) * cy))
        p[iy, ix] += 1.0
    if p.sum() == 0:
        return 1.0
    p /= p.sum()
    return 0.5 * float(np.abs(p - q).sum())


def equidistribution_report(params_by_period: dict, mu: GridMeasure,
                            partition=(8, 8)):
    """Per-period TV distances against the window measure (report only)."""
    if mu.total <= 0:
        raise ValueError("measure total must be positive")
    rows = []
    for period in sorted(params_by_period):
        params = params_by_period[period]
        re_lo, re_hi, im_lo, im_hi = mu.rect
        inside = sum(1 for t in params
                     if re_lo <= t.real <= re_hi and im_lo <= t.imag <= im_hi)
        rows.append({"period": period, "count": len(params),
                     "in_window": inside,
                     "tv": total_variation(params, mu, partition)})
    return rows


# ---------------------------------------------------------------------------
# .gmz serialization: one-line JSON header, then row-major little-endian f64.
# ---------------------------------------------------------------------------

def write_gmz(mu: GridMeasure, path) -> None:
    header = {"rect": list(mu.rect), "nx": mu.nx, "ny": mu.ny,
              "total": mu.total, "mass_tol": mu.mass_tol}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(mu.cell_mass.astype("<f8").tobytes())


def read_gmz(path) -> GridMeasure:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        data = np.frombuffer(fh.read(), dtype="<f8")
    ny, nx = header["ny"], header["nx"]
    cells = data.reshape(ny, nx).copy()
    return GridMeasure(rect=tuple(header["rect"]), nx=nx, ny=ny,
                       cell_mass=cells, total=header["total"],
                       mass_tol=header["mass_tol"])
