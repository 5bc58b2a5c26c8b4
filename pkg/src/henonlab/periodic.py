"""Periodic points in a single fiber: location, multipliers, classification."""

from __future__ import annotations

import cmath
import csv
import enum
from dataclasses import dataclass

import numpy as np

from .errors import NotPeriodic
from .family import Dual, HenonFamily
from .green import escape_data

DEFAULT_CLASSIFY_EPS = 1e-8


class PointClass(enum.Enum):
    SADDLE = "saddle"
    SEMI_REPELLING = "semi-repelling"
    SEMI_ATTRACTING = "semi-attracting"
    REPELLING = "repelling"
    ATTRACTING = "attracting"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class MultiplierPair:
    """Eigenvalues of the differential of f_t^k at a k-periodic point.

    u is the larger-modulus eigenvalue; ties break by real then imaginary
    part, largest first, so the pair is deterministic.
    """

    u: complex
    s: complex


def classify(m: MultiplierPair, eps: float = DEFAULT_CLASSIFY_EPS) -> PointClass:
    """Six-way taxonomy by the multiplier moduli relative to 1.

    A modulus within eps of 1 counts as exactly 1; strict comparisons mean
    strictly beyond the band.  Everything not matching the first five cases
    is neutral.
    """
    mu, ms = abs(m.u), abs(m.s)
    u_big, u_one = mu - 1.0 > eps, abs(mu - 1.0) <= eps
    s_big, s_one = ms - 1.0 > eps, abs(ms - 1.0) <= eps
    u_small, s_small = 1.0 - mu > eps, 1.0 - ms > eps
    if u_big and s_small:
        return PointClass.SADDLE
    if u_big and s_one:
        return PointClass.SEMI_REPELLING
    if u_one and s_small:
        return PointClass.SEMI_ATTRACTING
    if u_big and s_big:
        return PointClass.REPELLING
    if u_small and s_small:
        return PointClass.ATTRACTING
    return PointClass.NEUTRAL


@dataclass(frozen=True)
class PeriodicRecord:
    t: complex
    z: tuple
    period: int
    multipliers: MultiplierPair
    point_class: PointClass
    residual: float
    classify_eps: float = DEFAULT_CLASSIFY_EPS


def _orbit(family: HenonFamily, t, z, k: int):
    bound = family.bind(t)
    pts = [z]
    for _ in range(k - 1):
        pts.append(bound.apply(pts[-1]))
    return pts


def _cycle_differential(family: HenonFamily, t, orbit):
    M = np.eye(2, dtype=complex)
    for z in orbit:
        x, y = z
        c0 = family.evaluate(t, (Dual(complex(x), 1.0), Dual(complex(y), 0.0)))
        c1 = family.evaluate(t, (Dual(complex(x), 0.0), Dual(complex(y), 1.0)))
        J = np.array([[c0[0].eps, c1[0].eps], [c0[1].eps, c1[1].eps]])
        M = J @ M
    return M


def _eigenpair(M) -> MultiplierPair:
    tr = M[0, 0] + M[1, 1]
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    disc = cmath.sqrt(tr * tr - 4 * det)
    lams = [(tr + disc) / 2, (tr - disc) / 2]
    lams.sort(key=lambda w: (abs(w), w.real, w.imag), reverse=True)
    return MultiplierPair(u=complex(lams[0]), s=complex(lams[1]))


def multipliers(family: HenonFamily, t, z, k: int,
                residual_tol: float = 1e-8) -> MultiplierPair:
    """Eigenvalues of D(f_t^k) at z, ordered by modulus."""
    z = (complex(z[0]), complex(z[1]))
    zk = family.iterate(t, z, k)
    scale = 1.0 + max(abs(z[0]), abs(z[1]))
    res = max(abs(zk[0] - z[0]), abs(zk[1] - z[1]))
    if res > residual_tol * scale:
        raise NotPeriodic(f"residual {res:.3e} exceeds {residual_tol:.1e} x scale")
    return _eigenpair(_cycle_differential(family, t, _orbit(family, t, z, k)))


def default_search_box(family: HenonFamily, t):
    """Bounding box [-R, R]^4 from the escape radius; periodic points live inside."""
    R = float(np.max(np.asarray(escape_data(family, t).radius)))
    rect = (-R, R, -R, R)
    return rect, rect


def _seed_grid(search_box, seeds_per_axis: int):
    (xr0, xr1, xi0, xi1), (yr0, yr1, yi0, yi1) = search_box
    n = seeds_per_axis

    def axis(lo, hi):
        return lo + (np.arange(n) + 0.5) * (hi - lo) / n

    xr, xi, yr, yi = np.meshgrid(axis(xr0, xr1), axis(xi0, xi1),
                                 axis(yr0, yr1), axis(yi0, yi1), indexing="ij")
    return (xr + 1j * xi).ravel(), (yr + 1j * yi).ravel()


def _newton_fixed_of_iterate(family, t, X, Y, k, steps=60, blow=1e12):
    """Batched Newton on z -> f_t^k(z) - z; returns converged points."""
    bound = family.bind(t)
    X = X.astype(complex).copy()
    Y = Y.astype(complex).copy()
    alive = np.ones(X.shape, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(steps):
            dx = (Dual(X, np.ones_like(X)), Dual(Y, np.zeros_like(Y)))
            dy = (Dual(X, np.zeros_like(X)), Dual(Y, np.ones_like(Y)))
            for _k in range(k):
                dx = bound.apply(dx)
                dy = bound.apply(dy)
            F1 = dx[0].val - X
            F2 = dx[1].val - Y
            J11 = dx[0].eps - 1.0
            J21 = dx[1].eps
            J12 = dy[0].eps
            J22 = dy[1].eps - 1.0
            det = J11 * J22 - J12 * J21
            bad = ~np.isfinite(det) | (np.abs(det) < 1e-14)
            sx = np.where(bad, 0, (F1 * J22 - F2 * J12) / np.where(bad, 1, det))
            sy = np.where(bad, 0, (J11 * F2 - J21 * F1) / np.where(bad, 1, det))
            alive &= ~bad
            X = np.where(alive, X - sx, X)
            Y = np.where(alive, Y - sy, Y)
            alive &= np.isfinite(X) & np.isfinite(Y)
            alive &= (np.abs(X) < blow) & (np.abs(Y) < blow)
    return X, Y, alive


def find_periodic(family: HenonFamily, t, period: int, search_box=None,
                  seeds_per_axis: int = 5, tol: float = 1e-10,
                  extra_seeds=(), classify_eps: float = DEFAULT_CLASSIFY_EPS):
    """Locate orbits of minimal period `period` in the fiber over t.

    Newton runs from a uniform grid of seeds in the search box (plus any
    extra seeds); converged points are kept when the k-step residual is below
    tol * (1 + |z|), deduplicated by orbit, and checked for minimality
    against proper divisors of the period.  Non-converging seeds are dropped
    silently.
    """
    if period < 1:
        raise ValueError("period must be >= 1")
    if search_box is None:
        search_box = default_search_box(family, t)
    X, Y = _seed_grid(search_box, seeds_per_axis)
    if extra_seeds:
        ex = np.array([z[0] for z in extra_seeds], dtype=complex)
        ey = np.array([z[1] for z in extra_seeds], dtype=complex)
        X = np.concatenate([X, ex])
        Y = np.concatenate([Y, ey])
    X, Y, alive = _newton_fixed_of_iterate(family, t, X, Y, period)

    bound = family.bind(t)
    cands = []
    for x, y, ok in zip(X.tolist(), Y.tolist(), alive.tolist()):
        if not ok:
            continue
        z = (x, y)
        zk = z
        for _ in range(period):
            zk = bound.apply(zk)
        scale = 1.0 + max(abs(x), abs(y))
        res = max(abs(zk[0] - x), abs(zk[1] - y))
        if res <= tol * scale:
            cands.append((x, y, res))
    cands.sort(key=lambda c: (c[0].real, c[0].imag, c[1].real, c[1].imag))

    divisors = [j for j in range(1, period) if period % j == 0]
    records = []
    orbit_cloud = []
    for x, y, res in cands:
        if any(abs(x - ox) + abs(y - oy) < 1e-6 for ox, oy in orbit_cloud):
            continue
        z = (x, y)
        minimal = True
        scale = 1.0 + max(abs(x), abs(y))
        for j in divisors:
            zj = family.iterate(t, z, j)
            if max(abs(zj[0] - x), abs(zj[1] - y)) <= 1e-6 * scale:
                minimal = False
                break
        if not minimal:
            continue
        orbit = _orbit(family, t, z, period)
        orbit_cloud.extend(orbit)
        mult = _eigenpair(_cycle_differential(family, t, orbit))
        records.append(PeriodicRecord(
            t=complex(t), z=z, period=period, multipliers=mult,
            point_class=classify(mult, classify_eps), residual=float(res),
            classify_eps=classify_eps))
    return records


def write_periodic_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_re", "t_im", "x_re", "x_im", "y_re", "y_im", "period",
                    "u_re", "u_im", "s_re", "s_im", "class", "residual"])
        for r in records:
            w.writerow([r.t.real, r.t.imag, r.z[0].real, r.z[0].imag,
                        r.z[1].real, r.z[1].imag, r.period,
                        r.multipliers.u.real, r.multipliers.u.imag,
                        r.multipliers.s.real, r.multipliers.s.imag,
                        r.point_class.value, r.residual])
