"""Machine-checkable filled-Julia containment for the dissipative quadratic family.

A certificate states that every point of the a priori polydisk D(0,R)^2 that
lies outside the listed bidisks escapes under at most `iterations` steps of
the outward-conservative ball extension of (x, y) -> (y, y^2 + t - delta x).
Cells are product squares; the scheduler starts from one root cell and
subdivides failing cells, which certifies the same logical tiling as a
uniform grid at `cell_size`: the true image of a subcell is contained in the
image ball of any covering cell, so a passing coarse ball certifies all the
base cells it covers.  Three extra refinement levels below the base size are
tried before a cell is declared failing.

Rounding model: every ball operation inflates the radius by 4 machine
epsilons relative to both radius and center magnitude, matching
henonlab.ball exactly.  Certificates are rigorous up to that model.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass

import numpy as np

from .ball import EPS4
from .errors import SweepExhausted
from .family import quadratic_family
from .green import escape_data
from .quadratic import concentration_points, fixed_point_ys

_OVERFLOW = 1e100


def _inflate(c, r):
    return r * (1.0 + EPS4) + np.abs(c) * EPS4


def _ball_step(cx, rx, cy, ry, delta, t):
    """One quadratic Henon step on arrays of balls, op-for-op as ball.Ball."""
    c1 = cy * cy
    r1 = _inflate(c1, 2.0 * np.abs(cy) * ry + ry * ry)
    c2 = c1 + t
    r2 = _inflate(c2, r1)
    c3 = delta * cx
    r3 = _inflate(c3, abs(delta) * rx)
    c4 = c2 - c3
    r4 = _inflate(c4, r2 + r3)
    return cy, ry, c4, r4


def _escape_pass(cx, rx, cy, ry, radius):
    ylo = np.abs(cy) - ry
    return (ylo >= np.abs(cx) + rx) & (ylo >= 2.0 * radius)


@dataclass
class Certificate:
    delta: complex
    t: complex
    centers: tuple
    bidisk_radius: float
    cell_size: float
    iterations: int
    region_radius: float
    max_depth: int
    verdict: str                 # "certified" | "inconclusive"
    passed_count: int
    failing_cells: tuple
    digest: str
    passed_cells: np.ndarray     # (N, 5) int64 rows: depth, ix, jx, iy, jy

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"


def _cell_geometry(rows, region_radius: float):
    """Centers and half sides of (depth, ix, jx, iy, jy) lattice cells."""
    depth = rows[:, 0].astype(np.float64)
    half = region_radius / np.exp2(depth)
    S = region_radius

    def coord(idx):
        return -S + (2.0 * rows[:, idx].astype(np.float64) + 1.0) * half

    cx = coord(1) + 1j * coord(2)
    cy = coord(3) + 1j * coord(4)
    return cx, cy, half


def _iterate_cells(cx, cy, half, delta, t, radius, iterations):
    """Ball-iterate cells; True where the image certifiably escapes."""
    r0 = half * math.sqrt(2.0) * (1.0 + EPS4)
    bx, rx, by, ry = cx.copy(), r0.copy(), cy.copy(), r0.copy()
    passed = _escape_pass(bx, rx, by, ry, radius)
    live = ~passed
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(iterations):
            if not live.any():
                break
            nbx, nrx, nby, nry = _ball_step(bx, rx, by, ry, delta, t)
            bx = np.where(live, nbx, bx)
            rx = np.where(live, nrx, rx)
            by = np.where(live, nby, by)
            ry = np.where(live, nry, ry)
            hit = live & _escape_pass(bx, rx, by, ry, radius)
            passed |= hit
            live &= ~hit
            # balls that blew past float range without certifying: give up on them
            over = live & ((np.abs(by) > _OVERFLOW) | ~np.isfinite(np.abs(by)))
            live &= ~over
    return passed


def _subdivide(rows):
    """The 16 children of each (depth, ix, jx, iy, jy) cell, in lattice order."""
    n = rows.shape[0]
    out = np.empty((n * 16, 5), dtype=np.int64)
    k = 0
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                for dl in (0, 1):
                    blk = out[k * n:(k + 1) * n]
                    blk[:, 0] = rows[:, 0] + 1
                    blk[:, 1] = rows[:, 1] * 2 + di
                    blk[:, 2] = rows[:, 2] * 2 + dj
                    blk[:, 3] = rows[:, 3] * 2 + dk
                    blk[:, 4] = rows[:, 4] * 2 + dl
                    k += 1
    order = np.lexsort(out.T[::-1])
    return out[order]


def certify_containment(delta, t, bidisk_centers, bidisk_radius: float,
                        cell_size: float, iterations: int,
                        extra_depth: int = 3,
                        region_radius: float | None = None) -> Certificate:
    """Certify that the filled Julia set avoids the region outside the bidisks.

    bidisk_centers is a sequence of (cx, cy) pairs; each bidisk is the
    product of the two disks of the given radius.  Inconclusive is a valid
    verdict listing the cells that neither escaped nor resolved under
    refinement.
    """
    delta = complex(delta)
    t = complex(t)
    if abs(delta) >= 1:
        raise ValueError("certification requires |delta| < 1")
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    if region_radius is None:
        fam = quadratic_family(delta)
        region_radius = float(np.max(np.asarray(escape_data(fam, t).radius)))
    S = float(region_radius)
    base_depth = max(0, math.ceil(math.log2(2 * S / cell_size)))
    max_depth = base_depth + extra_depth
    centers = tuple((complex(a), complex(b)) for a, b in bidisk_centers)
    px = np.array([c[0] for c in centers])
    py = np.array([c[1] for c in centers])

    level = np.zeros((1, 5), dtype=np.int64)
    passed_chunks = []
    failing = []
    passed_count = 0
    while level.size:
        cx, cy, half = _cell_geometry(level, S)
        diag = half * math.sqrt(2.0)
        # outside the a priori polydisk: not part of the region
        keep = ~((np.abs(cx) - diag > S) | (np.abs(cy) - diag > S))
        # wholly inside one bidisk: allowed territory
        inside = np.zeros(level.shape[0], dtype=bool)
        for a, b in zip(px, py):
            inside |= ((np.abs(cx - a) + diag <= bidisk_radius)
                       & (np.abs(cy - b) + diag <= bidisk_radius))
        keep &= ~inside
        level, cx, cy, half = level[keep], cx[keep], cy[keep], half[keep]
        if not level.size:
            break
        ok = _iterate_cells(cx, cy, half, delta, t, S, iterations)
        if ok.any():
            passed_chunks.append(level[ok])
            passed_count += int(ok.sum())
        rest = level[~ok]
        if rest.size:
            deep = rest[:, 0] >= max_depth
            if deep.any():
                failing.extend(map(tuple, rest[deep].tolist()))
            rest = rest[~deep]
        level = _subdivide(rest) if rest.size else np.empty((0, 5), dtype=np.int64)

    passed = (np.concatenate(passed_chunks) if passed_chunks
              else np.empty((0, 5), dtype=np.int64))
    order = np.lexsort(passed.T[::-1])
    passed = passed[order]
    verdict = "certified" if not failing else "inconclusive"
    digest = hashlib.sha256()
    digest.update(json.dumps({
        "delta": [delta.real, delta.imag], "t": [t.real, t.imag],
        "centers": [[c[0].real, c[0].imag, c[1].real, c[1].imag] for c in centers],
        "radius": bidisk_radius, "cell_size": cell_size,
        "iterations": iterations, "region_radius": S,
    }, sort_keys=True).encode())
    digest.update(passed.tobytes())
    digest.update(np.array(sorted(failing), dtype=np.int64).tobytes())
    return Certificate(delta=delta, t=t, centers=centers,
                       bidisk_radius=float(bidisk_radius),
                       cell_size=float(cell_size), iterations=int(iterations),
                       region_radius=S, max_depth=max_depth, verdict=verdict,
                       passed_count=passed_count,
                       failing_cells=tuple(sorted(failing)),
                       digest=digest.hexdigest(), passed_cells=passed)


def verify_certificate(cert: Certificate, fraction: float = 0.01,
                       seed: int = 0) -> bool:
    """Independent replay of a random sample of the certificate's cells.

    Re-runs the ball iteration on ceil(fraction * N) passed cells chosen by
    a seeded RNG; every replayed cell must escape again.
    """
    n = cert.passed_cells.shape[0]
    if n == 0:
        return cert.certified
    count = max(1, math.ceil(fraction * n))
    rng = random.Random(seed)
    idx = sorted(rng.sample(range(n), min(count, n)))
    rows = cert.passed_cells[idx]
    cx, cy, half = _cell_geometry(rows, cert.region_radius)
    ok = _iterate_cells(cx, cy, half, cert.delta, cert.t, cert.region_radius,
                        cert.iterations)
    return bool(ok.all())


def certificate_to_json(cert: Certificate) -> dict:
    return {
        "delta": [cert.delta.real, cert.delta.imag],
        "t": [cert.t.real, cert.t.imag],
        "centers": [[c[0].real, c[0].imag, c[1].real, c[1].imag]
                    for c in cert.centers],
        "bidisk_radius": cert.bidisk_radius,
        "cell_size": cert.cell_size,
        "iterations": cert.iterations,
        "region_radius": cert.region_radius,
        "max_depth": cert.max_depth,
        "verdict": cert.verdict,
        "passed_count": cert.passed_count,
        "failing_cells": [list(c) for c in cert.failing_cells],
        "digest": cert.digest,
    }


def fixed_point_bidisk_centers(delta, t) -> tuple:
    """The four diagonal products built from the two fixed-point ordinates."""
    yp, ym = fixed_point_ys(delta, t)
    return ((yp, yp), (yp, ym), (ym, yp), (ym, ym))


def octet_bidisk_centers(delta, t) -> tuple:
    """The eight concentration points as bidisk centers."""
    return concentration_points(delta, t).points


@dataclass(frozen=True)
class RtEstimate:
    radius: float
    certificate: Certificate
    attempts: tuple        # (radius, verdict) pairs in sweep order


def estimate_rt(delta, t, cell_size: float = 0.05, iterations: int = 30,
                r_start: float = 2.0, sweep_depth: int = 6) -> RtEstimate:
    """Smallest dyadic radius whose eight-point containment certifies.

    Sweeps r_start, r_start/2, ... downward while certification succeeds,
    stopping at the first failure or when the radius approaches the cell
    floor.  Raises SweepExhausted when even the largest radius fails.
    """
    delta = complex(delta)
    if abs(delta) >= 1:
        raise ValueError("estimate requires |delta| < 1")
    centers = octet_bidisk_centers(delta, t)
    best = None
    attempts = []
    r = float(r_start)
    for _ in range(sweep_depth):
        if r < 4 * cell_size:
            break
        cert = certify_containment(delta, t, centers, r, cell_size, iterations)
        attempts.append((r, cert.verdict))
        if not cert.certified:
            break
        best = (r, cert)
        r /= 2.0
    if best is None:
        raise SweepExhausted(
            f"containment failed even at radius {r_start} for t = {t!r}")
    return RtEstimate(radius=best[0], certificate=best[1],
                      attempts=tuple(attempts))
