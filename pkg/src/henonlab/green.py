"""Certified enclosures of the forward and backward escape-rate potentials.

The potential of a point z under f_t is the limit of d^-n log+ of the sup
norm of f_t^(+-n)(z).  Once an orbit enters the escape region
{|y| >= max(|x|, R_t)} (or its mirror for the inverse direction) the
normalized log of the dominant coordinate is a d^-n-accurate estimate with a
fully explicit geometric tail bound, which is what the enclosures certify.

Orbits are tracked in plain complex doubles until the coordinates grow large
and then in log-polar form (log magnitude plus unit phase), so iterate counts
far beyond floating-point range cost nothing.  Enclosures are certified
relative to the computed floating-point orbit; a small per-step rounding
allowance is folded into the interval width and documented here rather than
hidden.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .family import HenonFamily

DEFAULT_MAX_ITER = 64
DEFAULT_TOL = 1e-9
_LOGPOLAR_SWITCH = 1e12       # coordinate magnitude that triggers log tracking
_LOGPOLAR_RETURN = math.log(1e9)
_EPS = 2.220446049250313e-16


@dataclass(frozen=True)
class EscapeData:
    """Escape radius and per-direction tail constants at a fixed parameter.

    radius: R with {|y| >= max(|x|, R)} forward invariant and norm-doubling.
    tail_forward / tail_backward: C with |log|y_(n+1)| - d log|y_n|| <= C
    along escaped orbits, so |G - d^-n log|y_n|| <= C / (d^n (d - 1)).
    """

    radius: object
    tail_forward: object
    tail_backward: object


def escape_data(family: HenonFamily, t, verify: bool | None = None,
                seed: int = 0xE5C) -> EscapeData:
    """Compute (and for scalar t, sample-verify) the escape filtration data."""
    bound = family.bind(t)
    sums, dmags = [], []
    for cvals, dval in zip(bound.cvals, bound.dvals):
        s = 0.0
        for c in cvals[:-1]:
            s = s + np.abs(np.asarray(c, dtype=complex))
        sums.append(s)
        dmags.append(np.abs(np.asarray(dval, dtype=complex)))
    peak = sums[0] + dmags[0]
    for s, dm in zip(sums[1:], dmags[1:]):
        peak = np.maximum(peak, s + dm)
    radius = np.maximum(2.0, 2.0 * (1.0 + peak))

    degrees = bound.degrees
    k = len(degrees)
    cf = [np.log(2.0 + s + dm) for s, dm in zip(sums, dmags)]
    cb = [np.log(2.0 + s) + np.abs(np.log(dm)) for s, dm in zip(sums, dmags)]
    tail_f = 0.0
    for j in range(k):
        w = 1
        for l in range(j + 1, k):
            w *= degrees[l]
        tail_f = tail_f + cf[j] * w
    tail_b = 0.0
    for j in range(k):
        w = 1
        for l in range(j):
            w *= degrees[l]
        tail_b = tail_b + cb[j] * w

    is_array = isinstance(radius, np.ndarray) and radius.shape != ()
    if verify is None:
        verify = not is_array
    if verify and not is_array:
        radius = float(radius)
        d = bound.degree
        rng = np.random.default_rng(seed)
        for _ in range(7):
            ok = True
            for _ in range(48):
                mag = radius * math.exp(rng.uniform(0.0, math.log(3.0)))
                y = mag * np.exp(1j * rng.uniform(0, 2 * math.pi))
                x = y * rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * math.pi))
                x1, y1 = bound.apply((complex(x), complex(y)))
                if not (max(abs(x1), abs(y1)) >= 2 * mag and abs(y1) >= mag ** d / 2):
                    ok = False
                    break
            if ok:
                break
            radius *= 2.0
        else:
            raise RuntimeError("escape radius verification failed to stabilize")
    return EscapeData(radius=radius, tail_forward=tail_f, tail_backward=tail_b)


@dataclass(frozen=True)
class GreenEnclosure:
    """Certified interval for one Green value with escape metadata."""

    lower: float
    upper: float
    escaped_at: int | None
    iterations_used: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


@dataclass
class GreenGrid:
    """Vectorized enclosure data over a batch of points."""

    lower: np.ndarray
    upper: np.ndarray
    escaped_at: np.ndarray     # -1 where the orbit never certified escape
    iterations: np.ndarray

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def enclosure(self, idx=0) -> GreenEnclosure:
        e = int(self.escaped_at.flat[idx])
        return GreenEnclosure(
            lower=float(self.lower.flat[idx]),
            upper=float(self.upper.flat[idx]),
            escaped_at=None if e < 0 else e,
            iterations_used=int(self.iterations.flat[idx]))


def _to_logpolar(v):
    mag = np.abs(v)
    with np.errstate(divide="ignore"):
        u = np.log(mag)
    theta = np.where(mag > 0, v / np.where(mag > 0, mag, 1.0), 1.0 + 0j)
    return u, theta


def _phase(c):
    mag = np.abs(c)
    return np.where(mag > 0, c / np.where(mag > 0, mag, 1.0), 1.0 + 0j)


class _LogPolarStepper:
    """One generalized Henon factor step on log-polar coordinates.

    Sums the polynomial terms after factoring out the dominant magnitude, so
    arbitrarily large orbits reduce to unit-scale complex arithmetic.  Tracks
    a per-lane rounding allowance that grows when the normalized sum suffers
    cancellation.
    """

    def __init__(self, bound):
        self.bound = bound

    def forward(self, k, ux, tx, uy, ty, err):
        c = self.bound.cvals[k]
        dval = self.bound.dvals[k]
        deg = len(c) - 1
        terms_L = []
        terms_P = []
        for i, ci in enumerate(c):
            cmag = np.abs(np.asarray(ci, dtype=complex))
            with np.errstate(divide="ignore"):
                L = np.log(cmag) + i * uy
            terms_L.append(L)
            terms_P.append(_phase(np.asarray(ci, dtype=complex)) * ty ** i)
        dmag = np.abs(np.asarray(dval, dtype=complex))
        with np.errstate(divide="ignore"):
            terms_L.append(np.log(dmag) + ux)
        terms_P.append(-_phase(np.asarray(dval, dtype=complex)) * tx)
        u_new, t_new, m = _log_sum(terms_L, terms_P)
        err_new = deg * np.maximum(err, 0.0) + (deg + 2) * 4.0 * _EPS / np.maximum(m, 1e-30)
        return uy, ty, u_new, t_new, err_new

    def backward(self, k, ux, tx, uy, ty, err):
        c = self.bound.cvals[k]
        dval = self.bound.dvals[k]
        deg = len(c) - 1
        terms_L = []
        terms_P = []
        for i, ci in enumerate(c):
            cmag = np.abs(np.asarray(ci, dtype=complex))
            with np.errstate(divide="ignore"):
                L = np.log(cmag) + i * ux
            terms_L.append(L)
            terms_P.append(_phase(np.asarray(ci, dtype=complex)) * tx ** i)
        terms_L.append(uy)
        terms_P.append(-ty)
        u_new, t_new, m = _log_sum(terms_L, terms_P)
        dmag = np.abs(np.asarray(dval, dtype=complex))
        u_new = u_new - np.log(dmag)
        t_new = t_new * np.conjugate(_phase(np.asarray(dval, dtype=complex)))
        err_new = deg * np.maximum(err, 0.0) + (deg + 2) * 4.0 * _EPS / np.maximum(m, 1e-30)
        return u_new, t_new, ux, tx, err_new


def _log_sum(terms_L, terms_P):
    M = terms_L[0]
    for L in terms_L[1:]:
        M = np.maximum(M, L)
    M_safe = np.where(np.isfinite(M), M, 0.0)
    S = terms_P[0] * 0.0
    for L, P in zip(terms_L, terms_P):
        with np.errstate(invalid="ignore"):
            w = np.exp(np.where(np.isfinite(L), L - M_safe, -np.inf))
        S = S + P * w
    m = np.abs(S)
    with np.errstate(divide="ignore"):
        u = np.where(np.isfinite(M), M_safe + np.log(np.maximum(m, 0.0)), -np.inf)
    theta = np.where(m > 0, S / np.where(m > 0, m, 1.0), 1.0 + 0j)
    return u, theta, np.where(m > 0, m, 1.0)


def green_grid(family: HenonFamily, t, x, y, sign: int = 1,
               max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL,
               esc: EscapeData | None = None) -> GreenGrid:
    """Enclosures of G+ (sign=+1) or G- (sign=-1) over a batch of points.

    x, y and t broadcast against each other; t may be a scalar or an array of
    per-lane parameters (parameter-plane sweeps bind coefficients once).
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if esc is None:
        esc = escape_data(family, t)
    bound = family.bind(t)
    d = bound.degree
    stepper = _LogPolarStepper(bound)

    X = np.asarray(x, dtype=complex)
    Y = np.asarray(y, dtype=complex)
    T = np.asarray(t, dtype=complex) if isinstance(t, np.ndarray) else None
    shape = np.broadcast_shapes(X.shape, Y.shape,
                                () if T is None else T.shape)
    X = np.broadcast_to(X, shape).reshape(-1).copy()
    Y = np.broadcast_to(Y, shape).reshape(-1).copy()
    n_lanes = X.size

    def lanes(v):
        a = np.asarray(v, dtype=float)
        if a.shape == ():
            return np.full(n_lanes, float(a))
        return np.broadcast_to(a, shape).reshape(-1).astype(float)

    R = lanes(esc.radius)
    C = lanes(esc.tail_forward if sign > 0 else esc.tail_backward)
    logR = np.log(R)

    mode = np.zeros(n_lanes, dtype=np.int8)        # 0 complex, 1 logpolar, 2 done
    esc_at = np.full(n_lanes, -1, dtype=np.int64)
    iters = np.zeros(n_lanes, dtype=np.int64)
    lower = np.zeros(n_lanes)
    upper = np.zeros(n_lanes)
    ux = np.zeros(n_lanes)
    uy = np.zeros(n_lanes)
    tx = np.ones(n_lanes, dtype=complex)
    ty = np.ones(n_lanes, dtype=complex)
    err = np.zeros(n_lanes)

    def factor_range():
        if sign > 0:
            return range(len(bound.cvals)), stepper.forward
        return reversed(range(len(bound.cvals))), stepper.backward

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        n = 0
        while True:
            # --- detection on complex lanes ---
            m0 = mode == 0
            if m0.any():
                ax, ay = np.abs(X), np.abs(Y)
                drv, oth = (ay, ax) if sign > 0 else (ax, ay)
                hit = m0 & (drv >= oth) & (drv >= R)
                grow = m0 & ~hit & (np.maximum(ax, ay) > _LOGPOLAR_SWITCH)
                conv = hit | grow
                if conv.any():
                    cux, ctx = _to_logpolar(X)
                    cuy, cty = _to_logpolar(Y)
                    ux = np.where(conv, cux, ux)
                    tx = np.where(conv, ctx, tx)
                    uy = np.where(conv, cuy, uy)
                    ty = np.where(conv, cty, ty)
                    err = np.where(conv, 0.0, err)
                    mode = np.where(conv, np.int8(1), mode)
                    esc_at = np.where(hit & (esc_at < 0), n, esc_at)

            # --- detection on log-polar lanes ---
            m1 = mode == 1
            if m1.any():
                drv, oth = (uy, ux) if sign > 0 else (ux, uy)
                hit = m1 & (esc_at < 0) & (drv >= oth) & (drv >= logR)
                esc_at = np.where(hit, n, esc_at)
                # certified enclosure for escaped lanes at iterate n
                escd = m1 & (esc_at >= 0)
                if escd.any():
                    scale = float(d) ** (-n)
                    est = drv * scale
                    tail = C * scale / (d - 1)
                    slop = err * scale + 4e-15 * (n + 1) + 1e-15 * np.abs(est)
                    lo = np.maximum(0.0, est - tail - slop)
                    hi = est + tail + slop
                    finish = escd & (((tail <= tol) & (lo > 0)) | (n >= max_iter))
                    lower = np.where(finish, lo, lower)
                    upper = np.where(finish, hi, upper)
                    iters = np.where(finish, n, iters)
                    esc_at = np.where(finish & (lo <= 0), -1, esc_at)
                    mode = np.where(finish, np.int8(2), mode)
                # non-escaped log lanes whose magnitudes have fallen: back to complex
                m1 = mode == 1
                back = m1 & (esc_at < 0) & (np.maximum(ux, uy) < _LOGPOLAR_RETURN)
                if back.any():
                    X = np.where(back, np.exp(ux) * tx, X)
                    Y = np.where(back, np.exp(uy) * ty, Y)
                    mode = np.where(back, np.int8(0), mode)

            if n >= max_iter or not (mode < 2).any():
                break

            # --- one full-map step ---
            m0 = mode == 0
            if m0.any():
                sx, sy = X, Y
                order, _ = factor_range()
                for k in order:
                    sx, sy = (bound.step(sx, sy, k) if sign > 0
                              else bound.step_inverse(sx, sy, k))
                X = np.where(m0, sx, X)
                Y = np.where(m0, sy, Y)
            m1 = mode == 1
            if m1.any():
                sux, stx, suy, sty, serr = ux, tx, uy, ty, err
                order, stepf = factor_range()
                for k in order:
                    sux, stx, suy, sty, serr = stepf(k, sux, stx, suy, sty, serr)
                ux = np.where(m1, sux, ux)
                tx = np.where(m1, stx, tx)
                uy = np.where(m1, suy, uy)
                ty = np.where(m1, sty, ty)
                err = np.where(m1, serr, err)
            n += 1

        # --- lanes that never certified escape ---
        live = mode < 2
        if live.any():
            m0 = live & (mode == 0)
            lognorm = np.zeros(n_lanes)
            if m0.any():
                nm = np.maximum(np.abs(X), np.abs(Y))
                lognorm = np.where(m0, np.log(np.maximum(nm, 1.0)), lognorm)
            m1 = live & (mode == 1)
            if m1.any():
                lognorm = np.where(m1, np.maximum(np.maximum(ux, uy), 0.0), lognorm)
            scale = float(d) ** (-max_iter)
            hi = (np.maximum(lognorm, logR) + C) * scale + 4e-15 * (max_iter + 1)
            lower = np.where(live, 0.0, lower)
            upper = np.where(live, hi, upper)
            iters = np.where(live, max_iter, iters)
            esc_at = np.where(live, -1, esc_at)

    return GreenGrid(lower=lower.reshape(shape), upper=upper.reshape(shape),
                     escaped_at=esc_at.reshape(shape),
                     iterations=iters.reshape(shape))


def green(family: HenonFamily, t, z, sign: int = 1,
          max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL,
          esc: EscapeData | None = None) -> GreenEnclosure:
    """Certified enclosure of G+-_t(z) for a single point z = (x, y)."""
    grid = green_grid(family, t, complex(z[0]), complex(z[1]), sign=sign,
                      max_iter=max_iter, tol=tol, esc=esc)
    return grid.enclosure(0)


def combine_max(gp: GreenEnclosure, gm: GreenEnclosure) -> GreenEnclosure:
    """Interval max of two enclosures, keeping the winning escape metadata."""
    lower = max(gp.lower, gm.lower)
    upper = max(gp.upper, gm.upper)
    escaped = None
    if lower > 0:
        escaped = gp.escaped_at if gp.lower >= gm.lower else gm.escaped_at
    return GreenEnclosure(lower=lower, upper=upper, escaped_at=escaped,
                          iterations_used=max(gp.iterations_used,
                                              gm.iterations_used))


def green_max(family: HenonFamily, t, z, max_iter: int = DEFAULT_MAX_ITER,
              tol: float = DEFAULT_TOL) -> GreenEnclosure:
    """Enclosure of max(G+, G-), whose zero locus is the filled Julia set."""
    gp = green(family, t, z, sign=+1, max_iter=max_iter, tol=tol)
    gm = green(family, t, z, sign=-1, max_iter=max_iter, tol=tol)
    return combine_max(gp, gm)


def green_max_grid(family: HenonFamily, t, x, y,
                   max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL):
    """(max enclosure arrays, forward grid, backward grid) over a batch."""
    gp = green_grid(family, t, x, y, sign=+1, max_iter=max_iter, tol=tol)
    gm = green_grid(family, t, x, y, sign=-1, max_iter=max_iter, tol=tol)
    lower = np.maximum(gp.lower, gm.lower)
    upper = np.maximum(gp.upper, gm.upper)
    esc = np.where(lower > 0,
                   np.where(gp.lower >= gm.lower, gp.escaped_at, gm.escaped_at),
                   -1)
    combined = GreenGrid(lower=lower, upper=upper, escaped_at=esc,
                         iterations=np.maximum(gp.iterations, gm.iterations))
    return combined, gp, gm


class Membership(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNKNOWN = "unknown"


def filled_julia_test(family: HenonFamily, t, z, tol: float,
                      max_iter: int = DEFAULT_MAX_ITER) -> Membership:
    """Tri-state membership test against the zero locus of max(G+, G-).

    OUTSIDE is certified (positive lower bound); INSIDE is qualified by tol;
    UNKNOWN is an honest answer for under-iterated boundary points.
    """
    g = green_max(family, t, z, max_iter=max_iter, tol=min(tol, DEFAULT_TOL))
    if g.lower > 0:
        return Membership.OUTSIDE
    if g.upper <= tol:
        return Membership.INSIDE
    return Membership.UNKNOWN


# ---------------------------------------------------------------------------
# Grid renders: 16-bit big-endian PGM plus a JSON sidecar with the value map.
# ---------------------------------------------------------------------------

def grid_nodes(rect, nx: int, ny: int):
    """Cell-center nodes of an nx-by-ny tiling of the rectangle."""
    re_lo, re_hi, im_lo, im_hi = rect
    hx = (re_hi - re_lo) / nx
    hy = (im_hi - im_lo) / ny
    re = re_lo + (np.arange(nx) + 0.5) * hx
    im = im_lo + (np.arange(ny) + 0.5) * hy
    return re[None, :] + 1j * im[:, None], hx, hy


def render_green(family: HenonFamily, t, rect, resolution, sign="max",
                 slice_axis: str = "x", slice_value=0.0,
                 max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL):
    """Green values over a complex-line slice of the plane.

    The grid ranges over one complex coordinate while the other is pinned to
    slice_value.  Returns (midpoint array, max enclosure width).
    """
    nx, ny = resolution
    W, _, _ = grid_nodes(rect, nx, ny)
    fixed = complex(slice_value)
    if slice_axis == "x":
        xs, ys = np.full_like(W, fixed), W
    elif slice_axis == "y":
        xs, ys = W, np.full_like(W, fixed)
    else:
        raise ValueError("slice_axis must be 'x' or 'y'")
    if sign == "max":
        combined, gp, gm = green_max_grid(family, t, xs, ys,
                                          max_iter=max_iter, tol=tol)
        vals = combined.midpoint
        width = float(np.max(np.maximum(gp.width, gm.width)))
    else:
        g = green_grid(family, t, xs, ys, sign=1 if sign in ("+", 1) else -1,
                       max_iter=max_iter, tol=tol)
        vals = g.midpoint
        width = float(np.max(g.width))
    return vals, width


def write_pgm16(path, values: np.ndarray, value_max: float | None = None) -> dict:
    """Write a 16-bit big-endian P5 grid; returns the affine value map."""
    v = np.asarray(values, dtype=float)
    vmax = float(np.max(v)) if value_max is None else float(value_max)
    scale = 65535.0 / vmax if vmax > 0 else 0.0
    pix = np.clip(v * scale, 0, 65535).astype(">u2")
    ny, nx = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n65535\n".encode())
        fh.write(pix.tobytes())
    return {"value_max": vmax, "levels": 65535, "byte_order": "big-endian"}
