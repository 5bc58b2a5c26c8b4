"""Algebraic families of generalized Henon maps.

A family is a finite composition of factors (x, y) -> (y, p_t(y) - delta(t) x)
with p_t monic of degree >= 2 and delta(t) not identically zero, all
coefficients polynomial in a single parameter t.  Evaluation runs over three
scalar backends behind one code path: double-precision complex, exact
rationals (fractions.Fraction, used by the height machinery), and first-order
dual numbers (used by Newton solvers and multiplier computations).  Mixing
exact and floating scalars in one call is an error, not a silent cast.
"""

from __future__ import annotations

import functools
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateParameter, MixedModeError

EXACT_SCALARS = (int, Fraction)


class Dual:
    """Forward-mode scalar carrying one derivative channel.

    The payload may be a python complex or a numpy array, so dual arithmetic
    vectorizes for free.  Only ring operations are defined; polynomial maps
    need nothing else.
    """

    __slots__ = ("val", "eps")

    def __init__(self, val, eps=0.0):
        self.val = val
        self.eps = eps

    def __repr__(self):
        return f"Dual({self.val!r}, {self.eps!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.eps + other.eps)
        return Dual(self.val + other, self.eps)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.eps)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Dual) else -1 * other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val,
                        self.val * other.eps + self.eps * other.val)
        return Dual(self.val * other, self.eps * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            return Dual(self.val * inv,
                        (self.eps - self.val * other.eps * inv) * inv)
        return Dual(self.val / other, self.eps / other)

    def __rtruediv__(self, other):
        inv = 1.0 / self.val
        return Dual(other * inv, -other * self.eps * inv * inv)

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise TypeError("Dual powers must be nonnegative integers")
        out = Dual(self.val * 0 + 1.0, self.eps * 0)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out


def _is_zero(c) -> bool:
    return c == 0


class ParamPoly:
    """Polynomial in the family parameter t, trailing zeros stripped.

    Coefficients may be ints, Fractions, floats or complex numbers.  Calling
    the polynomial is generic Horner evaluation, so t may be a number, a
    Fraction, a Dual, a numpy array, or even another ParamPoly (which yields
    exact symbolic composition; the globally-periodic detector relies on it).
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence):
        coeffs = list(coeffs)
        while coeffs and _is_zero(coeffs[-1]):
            coeffs.pop()
        self.coeffs = tuple(coeffs)

    @classmethod
    def constant(cls, c) -> "ParamPoly":
        return cls((c,))

    @classmethod
    def identity(cls) -> "ParamPoly":
        return cls((0, 1))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, EXACT_SCALARS) for c in self.coeffs)

    def __call__(self, t):
        if not self.coeffs:
            return t * 0
        acc = t * 0 + self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * t + c
        return acc

    def __eq__(self, other):
        if isinstance(other, ParamPoly):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def approx_equal(self, other: "ParamPoly", tol: float = 1e-9) -> bool:
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [0] * (n - len(self.coeffs))
        b = list(other.coeffs) + [0] * (n - len(other.coeffs))
        scale = max([1.0] + [abs(complex(c)) for c in a + b])
        return all(abs(complex(x) - complex(y)) <= tol * scale
                   for x, y in zip(a, b))

    def __add__(self, other):
        if isinstance(other, ParamPoly):
            n = max(len(self.coeffs), len(other.coeffs))
            a = list(self.coeffs) + [0] * (n - len(self.coeffs))
            b = list(other.coeffs) + [0] * (n - len(other.coeffs))
            return ParamPoly([x + y for x, y in zip(a, b)])
        c = list(self.coeffs) or [0]
        c[0] = c[0] + other
        return ParamPoly(c)

    __radd__ = __add__

    def __neg__(self):
        return ParamPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-other if isinstance(other, ParamPoly) else -1 * other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, ParamPoly):
            if self.is_zero or other.is_zero:
                return ParamPoly(())
            out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                for j, b in enumerate(other.coeffs):
                    out[i + j] = out[i + j] + a * b
            return ParamPoly(out)
        return ParamPoly([c * other for c in self.coeffs])

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise TypeError("ParamPoly powers must be nonnegative integers")
        out = ParamPoly((1,))
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out


def _scalar_kind(v) -> str:
    """Classify an evaluation scalar: 'exact', 'numeric' or 'symbolic'."""
    if isinstance(v, ParamPoly):
        return "symbolic"
    if isinstance(v, Fraction):
        return "exact"
    if isinstance(v, bool):
        raise TypeError("bool is not a valid scalar")
    if isinstance(v, int):
        return "int"
    return "numeric"


def _resolve_mode(scalars) -> str:
    kinds = {_scalar_kind(v) for v in scalars}
    if "symbolic" in kinds:
        return "symbolic"
    if "exact" in kinds:
        if "numeric" in kinds:
            raise MixedModeError(
                "exact rational and floating scalars mixed in one evaluation")
        return "exact"
    if kinds <= {"int"}:
        return "exact"
    return "numeric"


@dataclass(frozen=True)
class HenonFactor:
    """One generalized Henon factor (x, y) -> (y, p_t(y) - delta(t) x)."""

    p: tuple
    delta: ParamPoly

    def __post_init__(self):
        p = tuple(q if isinstance(q, ParamPoly) else ParamPoly(q) for q in self.p)
        object.__setattr__(self, "p", p)
        if len(p) < 3:
            raise ValueError("factor polynomial must have degree >= 2")
        lead = p[-1]
        if lead.degree != 0 or lead.coeffs[0] != 1:
            raise ValueError("factor polynomial must be monic (leading coefficient the constant 1)")
        if self.delta.is_zero:
            raise ValueError("delta must not vanish identically")

    @property
    def degree(self) -> int:
        return len(self.p) - 1

    @property
    def is_exact(self) -> bool:
        return self.delta.is_exact and all(q.is_exact for q in self.p)


class _BoundMap:
    """Family with coefficients evaluated at a fixed parameter value."""

    __slots__ = ("cvals", "dvals", "degree", "degrees")

    def __init__(self, cvals, dvals, degrees):
        self.cvals = cvals      # per factor: tuple of coefficient values (by y power)
        self.dvals = dvals      # per factor: delta value
        self.degrees = degrees
        self.degree = 1
        for d in degrees:
            self.degree *= d

    def jacobian(self):
        out = self.dvals[0]
        for d in self.dvals[1:]:
            out = out * d
        return out

    def step(self, x, y, k: int):
        """Apply factor k forward."""
        c = self.cvals[k]
        acc = y * 0 + c[-1]
        for ci in reversed(c[:-1]):
            acc = acc * y + ci
        return y, acc - self.dvals[k] * x

    def step_inverse(self, x, y, k: int):
        """Apply the inverse of factor k: (x, y) -> ((p(x) - y) / delta, x)."""
        c = self.cvals[k]
        acc = x * 0 + c[-1]
        for ci in reversed(c[:-1]):
            acc = acc * x + ci
        return (acc - y) / self.dvals[k], x

    def apply(self, z):
        x, y = z
        for k in range(len(self.cvals)):
            x, y = self.step(x, y, k)
        return x, y

    def apply_inverse(self, z):
        x, y = z
        for k in reversed(range(len(self.cvals))):
            x, y = self.step_inverse(x, y, k)
        return x, y


def _delta_is_zero(dval) -> bool:
    if isinstance(dval, Dual):
        dval = dval.val
    if isinstance(dval, np.ndarray):
        return bool(np.any(dval == 0))
    return dval == 0


@dataclass(frozen=True)
class HenonFamily:
    """Finite composition of generalized Henon factors, applied left to right."""

    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ValueError("family needs at least one factor")
        object.__setattr__(self, "factors", factors)

    @property
    def degree(self) -> int:
        d = 1
        for f in self.factors:
            d *= f.degree
        return d

    @property
    def is_exact(self) -> bool:
        return all(f.is_exact for f in self.factors)

    def bind(self, t) -> _BoundMap:
        """Evaluate all coefficient polynomials at t; reject degenerate t."""
        symbolic = isinstance(t, ParamPoly)
        cvals, dvals, degrees = [], [], []
        for f in self.factors:
            cvals.append(tuple(q(t) for q in f.p))
            d = f.delta(t)
            if not symbolic and _delta_is_zero(d):
                raise DegenerateParameter(f"delta vanishes at t = {t!r}")
            dvals.append(d)
            degrees.append(f.degree)
        return _BoundMap(cvals, dvals, degrees)

    def evaluate(self, t, z):
        """Return f_t(z) for z = (x, y)."""
        _resolve_mode((t, z[0], z[1]))
        return self.bind(t).apply(z)

    def evaluate_inverse(self, t, z):
        """Return f_t^-1(z); exact in the rational backend."""
        _resolve_mode((t, z[0], z[1]))
        return self.bind(t).apply_inverse(z)

    def jacobian(self, t):
        """Constant Jacobian of f_t: the product of the factor deltas."""
        return self.bind(t).jacobian()

    def excluded_params(self) -> tuple:
        """Parameters where some delta vanishes (companion-matrix roots)."""
        return _excluded_params(self)

    def iterate(self, t, z, n: int):
        """f_t^n(z); negative n iterates the inverse."""
        bound = self.bind(t)
        for _ in range(abs(n)):
            z = bound.apply(z) if n > 0 else bound.apply_inverse(z)
        return z


@functools.lru_cache(maxsize=None)
def _excluded_params(family: HenonFamily) -> tuple:
    roots = []
    for f in family.factors:
        coeffs = [complex(c) for c in f.delta.coeffs]
        if len(coeffs) <= 1:
            continue
        roots.extend(np.roots(list(reversed(coeffs))).tolist())
    roots.sort(key=lambda w: (w.real, w.imag))
    return tuple(roots)


@dataclass(frozen=True)
class MarkedPoint:
    """Marked point t -> (a(t), b(t)) iterated fiberwise under the family."""

    a: ParamPoly
    b: ParamPoly

    def __call__(self, t):
        return self.a(t), self.b(t)

    @property
    def is_exact(self) -> bool:
        return self.a.is_exact and self.b.is_exact


_IDENTITY_PRIMES = (2305843009213693951, 4611686018427387847)  # 2^61-1 and a prime above 2^62


def _orbit_mod(family: HenonFamily, sigma: MarkedPoint, n: int, t: int, p: int):
    """Exact orbit of sigma(t) mod p for integer t; None if a denominator dies."""

    def red(c):
        if isinstance(c, Fraction):
            den = c.denominator % p
            if den == 0:
                return None
            return c.numerator % p * pow(den, -1, p) % p
        return int(c) % p

    def ev(poly, tv):
        acc = 0
        for c in reversed(poly.coeffs):
            rc = red(c)
            if rc is None:
                return None
            acc = (acc * tv + rc) % p
        return acc

    x, y = ev(sigma.a, t), ev(sigma.b, t)
    if x is None or y is None:
        return None
    orbit = [(x, y)]
    for _ in range(n):
        for f in family.factors:
            cv = [ev(q, t) for q in f.p]
            dv = ev(f.delta, t)
            if dv is None or any(c is None for c in cv):
                return None
            acc = 0
            for c in reversed(cv):
                acc = (acc * y + c) % p
            x, y = y, (acc - dv * x) % p
        orbit.append((x, y))
    return orbit


def is_globally_periodic(family: HenonFamily, sigma: MarkedPoint,
                         bound: int = 12) -> bool:
    """Detect f_t^n(sigma(t)) = f_t^m(sigma(t)) identically in t, n != m <= bound.

    Exact families use randomized polynomial-identity testing over two large
    prime fields (degrees stay far below the field size, so the error
    probability is negligible); floating families compare orbits numerically
    at a fixed sample of parameters.  The flag is advisory.
    """
    if family.is_exact and sigma.is_exact:
        rng = random.Random(0xA11CE)
        agree = None
        for p in _IDENTITY_PRIMES:
            for _ in range(4):
                t = rng.randrange(1, p - 1)
                orbit = _orbit_mod(family, sigma, bound, t, p)
                if orbit is None:
                    continue
                pairs = {(n, m) for n in range(bound + 1)
                         for m in range(n + 1, bound + 1)
                         if orbit[n] == orbit[m]}
                agree = pairs if agree is None else (agree & pairs)
                if not agree:
                    return False
        return bool(agree)
    # floating coefficients: sampled comparison
    rng = random.Random(0xA11CE)
    samples = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(12)]
    candidate = None
    for t in samples:
        z = sigma(t)
        try:
            bound_map = family.bind(t)
        except DegenerateParameter:
            continue
        orbit = [z]
        for _ in range(bound):
            z = bound_map.apply(z)
            orbit.append(z)
        scale = max(1.0, max(abs(w[0]) + abs(w[1]) for w in orbit))
        pairs = {(n, m) for n in range(bound + 1)
                 for m in range(n + 1, bound + 1)
                 if abs(orbit[n][0] - orbit[m][0]) + abs(orbit[n][1] - orbit[m][1])
                 <= 1e-9 * scale}
        candidate = pairs if candidate is None else (candidate & pairs)
        if not candidate:
            return False
    return bool(candidate)


def differential(family: HenonFamily, t, z):
    """2x2 complex Jacobian matrix of f_t at z via two dual-number passes."""
    x, y = z
    c0 = family.evaluate(t, (Dual(x, 1.0), Dual(y, 0.0)))
    c1 = family.evaluate(t, (Dual(x, 0.0), Dual(y, 1.0)))
    return np.array([[c0[0].eps, c1[0].eps],
                     [c0[1].eps, c1[1].eps]])


# ---------------------------------------------------------------------------
# JSON interchange.  Scalars: int stays int, rational "num/den", float stays
# float, complex as [re, im].  Rational-mode documents round-trip bit-exactly.
# ---------------------------------------------------------------------------

def scalar_to_json(c):
    if isinstance(c, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(c, int):
        return c
    if isinstance(c, Fraction):
        return f"{c.numerator}/{c.denominator}"
    if isinstance(c, float):
        return c
    if isinstance(c, complex):
        return [c.real, c.imag]
    raise TypeError(f"cannot serialize scalar {c!r}")


def scalar_from_json(v):
    if isinstance(v, bool):
        raise ValueError("bool is not a scalar")
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        num, _, den = v.partition("/")
        return Fraction(int(num), int(den) if den else 1)
    if isinstance(v, list) and len(v) == 2:
        return complex(v[0], v[1])
    raise ValueError(f"cannot parse scalar {v!r}")


def poly_to_json(poly: ParamPoly):
    return [scalar_to_json(c) for c in poly.coeffs]


def poly_from_json(v) -> ParamPoly:
    return ParamPoly([scalar_from_json(c) for c in v])


def family_to_json(family: HenonFamily) -> dict:
    return {"factors": [{"p": [poly_to_json(q) for q in f.p],
                         "delta": poly_to_json(f.delta)}
                        for f in family.factors]}


def family_from_json(doc: dict) -> HenonFamily:
    factors = []
    for spec in doc["factors"]:
        p = tuple(poly_from_json(v) for v in spec["p"])
        factors.append(HenonFactor(p=p, delta=poly_from_json(spec["delta"])))
    return HenonFamily(factors=tuple(factors))


def marked_point_to_json(sigma: MarkedPoint) -> dict:
    return {"a": poly_to_json(sigma.a), "b": poly_to_json(sigma.b)}


def marked_point_from_json(doc: dict) -> MarkedPoint:
    return MarkedPoint(a=poly_from_json(doc["a"]), b=poly_from_json(doc["b"]))


def load_family(path) -> HenonFamily:
    with open(path) as fh:
        return family_from_json(json.load(fh))


def save_family(family: HenonFamily, path) -> None:
    with open(path, "w") as fh:
        json.dump(family_to_json(family), fh, indent=1)


def quadratic_family(delta, t_coeff=1) -> HenonFamily:
    """The quadratic family (x, y) -> (y, y^2 + t - delta x)."""
    one = 1 if isinstance(delta, EXACT_SCALARS) else 1.0
    factor = HenonFactor(
        p=(ParamPoly((0, t_coeff)), ParamPoly(()), ParamPoly((one,))),
        delta=ParamPoly((delta,)))
    return HenonFamily(factors=(factor,))
