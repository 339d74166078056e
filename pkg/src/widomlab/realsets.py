"""Compact subsets of the real line represented as finite unions of closed
intervals ("bands"), plus polynomial/rational sublevel-set machinery.

Band endpoints of preimage sets are located by scanning a fine grid for sign
changes and polishing each bracket with Brent's method; this is slower than a
companion-matrix root solve but works unchanged for polynomials held in
product-of-roots form, where high-degree monomial coefficients are useless.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import UnboundedPreimageError

# Bands narrower than this fraction of the hull width are treated as
# degenerate (root clustering artifacts) and dropped.
WIDTH_FLOOR_REL = 1e-13

DEFAULT_SCAN_POINTS = 4096


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with lo <= hi."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"interval endpoints must be finite: [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise ValueError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def rad(self) -> float:
        return 0.5 * (self.hi - self.lo)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol


@dataclass(frozen=True)
class RealCompactSet:
    """Finite union of disjoint closed intervals with positive total length."""

    bands: tuple[Interval, ...]

    def __post_init__(self):
        if not self.bands:
            raise ValueError("a compact set needs at least one band")
        for a, b in zip(self.bands, self.bands[1:]):
            if a.hi >= b.lo:
                raise ValueError("bands must be disjoint with increasing endpoints")
        if self.total_length <= 0.0:
            raise ValueError("total length must be positive")

    @property
    def num_bands(self) -> int:
        return len(self.bands)

    @property
    def hull(self) -> Interval:
        return Interval(self.bands[0].lo, self.bands[-1].hi)

    @property
    def total_length(self) -> float:
        return float(sum(b.width for b in self.bands))

    def endpoints(self) -> np.ndarray:
        """All band endpoints in increasing order."""
        return np.array([e for b in self.bands for e in (b.lo, b.hi)])

    def gaps(self) -> tuple[Interval, ...]:
        return tuple(
            Interval(a.hi, b.lo) for a, b in zip(self.bands, self.bands[1:])
        )

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return any(b.contains(x, tol) for b in self.bands)

    def distance(self, x: float) -> float:
        """Distance from a point to the set."""
        best = math.inf
        for b in self.bands:
            if b.lo <= x <= b.hi:
                return 0.0
            best = min(best, abs(x - b.lo), abs(x - b.hi))
        return best

    def sample_grid(self, total: int, endpoints: bool = True) -> np.ndarray:
        """Deterministic grid on the set, points per band proportional to length."""
        pts = []
        length = self.total_length
        for b in self.bands:
            m = max(4, int(round(total * b.width / length)))
            xs = np.linspace(b.lo, b.hi, m)
            if not endpoints:
                xs = xs[1:-1]
            pts.append(xs)
        return np.concatenate(pts)

    def to_json(self) -> str:
        return json.dumps({"bands": [[b.lo, b.hi] for b in self.bands]})

    @staticmethod
    def from_json(text: str) -> "RealCompactSet":
        data = json.loads(text)
        return normalize([Interval(lo, hi) for lo, hi in data["bands"]])


def normalize(raw_bands: Iterable[Interval | Sequence[float]]) -> RealCompactSet:
    """Sort, merge overlapping/touching bands and drop degenerate ones.

    Raises ValueError on empty input or if every band falls below the
    width floor.
    """
    bands = [b if isinstance(b, Interval) else Interval(float(b[0]), float(b[1]))
             for b in raw_bands]
    if not bands:
        raise ValueError("no bands given")
    bands.sort(key=lambda b: (b.lo, b.hi))
    hull_width = max(b.hi for b in bands) - min(b.lo for b in bands)
    floor = WIDTH_FLOOR_REL * max(hull_width, 1.0)

    merged: list[list[float]] = []
    for b in bands:
        if merged and b.lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b.hi)
        else:
            merged.append([b.lo, b.hi])
    kept = [Interval(lo, hi) for lo, hi in merged if hi - lo > floor]
    if not kept:
        raise ValueError("all bands are below the width floor (degenerate set)")
    return RealCompactSet(tuple(kept))


class RealPolynomial:
    """Real polynomial held in monomial form, product-of-roots form, or both.

    Product form keeps evaluation stable near clustered roots, which is what
    band-endpoint computations need; monomial form is convenient for low
    degrees.  Roots may include complex-conjugate pairs; evaluation returns
    the real part (imaginary parts cancel for genuine real polynomials).
    """

    def __init__(self, coefficients=None, roots=None, leading: float | None = None):
        if coefficients is None and roots is None:
            raise ValueError("need coefficients or roots")
        self._coeffs = None
        self._roots = None
        if coefficients is not None:
            c = np.atleast_1d(np.asarray(coefficients, dtype=float))
            # trim trailing zeros, keep at least the constant term
            nz = np.nonzero(c)[0]
            if nz.size == 0:
                raise ValueError("zero polynomial is not supported")
            c = c[: nz[-1] + 1]
            self._coeffs = c
        if roots is not None:
            self._roots = tuple(complex(r) for r in roots)
            self._leading = 1.0 if leading is None else float(leading)
            if self._leading == 0.0:
                raise ValueError("leading coefficient must be nonzero")
        elif leading is not None and self._coeffs is not None:
            if not math.isclose(leading, self._coeffs[-1], rel_tol=1e-12):
                raise ValueError("leading coefficient disagrees with coefficients")

    @classmethod
    def from_roots(cls, roots, leading: float = 1.0) -> "RealPolynomial":
        return cls(roots=tuple(roots), leading=leading)

    @classmethod
    def one(cls) -> "RealPolynomial":
        return cls(coefficients=[1.0])

    @classmethod
    def identity(cls) -> "RealPolynomial":
        """The polynomial x."""
        return cls(coefficients=[0.0, 1.0])

    @classmethod
    def chebyshev_t(cls, d: int) -> "RealPolynomial":
        """Classical Chebyshev polynomial T_d in monomial form (modest d only)."""
        c = np.zeros(d + 1)
        c[d] = 1.0
        return cls(coefficients=np.polynomial.chebyshev.cheb2poly(c))

    @property
    def degree(self) -> int:
        if self._roots is not None:
            return len(self._roots)
        return len(self._coeffs) - 1

    @property
    def leading_coefficient(self) -> float:
        if self._roots is not None:
            return self._leading
        return float(self._coeffs[-1])

    @property
    def roots_known(self) -> bool:
        return self._roots is not None

    @property
    def roots(self) -> tuple[complex, ...]:
        if self._roots is None:
            raise ValueError("roots not stored for this polynomial")
        return self._roots

    def real_roots(self, tol: float = 1e-9) -> list[float]:
        if self._roots is not None:
            return [r.real for r in self._roots if abs(r.imag) <= tol * (1 + abs(r))]
        rr = np.roots(self._coeffs[::-1])
        return sorted(float(r.real) for r in rr if abs(r.imag) <= tol * (1 + abs(r)))

    def coefficients(self) -> np.ndarray:
        """Monomial coefficients, ascending order (expands product form)."""
        if self._coeffs is not None:
            return self._coeffs.copy()
        c = np.array([complex(self._leading)])
        for r in self._roots:
            c = np.convolve(c, np.array([-r, 1.0]))
        if np.max(np.abs(c.imag)) > 1e-9 * max(1.0, np.max(np.abs(c.real))):
            raise ValueError("complex roots do not pair up to a real polynomial")
        return c.real

    def __call__(self, x):
        x = np.asarray(x, dtype=complex if np.iscomplexobj(x) else float)
        if self._roots is not None:
            acc = np.full(x.shape if x.shape else (), self._leading, dtype=complex)
            for r in self._roots:
                acc = acc * (x - r)
            out = acc.real if not np.iscomplexobj(x) else acc
            return out if out.shape else out[()]
        # Horner
        acc = np.zeros_like(x) + self._coeffs[-1]
        for c in self._coeffs[-2::-1]:
            acc = acc * x + c
        return acc if acc.shape else acc[()]

    def deriv_eval(self, x: float) -> float:
        """Derivative value at a scalar point (stable in both forms)."""
        if self._roots is not None:
            # P'(x) = P(x) * sum 1/(x - r); fall back to a direct product sum
            # near roots where the logarithmic form degenerates.
            terms = np.array([x - r for r in self._roots], dtype=complex)
            if np.min(np.abs(terms)) < 1e-13:
                total = 0.0j
                for i in range(len(terms)):
                    prod = self._leading
                    for j, t in enumerate(terms):
                        if j != i:
                            prod = prod * t
                    total += prod
                return float(total.real)
            return float((self(complex(x)) * np.sum(1.0 / terms)).real)
        dc = np.polynomial.polynomial.polyder(self._coeffs)
        return float(np.polynomial.polynomial.polyval(x, dc))

    def __repr__(self):
        if self._roots is not None:
            return f"RealPolynomial(roots={self._roots!r}, leading={self._leading!r})"
        return f"RealPolynomial(coefficients={self._coeffs.tolist()!r})"

    def to_json_dict(self) -> dict:
        if self._roots is not None:
            return {
                "roots": [[r.real, r.imag] for r in self._roots],
                "leading": self._leading,
            }
        return {"coefficients": self._coeffs.tolist()}

    @staticmethod
    def from_json_dict(d: dict) -> "RealPolynomial":
        if "roots" in d:
            return RealPolynomial(roots=[complex(re, im) for re, im in d["roots"]],
                                  leading=d.get("leading", 1.0))
        return RealPolynomial(coefficients=d["coefficients"])


class RationalFunction:
    """R(z) = c * numerator(z) / denominator(z).

    d0/d1 are the numerator/denominator degrees.  Construction cancels exact
    common roots when both parts are stored in root form.
    """

    def __init__(self, numerator: RealPolynomial,
                 denominator: RealPolynomial | None = None,
                 c: float = 1.0):
        if denominator is None:
            denominator = RealPolynomial.one()
        if numerator.roots_known and denominator.roots_known:
            numerator, denominator = _cancel_common_roots(numerator, denominator)
        self.numerator = numerator
        self.denominator = denominator
        self.c = c

    @property
    def d0(self) -> int:
        return self.numerator.degree

    @property
    def d1(self) -> int:
        return self.denominator.degree

    @property
    def c_infinity(self) -> float:
        """Scale in R(z) ~ c_inf * z^(d0-d1) at infinity."""
        return (self.c * self.numerator.leading_coefficient
                / self.denominator.leading_coefficient)

    def zeros(self) -> tuple[complex, ...]:
        return self.numerator.roots if self.numerator.roots_known else tuple(
            complex(r) for r in np.roots(self.numerator.coefficients()[::-1]))

    def poles(self) -> tuple[complex, ...]:
        if self.d1 == 0:
            return ()
        return self.denominator.roots if self.denominator.roots_known else tuple(
            complex(r) for r in np.roots(self.denominator.coefficients()[::-1]))

    def __call__(self, x):
        num = self.numerator(x)
        den = self.denominator(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.c * num / den

    def __repr__(self):
        return (f"RationalFunction(c={self.c!r}, num={self.numerator!r}, "
                f"den={self.denominator!r})")

    def to_json_dict(self) -> dict:
        return {"c": self.c,
                "num": self.numerator.to_json_dict(),
                "den": self.denominator.to_json_dict()}

    @staticmethod
    def from_json_dict(d: dict) -> "RationalFunction":
        return RationalFunction(RealPolynomial.from_json_dict(d["num"]),
                                RealPolynomial.from_json_dict(d["den"]),
                                c=d.get("c", 1.0))


def _cancel_common_roots(num: RealPolynomial, den: RealPolynomial,
                         tol: float = 1e-12):
    nroots = list(num.roots)
    droots = list(den.roots)
    changed = False
    i = 0
    while i < len(nroots):
        hit = None
        for j, r in enumerate(droots):
            if abs(nroots[i] - r) <= tol * (1 + abs(r)):
                hit = j
                break
        if hit is not None:
            nroots.pop(i)
            droots.pop(hit)
            changed = True
        else:
            i += 1
    if not changed:
        return num, den
    return (RealPolynomial.from_roots(nroots, num.leading_coefficient),
            RealPolynomial.from_roots(droots, den.leading_coefficient))


# ----------------------------------------------------------------------------
# preimages and sublevel sets


def _scan_roots(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                scan_points: int, root_tol: float) -> list[float]:
    """Roots of f on [lo, hi] found from sign changes on a uniform scan grid."""
    xs = np.linspace(lo, hi, scan_points)
    vals = np.asarray(f(xs), dtype=float)
    finite = np.isfinite(vals)
    roots: list[float] = []
    sign = np.sign(vals)
    for i in range(len(xs) - 1):
        if not (finite[i] and finite[i + 1]):
            continue
        a, b = xs[i], xs[i + 1]
        if vals[i] == 0.0:
            roots.append(a)
            continue
        if sign[i] * sign[i + 1] < 0:
            r = brentq(lambda t: float(f(np.array([t]))[0]), a, b,
                       xtol=root_tol, rtol=8 * np.finfo(float).eps)
            roots.append(float(r))
    if vals[-1] == 0.0 and finite[-1]:
        roots.append(float(xs[-1]))
    return roots


def _assemble_bands(h: Callable[[np.ndarray], np.ndarray],
                    partition: list[float], lo: float, hi: float,
                    target: Interval, member_tol: float) -> list[Interval]:
    """Build membership intervals between consecutive partition points."""
    pts = sorted({lo, hi, *partition})
    bands: list[Interval] = []
    for a, b in zip(pts, pts[1:]):
        m = 0.5 * (a + b)
        v = float(np.asarray(h(np.array([m])))[0])
        if np.isfinite(v) and target.lo - member_tol <= v <= target.hi + member_tol:
            if bands and abs(bands[-1].hi - a) <= 0.0:
                bands[-1] = Interval(bands[-1].lo, b)
            else:
                bands.append(Interval(a, b))
    return bands


def _preimage_of(h: Callable[[np.ndarray], np.ndarray], target: Interval,
                 initial_halfwidth: float, scan_points: int,
                 root_tol: float | None, extra_partition: Sequence[float] = (),
                 what: str = "preimage") -> RealCompactSet:
    B = max(initial_halfwidth, 1.0)
    yscale = max(abs(target.lo), abs(target.hi), 1.0)
    member_tol = 1e-10 * yscale
    for _ in range(8):
        tol = root_tol if root_tol is not None else 1e-14 * B
        roots = []
        for y in (target.lo, target.hi):
            roots.extend(_scan_roots(lambda x: h(x) - y, -B, B, scan_points, tol))
        roots.extend(p for p in extra_partition if -B < p < B)
        bands = _assemble_bands(h, roots, -B, B, target, member_tol)
        if bands and (math.isclose(bands[0].lo, -B) or math.isclose(bands[-1].hi, B)):
            B *= 4.0  # membership reaches the scan boundary; widen and retry
            continue
        if not bands:
            raise ValueError(f"empty real {what} of {target}")
        return normalize(bands)
    raise UnboundedPreimageError(
        f"unbounded {what}: membership persists at scan radius {B:g}")


def polynomial_preimage(P: RealPolynomial, target: Interval,
                        scan_points: int = DEFAULT_SCAN_POINTS,
                        root_tol: float | None = None) -> RealCompactSet:
    """{x in R : P(x) in [target.lo, target.hi]} as a normalized band union."""
    if P.degree < 1:
        raise ValueError("polynomial must have degree >= 1")
    yscale = max(abs(target.lo), abs(target.hi), 1.0)
    if P.roots_known:
        rmax = max((abs(r) for r in P.roots), default=0.0)
        B = rmax + (yscale / abs(P.leading_coefficient)) ** (1.0 / P.degree) + 1.0
    else:
        c = P.coefficients()
        B = 1.0 + (np.max(np.abs(c[:-1])) + yscale) / abs(c[-1])
    return _preimage_of(P, target, B, scan_points, root_tol)


def sublevel_bands(R: RationalFunction, Q, target: Interval,
                   scan_points: int = DEFAULT_SCAN_POINTS,
                   root_tol: float | None = None) -> RealCompactSet:
    """Band decomposition of {x : R(x) * Q(x)^2 in target}, poles excluded.

    `Q` is anything with a `degree` attribute and vectorized call semantics
    (a RealPolynomial or a fitted minimax polynomial).
    """
    qdeg = Q.degree
    if R.d0 + 2 * qdeg == 0 and R.d1 == 0:
        raise ValueError("R * Q^2 is constant; sublevel set is degenerate")

    def h(x):
        q = np.asarray(Q(x), dtype=float)
        return np.asarray(R(x), dtype=float) * q * q

    pole_xs = [p.real for p in R.poles() if abs(p.imag) < 1e-12]
    pts = [abs(p) for p in (*R.zeros(), *R.poles())]
    B = max(pts, default=1.0) + 2.0
    order_at_inf = R.d0 + 2 * qdeg - R.d1
    if order_at_inf <= 0:
        # h tends to a finite limit at infinity; representable only if the
        # limit leaves the target, which _preimage_of detects by widening.
        pass
    return _preimage_of(h, target, B, scan_points, root_tol,
                        extra_partition=pole_xs, what="sublevel preimage")


def hausdorff_distance(A: RealCompactSet, B: RealCompactSet) -> float:
    """Symmetric Hausdorff distance between two band unions."""

    def sup_dist(P: RealCompactSet, S: RealCompactSet) -> float:
        cands = [e for b in P.bands for e in (b.lo, b.hi)]
        for g in S.gaps():
            if P.contains(g.mid):
                cands.append(g.mid)
        return max(S.distance(x) for x in cands)

    return max(sup_dist(A, B), sup_dist(B, A))
