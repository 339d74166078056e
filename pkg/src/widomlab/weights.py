"""Weight expressions on band sets: evaluation, Szego factors, infinite
rational products, and constructive product-weight minorants.

A weight is a nonnegative Borel function on the set, positive on infinitely
many points.  The variants here cover |rational|, sqrt(rational), m-th roots,
Jacobi factors on the hull, infinite products of Moebius-type factors
|(x-a_j)/(x-b_j)|^{r_j}, strong zeros exp(-1/|x-x0|^alpha), finite products,
and tabulated samples.  Every variant knows how to evaluate log w stably
(including against the offset protocol of the quadrature layer), and which
singular points its logarithm contributes to an integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DivergentIntegralError, ProductHypothesisError, ToleranceError
from .potential import (
    EquilibriumMeasure,
    Singularity,
    equilibrium_measure,
    green_interval_closed_form,
    offset_aware,
)
from .realsets import Interval, RationalFunction, RealCompactSet

_LOG_SQRT2 = 0.5 * math.log(2.0)

# Szego-detection backstop: a log-weight integral below this is treated as
# having diverged to -infinity.
_NON_SZEGO_FLOOR = -1e6


def _stable_dist(x, point: complex, u=None, s: Singularity | None = None):
    """|x - point| with the active offset substituted when point matches s."""
    if (u is not None and s is not None and abs(point.imag) == 0.0
            and abs(point.real - s.x) <= 1e-13 * (1.0 + abs(s.x))):
        return u
    return np.hypot(np.asarray(x, dtype=float) - point.real, point.imag)


class Weight:
    """Base class: vectorized evaluation plus stable log evaluation."""

    def __call__(self, x):
        raise NotImplementedError

    def log_weight(self, x, u=None, s=None):
        """log w(x); factors anchored at the active singularity s use the
        stable offset u in place of |x - s.x|."""
        raise NotImplementedError

    def singular_points(self) -> tuple[Singularity, ...]:
        """Singularities that log w contributes to an integral against mu."""
        return ()

    def to_json_dict(self) -> dict:
        raise NotImplementedError

    def __mul__(self, other: "Weight") -> "ProductWeight":
        return ProductWeight((self, other))


@dataclass(frozen=True)
class ConstWeight(Weight):
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("constant weight must be positive")

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def log_weight(self, x, u=None, s=None):
        return np.full_like(np.asarray(x, dtype=float), math.log(self.value))

    def to_json_dict(self):
        return {"type": "const", "value": self.value}


class _RationalBase(Weight):
    """Common plumbing for weights built from a rational function."""

    def __init__(self, R: RationalFunction):
        self.R = R
        self._zeros = tuple(R.zeros())
        self._poles = tuple(R.poles())
        self._log_c = math.log(abs(R.c)) if R.c != 1.0 else 0.0

    def _log_abs_R(self, x, u=None, s=None):
        x = np.asarray(x, dtype=float)
        total = np.full_like(x, self._log_c
                             + math.log(abs(self.R.numerator.leading_coefficient))
                             - math.log(abs(self.R.denominator.leading_coefficient)))
        with np.errstate(divide="ignore"):
            for z in self._zeros:
                total = total + np.log(_stable_dist(x, z, u, s))
            for p in self._poles:
                total = total - np.log(_stable_dist(x, p, u, s))
        return total

    def singular_points(self):
        pts = []
        for z in self._zeros:
            if abs(z.imag) <= 1e-13 * (1.0 + abs(z)):
                pts.append(Singularity(z.real, 0.0))
        return tuple(pts)


class AbsRationalWeight(_RationalBase):
    """w = |R| for a rational function R bounded on the set."""

    def __call__(self, x):
        return np.abs(self.R(x))

    def log_weight(self, x, u=None, s=None):
        return self._log_abs_R(x, u, s)

    def to_json_dict(self):
        return {"type": "abs_rational", "R": self.R.to_json_dict()}

    def __repr__(self):
        return f"AbsRationalWeight({self.R!r})"


class SqrtRationalWeight(_RationalBase):
    """w = sqrt(R) for a rational function R >= 0 on the set."""

    def __call__(self, x):
        return np.sqrt(np.maximum(np.asarray(self.R(x), dtype=float), 0.0))

    def log_weight(self, x, u=None, s=None):
        return 0.5 * self._log_abs_R(x, u, s)

    def check_nonnegative(self, K: RealCompactSet, grid: int = 4096) -> bool:
        xs = K.sample_grid(grid)
        return bool(np.min(self.R(xs)) >= -1e-12 * max(1.0, np.max(np.abs(self.R(xs)))))

    def to_json_dict(self):
        return {"type": "sqrt_rational", "R": self.R.to_json_dict()}

    def __repr__(self):
        return f"SqrtRationalWeight({self.R!r})"


class MthRootRationalWeight(_RationalBase):
    """w = |R|^(1/m)."""

    def __init__(self, R: RationalFunction, m: int):
        super().__init__(R)
        if m < 1:
            raise ValueError("root order m must be >= 1")
        self.m = int(m)

    def __call__(self, x):
        return np.abs(self.R(x)) ** (1.0 / self.m)

    def log_weight(self, x, u=None, s=None):
        return self._log_abs_R(x, u, s) / self.m

    def to_json_dict(self):
        return {"type": "mth_root_rational", "R": self.R.to_json_dict(), "m": self.m}


@dataclass(frozen=True)
class JacobiWeight(Weight):
    """w(x) = (1-lam)^alpha (1+lam)^beta with lam the affine map of the hull
    onto [-1, 1]."""

    alpha: float
    beta: float
    hull: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("Jacobi exponents must be nonnegative")

    def _dists(self, x, u=None, s=None):
        A, B = self.hull
        dB = _stable_dist(x, complex(B), u, s)
        dA = _stable_dist(x, complex(A), u, s)
        return dA, dB

    def __call__(self, x):
        A, B = self.hull
        dA, dB = self._dists(x)
        scale = 2.0 / (B - A)
        return (scale * dB) ** self.alpha * (scale * dA) ** self.beta

    def log_weight(self, x, u=None, s=None):
        A, B = self.hull
        dA, dB = self._dists(x, u, s)
        scale = 2.0 / (B - A)
        out = np.zeros_like(np.asarray(x, dtype=float))
        with np.errstate(divide="ignore"):
            if self.alpha > 0:
                out = out + self.alpha * (np.log(dB) + math.log(scale))
            if self.beta > 0:
                out = out + self.beta * (np.log(dA) + math.log(scale))
        return out

    def singular_points(self):
        pts = []
        if self.alpha > 0:
            pts.append(Singularity(self.hull[1], 0.0))
        if self.beta > 0:
            pts.append(Singularity(self.hull[0], 0.0))
        return tuple(pts)

    def to_json_dict(self):
        return {"type": "jacobi", "alpha": self.alpha, "beta": self.beta,
                "hull": list(self.hull)}


@dataclass(frozen=True)
class StrongZeroWeight(Weight):
    """w = exp(-1/|x-x0|^alpha): a zero faster than every power law."""

    x0: float
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("strong zero exponent must be positive")

    @property
    def szego_class_on_interval(self) -> bool:
        """Class flag for a zero interior to an interval; a zero sitting at a
        band endpoint needs alpha < 1/2 instead (the density adds a -1/2
        power), which szego_factor detects position-aware."""
        return self.alpha < 1.0

    def __call__(self, x):
        d = np.abs(np.asarray(x, dtype=float) - self.x0)
        with np.errstate(divide="ignore"):
            return np.exp(-d ** -self.alpha)

    def log_weight(self, x, u=None, s=None):
        d = _stable_dist(x, complex(self.x0), u, s)
        with np.errstate(divide="ignore"):
            return -(d ** -self.alpha)

    def singular_points(self):
        return (Singularity(self.x0, self.alpha),)

    def to_json_dict(self):
        return {"type": "strong_zero", "x0": self.x0, "alpha": self.alpha}


@dataclass(frozen=True)
class ProductPairs:
    """Zero/pole pairs of an infinite rational product, finite stored prefix.

    tail_abs_sum / tail_green_sum bound sum r_j |b_j - a_j| and
    sum r_j g_K(b_j) over any unstored remainder (0 when the product is the
    stored finite object itself).
    """

    a: tuple[float, ...]
    b: tuple[complex, ...]
    r: tuple[int, ...]
    limit_points: tuple[float, ...] = ()
    tail_abs_sum: float = 0.0
    tail_green_sum: float = 0.0

    def __post_init__(self):
        if not (len(self.a) == len(self.b) == len(self.r)):
            raise ValueError("pair arrays must have equal length")
        if any(m < 1 for m in self.r):
            raise ValueError("multiplicities must be positive integers")

    def __len__(self):
        return len(self.a)


class InfiniteProductWeight(Weight):
    """w(x) = prod_j |(x - a_j)/(x - b_j)|^{r_j} over the stored pairs."""

    def __init__(self, pairs: ProductPairs):
        self.pairs = pairs
        self._a = np.asarray(pairs.a, dtype=float)
        self._b = np.asarray(pairs.b, dtype=complex)
        self._r = np.asarray(pairs.r, dtype=float)

    def partial_log_weight(self, x, k: int, u=None, s=None):
        """log of the partial product over the first k stored pairs."""
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for a, b, r in zip(self._a[:k], self._b[:k], self._r[:k]):
            da = _stable_dist(x, complex(a), u, s)
            db = np.hypot(x - b.real, b.imag)
            with np.errstate(divide="ignore"):
                total = total + r * (np.log(da) - np.log(db))
        return total

    def log_weight(self, x, u=None, s=None):
        return self.partial_log_weight(x, len(self.pairs), u, s)

    def __call__(self, x):
        with np.errstate(divide="ignore"):
            return np.exp(self.log_weight(x))

    def singular_points(self):
        return tuple(Singularity(a, 0.0) for a in sorted(set(self.pairs.a)))

    def to_json_dict(self):
        return {"type": "infinite_product",
                "a": list(self.pairs.a),
                "b": [[z.real, z.imag] for z in self.pairs.b],
                "r": list(self.pairs.r),
                "limit_points": list(self.pairs.limit_points),
                "tail_abs_sum": self.pairs.tail_abs_sum,
                "tail_green_sum": self.pairs.tail_green_sum}

    def __repr__(self):
        return f"InfiniteProductWeight({len(self.pairs)} pairs)"


class ProductWeight(Weight):
    """Pointwise product of finitely many weights."""

    def __init__(self, factors: Sequence[Weight]):
        flat: list[Weight] = []
        for f in factors:
            if isinstance(f, ProductWeight):
                flat.extend(f.factors)
            else:
                flat.append(f)
        self.factors = tuple(flat)

    def __call__(self, x):
        out = np.ones_like(np.asarray(x, dtype=float))
        for f in self.factors:
            out = out * f(x)
        return out

    def log_weight(self, x, u=None, s=None):
        out = np.zeros_like(np.asarray(x, dtype=float))
        for f in self.factors:
            out = out + f.log_weight(x, u, s)
        return out

    def singular_points(self):
        pts: list[Singularity] = []
        for f in self.factors:
            pts.extend(f.singular_points())
        merged: dict[float, float] = {}
        for p in pts:
            merged[p.x] = max(merged.get(p.x, 0.0), p.power)
        return tuple(Singularity(x, pw) for x, pw in sorted(merged.items()))

    def to_json_dict(self):
        return {"type": "product",
                "factors": [f.to_json_dict() for f in self.factors]}


class TabulatedWeight(Weight):
    """Piecewise-linear interpolation of samples (Riemann-integrable proxy)."""

    def __init__(self, xs, ys):
        self.xs = np.asarray(xs, dtype=float)
        self.ys = np.asarray(ys, dtype=float)
        if self.xs.ndim != 1 or self.xs.shape != self.ys.shape or len(self.xs) < 2:
            raise ValueError("need matching 1-d sample arrays, length >= 2")
        if np.any(np.diff(self.xs) <= 0):
            raise ValueError("sample abscissae must be strictly increasing")
        if np.any(self.ys < 0):
            raise ValueError("weight samples must be nonnegative")

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.ys)

    def log_weight(self, x, u=None, s=None):
        with np.errstate(divide="ignore"):
            return np.log(self(x))

    def singular_points(self):
        return tuple(Singularity(float(x), 0.0)
                     for x in self.xs[self.ys == 0.0])

    def to_json_dict(self):
        return {"type": "tabulated", "x": self.xs.tolist(), "y": self.ys.tolist()}


class _WindowedWeight(Weight):
    """w restricted to a window, 1 outside (internal to the multi-zero split)."""

    def __init__(self, w: Weight, lo: float, hi: float):
        self.w = w
        self.lo = lo
        self.hi = hi

    def _mask(self, x):
        x = np.asarray(x, dtype=float)
        return (x >= self.lo) & (x <= self.hi)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(self._mask(x), self.w(x), 1.0)

    def log_weight(self, x, u=None, s=None):
        x = np.asarray(x, dtype=float)
        return np.where(self._mask(x), self.w.log_weight(x, u, s), 0.0)

    def singular_points(self):
        pts = [p for p in self.w.singular_points() if self.lo <= p.x <= self.hi]
        # window edges are jump points; declaring them lets the quadrature
        # split there instead of grinding the jump adaptively
        pts.append(Singularity(self.lo, 0.0))
        pts.append(Singularity(self.hi, 0.0))
        return tuple(pts)

    def to_json_dict(self):
        return {"type": "windowed", "lo": self.lo, "hi": self.hi,
                "w": self.w.to_json_dict()}


def weight_from_json_dict(d: dict) -> Weight:
    kind = d["type"]
    if kind == "const":
        return ConstWeight(d["value"])
    if kind == "abs_rational":
        return AbsRationalWeight(RationalFunction.from_json_dict(d["R"]))
    if kind == "sqrt_rational":
        return SqrtRationalWeight(RationalFunction.from_json_dict(d["R"]))
    if kind == "mth_root_rational":
        return MthRootRationalWeight(RationalFunction.from_json_dict(d["R"]), d["m"])
    if kind == "jacobi":
        return JacobiWeight(d["alpha"], d["beta"], tuple(d.get("hull", (-1.0, 1.0))))
    if kind == "strong_zero":
        return StrongZeroWeight(d["x0"], d["alpha"])
    if kind == "infinite_product":
        pairs = ProductPairs(tuple(d["a"]),
                             tuple(complex(re, im) for re, im in d["b"]),
                             tuple(d["r"]),
                             tuple(d.get("limit_points", ())),
                             d.get("tail_abs_sum", 0.0),
                             d.get("tail_green_sum", 0.0))
        return InfiniteProductWeight(pairs)
    if kind == "product":
        return ProductWeight([weight_from_json_dict(f) for f in d["factors"]])
    if kind == "tabulated":
        return TabulatedWeight(d["x"], d["y"])
    if kind == "windowed":
        return _WindowedWeight(weight_from_json_dict(d["w"]), d["lo"], d["hi"])
    raise ValueError(f"unknown weight variant {kind!r}")


# -------------------------------------------------------------------------------
# evaluation with certified truncation


def eval_weight(w: Weight, x: float, tol: float = 1e-9) -> float:
    """Evaluate a weight at a point; for infinite products the stored partial
    product is an upper bracket and the tail metadata certifies a lower one.

    Raises ToleranceError (carrying the bracket) when the tail metadata is too
    weak to pin the value to tol.
    """
    if not isinstance(w, InfiniteProductWeight):
        return float(np.asarray(w(np.array([x])))[0])
    upper = float(np.asarray(w(np.array([x])))[0])
    tail = w.pairs.tail_abs_sum
    if tail == 0.0:
        return upper
    anchors = w.pairs.limit_points if w.pairs.limit_points else w.pairs.a
    dist = min(abs(x - p) for p in anchors)
    if dist <= 0.0:
        return 0.0 if upper == 0.0 else upper  # at an accumulation point w -> 0
    deficit = min(2.0 * tail / dist, 700.0)
    lower = upper * math.exp(-deficit)
    if upper - lower > tol:
        raise ToleranceError(
            f"truncation bracket wider than {tol:g} at x={x:g}",
            bracket=(lower, upper))
    return 0.5 * (lower + upper)


# -------------------------------------------------------------------------------
# Szego factors


@dataclass(frozen=True)
class SzegoFactor:
    value: float
    szego_class: bool
    method: str
    log_value: float
    bracket: tuple[float, float] | None = None


def _green_at(m: EquilibriumMeasure, z: complex) -> float:
    if m.set.num_bands == 1:
        band = m.set.bands[0]
        return green_interval_closed_form(band.lo, band.hi, z)
    return m.green(z)


def _measure_of(K) -> EquilibriumMeasure:
    return K if isinstance(K, EquilibriumMeasure) else equilibrium_measure(K)


def _szego_closed_rational(m: EquilibriumMeasure, R: RationalFunction) -> float:
    """log S(K, |R|) = log|c| - d log cap + sum g(zeros) - sum g(poles)."""
    d = R.d1 - R.d0
    total = math.log(abs(R.c_infinity)) - d * m.log_capacity
    for z in R.zeros():
        total += _green_at(m, z)
    for p in R.poles():
        total -= _green_at(m, p)
    return total


def _szego_quadrature(m: EquilibriumMeasure, w: Weight, tol: float) -> SzegoFactor:
    @offset_aware
    def f(x, u=None, s=None):
        return w.log_weight(x, u, s)

    try:
        I = m.integrate(f, singularities=w.singular_points(), tol=tol)
    except DivergentIntegralError:
        return SzegoFactor(0.0, False, "quadrature", -math.inf)
    if I < _NON_SZEGO_FLOOR:
        return SzegoFactor(0.0, False, "quadrature", -math.inf)
    return SzegoFactor(math.exp(I), True, "quadrature", I)


def szego_factor(K, w: Weight, tol: float = 1e-9,
                 method: str = "auto") -> SzegoFactor:
    """S(K, w) = exp integral of log w against the equilibrium measure.

    Closed forms are used for rational-type and product variants; quadrature
    with singular splitting otherwise.  Returns value 0 with szego_class False
    when the logarithmic integral diverges to -infinity.
    """
    m = _measure_of(K)
    if method == "quadrature":
        return _szego_quadrature(m, w, tol)

    if isinstance(w, ConstWeight):
        return SzegoFactor(w.value, True, "closed", math.log(w.value))
    if isinstance(w, AbsRationalWeight):
        lg = _szego_closed_rational(m, w.R)
        return SzegoFactor(math.exp(lg), True, "closed", lg)
    if isinstance(w, SqrtRationalWeight):
        lg = 0.5 * _szego_closed_rational(m, w.R)
        return SzegoFactor(math.exp(lg), True, "closed", lg)
    if isinstance(w, MthRootRationalWeight):
        lg = _szego_closed_rational(m, w.R) / w.m
        return SzegoFactor(math.exp(lg), True, "closed", lg)
    if isinstance(w, JacobiWeight):
        A, B = w.hull
        K_ = m.set
        scale = 1.0 + 1e-12 * max(1.0, abs(A), abs(B))
        if (abs(K_.hull.lo - A) <= scale - 1.0 and abs(K_.hull.hi - B) <= scale - 1.0):
            lg = (w.alpha + w.beta) * (math.log(2.0) + m.log_capacity
                                       - math.log(B - A))
            return SzegoFactor(math.exp(lg), True, "closed", lg)
        return _szego_quadrature(m, w, tol)
    if isinstance(w, InfiniteProductWeight):
        lg = 0.0
        for a, b, r in zip(w.pairs.a, w.pairs.b, w.pairs.r):
            if not m.set.contains(a, 1e-13):
                lg += r * _green_at(m, complex(a))
            lg -= r * _green_at(m, b)
        tail = w.pairs.tail_green_sum
        val = math.exp(lg - tail)
        return SzegoFactor(val, True, "closed", lg - tail,
                           bracket=(val, math.exp(lg)) if tail else None)
    if isinstance(w, ProductWeight):
        lg = 0.0
        ok = True
        for f in w.factors:
            sub = szego_factor(m, f, tol=tol, method=method)
            ok = ok and sub.szego_class
            lg += sub.log_value
        if not ok:
            return SzegoFactor(0.0, False, "closed", -math.inf)
        return SzegoFactor(math.exp(lg), True, "closed", lg)
    return _szego_quadrature(m, w, tol)


# -------------------------------------------------------------------------------
# hypothesis validation for infinite rational products


@dataclass(frozen=True)
class ProductValidation:
    passed: bool
    failures: tuple[str, ...]
    ratio_norm_max: float
    green_sum: float
    green_tail: float
    abs_sum: float
    abs_tail: float
    szego_lower_bound: float


def validate_product(K, pairs: ProductPairs, horizon: int | None = None,
                     grid: int = 4096) -> ProductValidation:
    """Check the convergence hypotheses of an infinite rational product weight:
    every factor has sup-norm at most 1 on K, the pole Green values and the
    displacements |b_j - a_j| have finite (certified) sums, and the limit
    points of the zeros appear among the zeros.

    A ratio norm above 1 is a hard failure (raises ProductHypothesisError).
    """
    m = _measure_of(K)
    Kset = m.set
    n = len(pairs) if horizon is None else min(horizon, len(pairs))
    xs = Kset.sample_grid(grid)
    failures: list[str] = []

    ratio_max = 0.0
    for j in range(n):
        a, b = pairs.a[j], pairs.b[j]
        if abs(b.imag) <= 1e-13 and Kset.contains(b.real, 1e-13):
            raise ProductHypothesisError(
                f"pole b_{j} = {b!r} lies inside K")
        if b.real == a and b.imag != 0.0:
            continue  # |x-a| <= |x-a-ih| holds identically on the real line
        ratios = np.abs(xs - a) / np.hypot(xs - b.real, b.imag)
        ratio_max = max(ratio_max, float(np.max(ratios)))
    if ratio_max > 1.0 + 1e-12:
        raise ProductHypothesisError(
            f"factor sup-norm {ratio_max!r} exceeds 1 on K")

    green_sum = 0.0
    abs_sum = 0.0
    for j in range(n):
        green_sum += pairs.r[j] * _green_at(m, pairs.b[j])
        abs_sum += pairs.r[j] * abs(pairs.b[j] - pairs.a[j])

    for lp in pairs.limit_points:
        if min((abs(lp - a) for a in pairs.a), default=math.inf) > 1e-12:
            failures.append(
                f"declared limit point {lp:g} is missing from the zeros")

    # Auto-detect a geometric limit of a monotone zero tail and require it to
    # be present among the zeros (closedness of the zero set).
    a_arr = np.asarray(pairs.a[:n], dtype=float)
    if len(a_arr) >= 8:
        tail = a_arr[-8:]
        d = np.diff(tail)
        if np.all(d > 0) or np.all(d < 0):
            ratios = d[1:] / d[:-1]
            if np.all((ratios > 0.05) & (ratios < 0.95)):
                rho = float(np.median(ratios))
                limit = float(tail[-1] + d[-1] * rho / (1.0 - rho))
                near = min(abs(limit - a) for a in pairs.a)
                tol_close = max(1e-9 * (1.0 + abs(limit)), 0.25 * abs(d[-1]))
                if near > tol_close and min(
                        (abs(limit - lp) for lp in pairs.limit_points),
                        default=math.inf) > tol_close:
                    failures.append(
                        f"zeros accumulate near {limit:g} but that point is "
                        "not among them")

    szego_lb = math.exp(-(green_sum + pairs.tail_green_sum))
    return ProductValidation(
        passed=not failures,
        failures=tuple(failures),
        ratio_norm_max=ratio_max,
        green_sum=green_sum,
        green_tail=pairs.tail_green_sum,
        abs_sum=abs_sum,
        abs_tail=pairs.tail_abs_sum,
        szego_lower_bound=szego_lb,
    )


# -------------------------------------------------------------------------------
# constructive minorants


@dataclass(frozen=True)
class MinorantParams:
    levels: int = 26            # geometric y_k levels toward the zero
    initial_fraction: float = 0.5
    samples_per_cell: int = 257
    cell_budget: int = 512      # per level
    audit_points: int = 10000


@dataclass(frozen=True)
class MinorantAudit:
    grid_size: int
    max_ratio: float            # max of C*w0 / w over the audit grid
    sliver_width: float         # uncovered window next to the zero
    passed: bool


@dataclass(frozen=True)
class MinorantResult:
    w0: InfiniteProductWeight
    C: float
    audit: MinorantAudit
    validation: ProductValidation
    covered: tuple[tuple[float, float], ...]   # neighborhoods handled by cells


def _cell_sup_log(wlog, lo: float, hi: float, npts: int) -> float:
    """Sampled sup of |log w'| on a cell, inflated by the largest adjacent
    sample increment as a modulus-of-continuity allowance."""
    xs = np.linspace(lo, hi, npts)
    vals = np.abs(wlog(xs))
    if not np.all(np.isfinite(vals)):
        raise ValueError("log-weight not finite on a partition cell")
    pad = float(np.max(np.abs(np.diff(vals)))) if npts > 1 else 0.0
    return float(np.max(vals)) + pad


def _refine_cells(m: EquilibriumMeasure, wlog, lo: float, hi: float,
                  budget: float, params: MinorantParams) -> list[tuple[float, float, float]]:
    """Partition [lo, hi] into cells until the upper Darboux sum of |log w'|
    against mu is close enough to the adaptive integral.

    The acceptance threshold is max(budget, 0.05 * integral): an absolutely
    tight budget at deep levels would force thousands of cells while only
    shaving an irrelevantly small amount off sum r_j g(b_j); the relative
    term keeps the Darboux sums summable all the same.

    Returns (cell_lo, cell_hi, ell) triples.
    """
    def cell_stats(a: float, b: float):
        ell = _cell_sup_log(wlog, a, b, params.samples_per_cell)
        mu = m.mass(xlo=a, xhi=b, tol=1e-12)
        I = m.integrate(lambda x: np.abs(wlog(x)), tol=1e-10, xlo=a, xhi=b)
        return ell, mu, max(ell * mu - I, 0.0), I

    cells = [(lo, hi, *cell_stats(lo, hi))]
    while True:
        excess = sum(c[4] for c in cells)
        allowance = max(budget, 0.05 * sum(c[5] for c in cells))
        if excess <= allowance:
            break
        if len(cells) >= params.cell_budget:
            raise RuntimeError(
                "Darboux refinement exceeded the cell budget "
                f"({params.cell_budget} cells, excess {excess:.3g})")
        i = max(range(len(cells)), key=lambda k: cells[k][4])
        a, b, *_ = cells[i]
        mid = 0.5 * (a + b)
        cells[i: i + 1] = [(a, mid, *cell_stats(a, mid)),
                           (mid, b, *cell_stats(mid, b))]
    return [(a, b, ell) for a, b, ell, _, _, _ in cells]


def _one_sided_cells(m: EquilibriumMeasure, wlog, x0: float, y1: float,
                     params: MinorantParams):
    """Cells filling [y1, x0) (or (x0, y1] when y1 > x0) along geometric levels.

    Yields (far_endpoint, width, ell) per cell and the uncovered sliver width.
    """
    toward_right = y1 < x0
    span = abs(x0 - y1)
    triples = []
    for k in range(1, params.levels + 1):
        near = x0 - math.copysign(span * 2.0 ** (-k), x0 - y1)
        far = x0 - math.copysign(span * 2.0 ** (1 - k), x0 - y1)
        seg_lo, seg_hi = (far, near) if toward_right else (near, far)
        if seg_hi - seg_lo <= 0:
            break
        cells = _refine_cells(m, wlog, seg_lo, seg_hi, 2.0 ** (-k), params)
        for a, b, ell in cells:
            width = b - a
            anchor = a if toward_right else b
            triples.append((anchor, width, ell))
    sliver = span * 2.0 ** (-params.levels)
    return triples, sliver


def _sup_weight(w: Weight, K: RealCompactSet, grid: int = 8192) -> float:
    xs = K.sample_grid(grid)
    return float(np.max(w(xs)))


def minorant_single_zero(K, w: Weight, x0: float, band: Interval,
                         params: MinorantParams = MinorantParams()) -> MinorantResult:
    """Build a rational product weight w0 and C > 0 with C*w0 <= w on K.

    Implements the upper-Darboux-sum construction along a geometric sequence
    of points approaching the zero: each partition cell [x_j, x_j + h_j]
    contributes the pair a_j = x_j, b_j = a_j + i h_j with multiplicity
    r_j = ceil(ell_j / log sqrt(2)), where ell_j is the (sampled) sup of
    |log w| on the cell.  The factor |(x-a_j)/(x-b_j)| is at most 1/sqrt(2) on
    its own cell, so the multiplicity forces w0 <= exp(-ell_j) <= w there; the
    leftover constant C = min(1, inf w) covers the rest of K.

    The zero itself carries the pair (x0, x0 + i, 1), so w0(x0) = 0.
    """
    m = _measure_of(K)
    Kset = m.set
    scale_pt = 1e-12 * max(1.0, abs(band.lo), abs(band.hi))
    if not band.contains(x0, scale_pt):
        raise ValueError("x0 must lie in the given band")

    sz = szego_factor(m, w)
    if not sz.szego_class or sz.value <= 0.0:
        raise ValueError(
            "weight is not in the Szego class on K; no product minorant exists")

    sup_w = _sup_weight(w, Kset)
    if sup_w <= 0:
        raise ValueError("weight vanishes identically on the sample grid")
    scale_fac = 2.0 * sup_w  # enforce w' = w/scale <= 1/2

    def wlog(x):
        return w.log_weight(np.asarray(x, dtype=float)) - math.log(scale_fac)

    at_right = abs(x0 - band.hi) <= scale_pt
    at_left = abs(x0 - band.lo) <= scale_pt
    sides = []
    if not at_left:   # cells approaching from the left
        sides.append(x0 - params.initial_fraction * (x0 - band.lo))
    if not at_right:  # cells approaching from the right
        sides.append(x0 + params.initial_fraction * (band.hi - x0))

    a_list: list[float] = [x0]
    b_list: list[complex] = [complex(x0, 1.0)]
    r_list: list[int] = [1]
    sliver = 0.0
    covered_lo, covered_hi = x0, x0
    for y1 in sides:
        triples, sl = _one_sided_cells(m, wlog, x0, y1, params)
        sliver = max(sliver, sl)
        for anchor, width, ell in triples:
            a_list.append(anchor)
            b_list.append(complex(anchor, width))
            r_list.append(max(1, math.ceil(ell / _LOG_SQRT2)))
        covered_lo = min(covered_lo, min(y1, x0))
        covered_hi = max(covered_hi, max(y1, x0))

    pairs = ProductPairs(tuple(a_list), tuple(b_list), tuple(r_list),
                         limit_points=(x0,))
    w0 = InfiniteProductWeight(pairs)

    # constant from the inf of w outside the covered neighborhood
    xs = Kset.sample_grid(8192)
    outside = (xs < covered_lo) | (xs > covered_hi)
    if np.any(outside):
        L = float(np.min(w(xs[outside]))) / scale_fac
    else:
        L = 1.0
    if L <= 0:
        raise ValueError("weight is not bounded away from zero outside the "
                         "neighborhood of x0")
    C = min(1.0, L) * scale_fac

    audit = _audit_minorant(Kset, w, w0, C, x0, sliver, params.audit_points)
    validation = validate_product(m, pairs)
    if not validation.passed:
        raise ProductHypothesisError(
            f"constructed pairs fail validation: {validation.failures}")
    return MinorantResult(w0=w0, C=C, audit=audit, validation=validation,
                          covered=((covered_lo, covered_hi),))


def _audit_minorant(Kset: RealCompactSet, w: Weight, w0: Weight, C: float,
                    x0_or_none, sliver: float, npts: int,
                    slivers: Sequence[tuple[float, float]] = ()) -> MinorantAudit:
    xs = Kset.sample_grid(npts)
    windows = list(slivers)
    if x0_or_none is not None and sliver > 0.0:
        windows.append((x0_or_none - sliver, x0_or_none + sliver))
    keep = np.ones(len(xs), dtype=bool)
    for lo, hi in windows:
        keep &= ~((xs > lo) & (xs < hi))
    xs = xs[keep]
    if x0_or_none is not None:
        xs = np.append(xs, x0_or_none)
    lhs = C * np.asarray(w0(xs), dtype=float)
    rhs = np.asarray(w(xs), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lhs == 0.0, 0.0, lhs / np.maximum(rhs, 1e-300))
    max_ratio = float(np.max(ratio))
    passed = bool(np.all(lhs <= rhs * (1.0 + 1e-9)))
    if not passed:
        bad = int(np.argmax(ratio))
        raise RuntimeError(
            f"minorant audit failed at x={xs[bad]!r}: C*w0={lhs[bad]!r} "
            f"> w={rhs[bad]!r}")
    return MinorantAudit(grid_size=len(xs), max_ratio=max_ratio,
                         sliver_width=sliver, passed=passed)


def minorant_multi_zero(K, w: Weight, zeros: Sequence[float],
                        params: MinorantParams = MinorantParams()) -> MinorantResult:
    """Split w into per-neighborhood factors, minorize each zero separately,
    and interleave the resulting pair sequences into one rational product."""
    m = _measure_of(K)
    Kset = m.set
    zeros = sorted(zeros)
    if not zeros:
        xs = Kset.sample_grid(8192)
        C = float(np.min(w(xs)))
        if C <= 0:
            raise ValueError("weight with no declared zeros must be bounded "
                             "away from zero")
        pairs = ProductPairs((), (), ())
        w0 = InfiniteProductWeight(pairs)
        audit = _audit_minorant(Kset, w, w0, C, None, 0.0, params.audit_points)
        return MinorantResult(w0=w0, C=C, audit=audit,
                              validation=validate_product(m, pairs), covered=())

    # disjoint windows around the zeros, clipped to their bands
    windows: list[tuple[float, float, Interval]] = []
    for i, x0 in enumerate(zeros):
        band = next((b for b in Kset.bands if b.contains(x0, 1e-12)), None)
        if band is None:
            raise ValueError(f"zero {x0:g} does not lie in K")
        delta = band.width
        if i > 0:
            delta = min(delta, (zeros[i] - zeros[i - 1]) / 3.0)
        if i + 1 < len(zeros):
            delta = min(delta, (zeros[i + 1] - zeros[i]) / 3.0)
        windows.append((max(x0 - delta, band.lo), min(x0 + delta, band.hi), band))

    partial: list[MinorantResult] = []
    for x0, (lo, hi, band) in zip(zeros, windows):
        wj = _WindowedWeight(w, lo, hi)
        partial.append(minorant_single_zero(m, wj, x0, band, params))

    # leftover factor: w outside the windows, 1 inside; bounded away from zero
    xs = Kset.sample_grid(8192)
    outside = np.ones(len(xs), dtype=bool)
    for lo, hi, _ in windows:
        outside &= ~((xs >= lo) & (xs <= hi))
    C_rest = min(1.0, float(np.min(w(xs[outside])))) if np.any(outside) else 1.0
    if C_rest <= 0:
        raise ValueError("weight vanishes outside the declared zero windows")

    merged_a: list[float] = []
    merged_b: list[complex] = []
    merged_r: list[int] = []
    seqs = [list(zip(p.w0.pairs.a, p.w0.pairs.b, p.w0.pairs.r)) for p in partial]
    pos = [0] * len(seqs)
    while any(pos[i] < len(seqs[i]) for i in range(len(seqs))):
        for i in range(len(seqs)):
            if pos[i] < len(seqs[i]):
                a, b, r = seqs[i][pos[i]]
                merged_a.append(a)
                merged_b.append(b)
                merged_r.append(r)
                pos[i] += 1

    pairs = ProductPairs(tuple(merged_a), tuple(merged_b), tuple(merged_r),
                         limit_points=tuple(zeros))
    w0 = InfiniteProductWeight(pairs)
    C = C_rest * float(np.prod([p.C for p in partial]))
    slivers = [(x0 - p.audit.sliver_width, x0 + p.audit.sliver_width)
               for x0, p in zip(zeros, partial)]
    xs_audit = Kset.sample_grid(params.audit_points)
    keep = np.ones(len(xs_audit), dtype=bool)
    for lo, hi in slivers:
        keep &= ~((xs_audit > lo) & (xs_audit < hi))
    xs_audit = np.append(xs_audit[keep], zeros)
    lhs = C * np.asarray(w0(xs_audit), dtype=float)
    rhs = np.asarray(w(xs_audit), dtype=float)
    passed = bool(np.all(lhs <= rhs * (1.0 + 1e-9)))
    if not passed:
        bad = int(np.argmax(lhs - rhs))
        raise RuntimeError(
            f"multi-zero minorant audit failed at x={xs_audit[bad]!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lhs == 0.0, 0.0, lhs / np.maximum(rhs, 1e-300))
    audit = MinorantAudit(grid_size=len(xs_audit),
                          max_ratio=float(np.max(ratio)),
                          sliver_width=max(p.audit.sliver_width for p in partial),
                          passed=passed)
    validation = validate_product(m, pairs)
    return MinorantResult(w0=w0, C=C, audit=audit, validation=validation,
                          covered=tuple((lo, hi) for lo, hi, _ in windows))
