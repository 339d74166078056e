"""Logarithmic capacity, equilibrium measures, and Green functions for
finite unions of closed real intervals.

The equilibrium measure of an m-band set has density |q(x)| / (pi sqrt|W(x)|)
where W is the product of (x - e) over all 2m band endpoints and q is the
monic polynomial of degree m-1 with one root per gap, fixed by the vanishing
of the gap integrals of q / sqrt|W|.  Integrals against the measure run per
band after the substitution x = mid + rad*cos(theta), which absorbs the
inverse-square-root density singularity exactly.  Declared singularities of
the integrand are split out and integrated toward the singular abscissa with
geometric grading (log-type) or a power substitution; integrands may opt in
to receiving the distance to the singular point computed in theta space,
which stays accurate long after x - x0 has been rounded away.
"""

from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DivergentIntegralError
from .realsets import RealCompactSet, RealPolynomial, RationalFunction

_GLX, _GLW = np.polynomial.legendre.leggauss(15)

_GRADE_LEVELS = 54


@dataclass(frozen=True)
class Singularity:
    """Integrand singularity at x: power=0 marks a log-type singularity,
    0 < power < 1 marks |x - x0|^(-power) growth."""

    x: float
    power: float = 0.0


@dataclass(frozen=True)
class GreenValue:
    z: complex
    value: float


def offset_aware(fn):
    """Mark an integrand fn(x, u, s) that accepts a stable offset u = |x - s.x|
    for the singularity s currently being resolved (u, s are None elsewhere)."""
    fn.accepts_offset = True
    return fn


def _gl15(G, a: float, b: float) -> float:
    mid = 0.5 * (a + b)
    rad = 0.5 * (b - a)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(G(mid + rad * _GLX), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite integrand value inside quadrature segment")
    return rad * float(vals @ _GLW)


def _adaptive(G, a: float, b: float, tol_pw: float, depth: int = 0) -> float:
    whole = _gl15(G, a, b)
    m = 0.5 * (a + b)
    halves = _gl15(G, a, m) + _gl15(G, m, b)
    if abs(whole - halves) <= max(tol_pw * (b - a), 1e-18) or depth >= 46:
        return halves
    return (_adaptive(G, a, m, tol_pw, depth + 1)
            + _adaptive(G, m, b, tol_pw, depth + 1))


def _tail_model(p_prev: float, p_cur: float, k: int) -> float:
    """Remaining tail of geometrically graded pieces from the two-parameter
    model piece_k = 2^-k (a + b k), exact for log-type singularities."""
    P1 = 2.0 ** (k - 1) * p_prev
    P2 = 2.0 ** k * p_cur
    b = P2 - P1
    return 2.0 ** (-k) * (P2 + 2.0 * b)


def _graded_left(G, length: float, tol_pw: float) -> float:
    """Integrate G over the local coordinate range (0, length] where G may
    carry an integrable log-type singularity at 0.

    When the integrand stops being evaluable close to the singular point
    (offsets rounded away for integrands that compute x - x0 in plain float
    arithmetic) the remaining tail is completed from the piece model
    2^-k (a + b k), which the graded pieces of a log singularity follow.
    """
    total = 0.0
    prev_piece = None
    stagnant = 0
    for k in range(_GRADE_LEVELS):
        lo = length * 2.0 ** (-(k + 1))
        hi = length * 2.0 ** (-k)
        try:
            piece = _adaptive(G, lo, hi, tol_pw, depth=40)
        except ValueError:
            if k >= 20 and prev_piece is not None:
                return total  # collapsed pieces are below resolvable size
            raise
        total += piece
        if k >= 16 and prev_piece is not None:
            if abs(piece) > 0.9 * abs(prev_piece) and abs(piece) > max(
                    1e-13, tol_pw * length):
                stagnant += 1
                if stagnant >= 8:
                    raise DivergentIntegralError(
                        "graded refinement does not converge (divergent integral)")
            else:
                stagnant = 0
        if k >= 24 and prev_piece is not None and abs(piece) < abs(prev_piece):
            # pieces follow the model well before double precision runs out;
            # completing the tail analytically avoids collapsed evaluations
            total += _tail_model(prev_piece, piece, k)
            return total
        prev_piece = piece
        if abs(piece) < 1e-18 * max(1.0, abs(total)):
            return total
    total += _gl15(G, 0.0, length * 2.0 ** (-_GRADE_LEVELS))
    return total


def _one_sided(G, length: float, power: float, tol_pw: float,
               may_diverge: bool) -> float:
    """Integrate G over (0, length] with a singularity of given power at 0."""
    if power <= 0.0:
        return _graded_left(G, length, tol_pw)
    if power >= 1.0:
        if may_diverge:
            raise DivergentIntegralError(
                f"non-integrable singularity of power {power:g}")
        power = 0.99  # bounded integrand near an exterior point; grade hard
    beta = 1.0 / (1.0 - power)
    umax = length ** (1.0 - power)

    def Gv(v):
        v = np.asarray(v, dtype=float)
        return G(v ** beta) * beta * v ** (beta - 1.0)

    return _graded_left(Gv, umax, tol_pw * length / max(umax, 1e-300))


class EquilibriumMeasure:
    """Equilibrium measure of a band set, with quadrature facilities."""

    def __init__(self, K: RealCompactSet, gap_poly: RealPolynomial,
                 nodes_per_band: int):
        self.set = K
        self.gap_poly = gap_poly
        self._endpoints = K.endpoints()
        self.nodes_per_band = nodes_per_band
        self.band_nodes: list[np.ndarray] = []
        self.band_weights: list[np.ndarray] = []
        self.band_masses: np.ndarray | None = None
        self.log_capacity: float = math.nan
        self.frostman_spread: float = math.nan
        self.gap_residuals: tuple[float, ...] = ()

    def _w_ext(self, x: np.ndarray, skip: tuple[float, float]) -> np.ndarray:
        """Product of |x - e| over endpoints excluding the two in `skip`."""
        out = np.ones_like(x)
        skipped = [False, False]
        for e in self._endpoints:
            if not skipped[0] and e == skip[0]:
                skipped[0] = True
                continue
            if not skipped[1] and e == skip[1]:
                skipped[1] = True
                continue
            out = out * np.abs(x - e)
        return out

    def density(self, x) -> np.ndarray:
        """Equilibrium density, valid strictly inside the bands."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        W = np.ones_like(x)
        for e in self._endpoints:
            W = W * (x - e)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(self.gap_poly(x)) / (np.pi * np.sqrt(np.abs(W)))

    # -- quadrature against d(mu) ---------------------------------------------

    def _band_integral(self, i: int, f, singularities: Sequence[Singularity],
                       tol: float, xlo: float | None = None,
                       xhi: float | None = None) -> float:
        band = self.set.bands[i]
        mid, rad = band.mid, band.rad
        lo = band.lo if xlo is None else max(band.lo, xlo)
        hi = band.hi if xhi is None else min(band.hi, xhi)
        if hi <= lo:
            return 0.0
        th_lo = math.acos(max(-1.0, min(1.0, (hi - mid) / rad)))
        th_hi = math.acos(max(-1.0, min(1.0, (lo - mid) / rad)))
        skip = (band.lo, band.hi)
        q = self.gap_poly
        wants_offset = getattr(f, "accepts_offset", False)

        def values(theta, u=None, s=None):
            theta = np.asarray(theta, dtype=float)
            x = mid + rad * np.cos(theta)
            dens = np.abs(q(x)) / (np.pi * np.sqrt(self._w_ext(x, skip)))
            fx = f(x, u, s) if wants_offset else f(x)
            return np.asarray(fx, dtype=float) * dens

        scale = max(1.0, abs(band.lo), abs(band.hi))
        cuts: list[tuple[float, float, Singularity | None]] = []
        for s in singularities:
            if s.x < lo - 1e-9 * scale or s.x > hi + 1e-9 * scale:
                continue
            theta = math.acos(max(-1.0, min(1.0, (s.x - mid) / rad)))
            interior = band.contains(s.x, 1e-13 * scale) and (
                lo - 1e-13 * scale <= s.x <= hi + 1e-13 * scale)
            at_edge = (abs(s.x - band.lo) <= 1e-13 * scale
                       or abs(s.x - band.hi) <= 1e-13 * scale)
            p_eff = 2.0 * s.power if at_edge else s.power
            if p_eff >= 1.0 and interior:
                raise DivergentIntegralError(
                    f"singularity at {s.x:g} has effective power {p_eff:g} >= 1 "
                    "against the equilibrium density")
            cuts.append((min(max(theta, th_lo), th_hi), p_eff,
                         s if interior else None))
        cuts.sort(key=lambda c: c[0])

        points = sorted({th_lo, th_hi,
                         *(c[0] for c in cuts if th_lo < c[0] < th_hi)})
        info = {}
        for c in cuts:
            key = min(max(c[0], th_lo), th_hi)
            info[key] = (c[1], c[2])
        tol_pw = tol / max(th_hi - th_lo, 1e-12)

        def one_sided_segment(theta_s: float, sgn: float, length: float,
                              power: float, s: Singularity | None) -> float:
            # Local coordinate tau in (0, length]; theta = theta_s + sgn*tau.
            # Offset |x(theta) - x(theta_s)| = 2 rad |sin(theta_s + sgn*tau/2)|
            # * sin(tau/2), accurate even when x rounds onto the singular point.
            def Gloc(tau):
                tau = np.asarray(tau, dtype=float)
                theta = theta_s + sgn * tau
                if s is not None:
                    u = 2.0 * rad * np.abs(
                        np.sin(theta_s + sgn * 0.5 * tau)) * np.sin(0.5 * tau)
                    return values(theta, u, s)
                return values(theta)

            return _one_sided(Gloc, length, power, tol_pw,
                              may_diverge=s is not None)

        def segment(a: float, b: float, left, right) -> float:
            if b - a <= 0.0:
                return 0.0
            if left is not None and right is not None:
                m = 0.5 * (a + b)
                return (segment(a, m, left, None) + segment(m, b, None, right))
            if left is None and right is None:
                return _adaptive(values, a, b, tol_pw)
            if left is not None:
                power, s = left
                return one_sided_segment(a, +1.0, b - a, power, s)
            power, s = right
            return one_sided_segment(b, -1.0, b - a, power, s)

        total = 0.0
        for a, b in zip(points, points[1:]):
            total += segment(a, b, info.get(a), info.get(b))
        return total

    def integrate(self, f, singularities: Sequence[Singularity] = (),
                  tol: float = 1e-10, xlo: float | None = None,
                  xhi: float | None = None) -> float:
        """Integral of f against the equilibrium measure.

        f is called with numpy arrays; declare integrable singularities so the
        quadrature can split and grade around them.
        """
        total = 0.0
        per_band_tol = tol / self.set.num_bands
        for i in range(self.set.num_bands):
            total += self._band_integral(i, f, singularities, per_band_tol,
                                         xlo=xlo, xhi=xhi)
        return total

    def mass(self, xlo: float | None = None, xhi: float | None = None,
             tol: float = 1e-12) -> float:
        return self.integrate(lambda x: np.ones_like(x), tol=tol,
                              xlo=xlo, xhi=xhi)

    # -- potential and Green function ------------------------------------------

    def potential(self, z: complex, tol: float = 1e-10) -> float:
        """Logarithmic potential: integral of log|z - t| d(mu)(t)."""
        zr, zi = float(np.real(z)), float(np.imag(z))

        @offset_aware
        def f(t, u=None, s=None):
            d = np.abs(t - zr) if u is None else u
            return np.log(np.hypot(d, zi))

        return self.integrate(f, singularities=(Singularity(zr),), tol=tol)

    def green(self, z: complex, tol: float = 1e-10) -> float:
        val = self.potential(z, tol=tol) - self.log_capacity
        if val < 0.0:
            if val < -1e-6:
                raise RuntimeError(
                    f"green function came out {val:g} < 0; accuracy loss")
            return 0.0
        return val

    @property
    def capacity(self) -> float:
        return math.exp(self.log_capacity)


# ------------------------------------------------------------------------------
# construction


def _gap_moment_table(K: RealCompactSet, j: int, kmax: int) -> np.ndarray:
    """Integrals over gap j of T_k(lam(t)) / sqrt(W_ext(t)) dt for k <= kmax,
    cosine substitution absorbing the gap-endpoint factors, nodes doubled
    until stable."""
    gap = K.gaps()[j]
    hull = K.hull
    endpoints = K.endpoints()
    mid, rad = gap.mid, gap.rad

    def table(n: int) -> np.ndarray:
        theta = (2 * np.arange(1, n + 1) - 1) * np.pi / (2 * n)
        t = mid + rad * np.cos(theta)
        wext = np.ones_like(t)
        skipped = [False, False]
        for e in endpoints:
            if not skipped[0] and e == gap.lo:
                skipped[0] = True
                continue
            if not skipped[1] and e == gap.hi:
                skipped[1] = True
                continue
            wext = wext * np.abs(t - e)
        lam = (2.0 * t - hull.lo - hull.hi) / (hull.hi - hull.lo)
        V = np.polynomial.chebyshev.chebvander(lam, kmax)
        return np.pi / n * (V / np.sqrt(wext)[:, None]).sum(axis=0)

    n = 128
    prev = table(n)
    while n < 16384:
        n *= 2
        cur = table(n)
        if np.max(np.abs(cur - prev)) <= 1e-13 * max(1.0, np.max(np.abs(cur))):
            return cur
        prev = cur
    return prev


def _gap_residual(K: RealCompactSet, j: int, q: RealPolynomial) -> float:
    """Integral of q / sqrt|W| over gap j (should vanish)."""
    gap = K.gaps()[j]
    endpoints = K.endpoints()
    mid, rad = gap.mid, gap.rad

    def value(n: int) -> float:
        theta = (2 * np.arange(1, n + 1) - 1) * np.pi / (2 * n)
        t = mid + rad * np.cos(theta)
        wext = np.ones_like(t)
        skipped = [False, False]
        for e in endpoints:
            if not skipped[0] and e == gap.lo:
                skipped[0] = True
                continue
            if not skipped[1] and e == gap.hi:
                skipped[1] = True
                continue
            wext = wext * np.abs(t - e)
        return float(np.pi / n * np.sum(q(t) / np.sqrt(wext)))

    n = 256
    prev = value(n)
    while n < 8192:
        n *= 2
        cur = value(n)
        if abs(cur - prev) <= 1e-13 * max(1.0, abs(cur)):
            return cur
        prev = cur
    return prev


def _solve_gap_poly(K: RealCompactSet) -> RealPolynomial:
    """Monic degree-g polynomial with one root per gap killing all gap moments."""
    g = K.num_bands - 1
    if g == 0:
        return RealPolynomial(coefficients=[1.0])
    hull = K.hull
    a, b = hull.lo, hull.hi
    kappa = ((b - a) / 2.0) ** g * 2.0 ** (1 - g)

    M = np.vstack([_gap_moment_table(K, j, g) for j in range(g)])
    A = M[:, :g]
    rhs = -kappa * M[:, g]
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e13:
        raise RuntimeError(
            f"gap moment system is numerically singular (cond ~ {cond:.3g})")
    d = np.linalg.solve(A, rhs)
    coef = np.append(d, kappa)

    def q_eval(t):
        lam = (2.0 * np.asarray(t, dtype=float) - a - b) / (b - a)
        return np.polynomial.chebyshev.chebval(lam, coef)

    roots = []
    for gap in K.gaps():
        pad = 1e-13 * max(1.0, gap.width)
        flo = float(q_eval(gap.lo + pad))
        fhi = float(q_eval(gap.hi - pad))
        if flo * fhi > 0:
            raise RuntimeError("gap polynomial does not change sign in a gap")
        roots.append(brentq(lambda t: float(q_eval(t)), gap.lo + pad,
                            gap.hi - pad, xtol=2e-16 * max(1.0, abs(gap.hi))))
    return RealPolynomial.from_roots(roots, leading=1.0)


def _build_band_rules(m: EquilibriumMeasure, nodes_per_band: int) -> float:
    """Gauss-Chebyshev style nodes/weights per band; returns total mass."""
    K = m.set
    q = m.gap_poly
    nodes, weights = [], []
    for band in K.bands:
        n = nodes_per_band
        theta = (2 * np.arange(1, n + 1) - 1) * np.pi / (2 * n)
        x = band.mid + band.rad * np.cos(theta)
        wext = m._w_ext(x, (band.lo, band.hi))
        v = np.abs(q(x)) / np.sqrt(wext) / n
        nodes.append(x[::-1].copy())
        weights.append(v[::-1].copy())
    m.band_nodes = nodes
    m.band_weights = weights
    m.band_masses = np.array([w.sum() for w in weights])
    return float(m.band_masses.sum())


def _frostman_points(K: RealCompactSet) -> list[float]:
    pts = [b.mid for b in K.bands]
    widest = max(K.bands, key=lambda b: b.width)
    for e in (widest.mid - 0.5 * widest.rad, widest.mid + 0.5 * widest.rad):
        if len(pts) >= 3:
            break
        pts.append(e)
    return pts[:6]


@functools.lru_cache(maxsize=128)
def equilibrium_measure(K: RealCompactSet, nodes_per_band: int = 256,
                        mass_tol: float = 1e-10) -> EquilibriumMeasure:
    """Construct the equilibrium measure of a normalized band set.

    The log-capacity follows from the Frostman identity: the logarithmic
    potential of mu equals log cap(K) everywhere on K.  It is evaluated at
    three or more interior points and cross-checked; disagreement signals a
    broken density and raises.
    """
    gap_poly = _solve_gap_poly(K)
    m = EquilibriumMeasure(K, gap_poly, nodes_per_band)

    n = nodes_per_band
    mass = _build_band_rules(m, n)
    while abs(mass - 1.0) > 1e-12 and n < 8192:
        n *= 2
        mass = _build_band_rules(m, n)
    if abs(mass - 1.0) > mass_tol:
        raise RuntimeError(
            f"equilibrium mass {mass!r} deviates from 1 beyond {mass_tol:g}")

    m.gap_residuals = tuple(
        float(_gap_residual(K, j, gap_poly)) for j in range(K.num_bands - 1))

    vals = []
    for x0 in _frostman_points(K):
        @offset_aware
        def f(t, u=None, s=None, x0=x0):
            d = np.abs(t - x0) if u is None else u
            return np.log(d)

        vals.append(m.integrate(f, singularities=(Singularity(x0),), tol=1e-11))
    spread = max(vals) - min(vals)
    if spread > 1e-8:
        raise RuntimeError(f"Frostman cross-check spread {spread:g} exceeds 1e-8")
    m.frostman_spread = float(spread)
    m.log_capacity = float(np.mean(vals))
    return m


# ------------------------------------------------------------------------------
# module-level operations


def integrate(m: EquilibriumMeasure, f, singularities=(), tol: float = 1e-10,
              xlo: float | None = None, xhi: float | None = None) -> float:
    return m.integrate(f, singularities=singularities, tol=tol, xlo=xlo, xhi=xhi)


def green(K: RealCompactSet | EquilibriumMeasure, z: complex,
          tol: float = 1e-10) -> GreenValue:
    m = K if isinstance(K, EquilibriumMeasure) else equilibrium_measure(K)
    return GreenValue(z=complex(z), value=m.green(z, tol=tol))


def green_interval_closed_form(alpha: float, beta: float, z: complex) -> float:
    """Green function of the interval [alpha, beta]: log|zeta + sqrt(zeta^2-1)|
    on the branch giving a nonnegative value."""
    if not alpha < beta:
        raise ValueError("need alpha < beta")
    zeta = (2.0 * complex(z) - alpha - beta) / (beta - alpha)
    s = cmath.sqrt(zeta * zeta - 1.0)
    w = zeta + s
    if abs(w) < 1.0:
        w = zeta - s
    return max(0.0, math.log(abs(w)))


def capacity_preimage_poly(capK: float, c_abs: float, n: int) -> float:
    """cap(P^{-1}(K)) = (cap K / |c|)^(1/n) for degree-n P with |lead| = c_abs."""
    if capK <= 0 or c_abs <= 0 or n < 1:
        raise ValueError("need capK > 0, c_abs > 0, n >= 1")
    return (capK / c_abs) ** (1.0 / n)


def capacity_preimage_rational_check(K: RealCompactSet, R: RationalFunction,
                                     L: RealCompactSet,
                                     tol: float = 1e-9) -> float:
    """Residual of log cap(K) = log|c| + n log cap(L) - sum_j g_L(b_j), with
    numeric capacities and Green values at the poles of R (n = order of the
    pole of R at infinity)."""
    n = R.d0 - R.d1
    if n < 1:
        raise ValueError("R must have a pole at infinity (d0 > d1)")
    mK = equilibrium_measure(K)
    mL = equilibrium_measure(L)
    gsum = 0.0
    for b in R.poles():
        if abs(b.imag) < 1e-12 and L.contains(b.real, 1e-12):
            raise ValueError(f"pole {b!r} lies inside L")
        gsum += mL.green(b, tol=tol)
    c_abs = abs(R.c_infinity)
    return abs(mK.log_capacity - math.log(c_abs) - n * mL.log_capacity + gsum)


def green_pullback_poly(K: RealCompactSet | EquilibriumMeasure,
                        P: RealPolynomial, z: complex,
                        tol: float = 1e-10) -> float:
    """g_{P^{-1}(K)}(z) computed as g_K(P(z)) / deg P (no finite poles)."""
    m = K if isinstance(K, EquilibriumMeasure) else equilibrium_measure(K)
    return m.green(P(complex(z)), tol=tol) / P.degree
