"""Weighted Chebyshev (minimax) polynomials on band sets, sup-norm Widom
factors, and the audit of the sup-norm lower bounds.

The minimax problem min over monic P of sup_K |w P| is solved as a linear
program on a discrete grid (minimize s subject to +-w(x_i) P(x_i) <= s),
then tightened by locating off-grid local maxima of |w P|, appending them to
the grid and re-solving until the certified bracket [grid optimum, refined
sup] is tight.  The grid optimum is a true lower bound on t_n(K, w) because
the grid is a subset of K; the refined sup of the computed polynomial is a
true upper bound.  The polynomial lives in the affine Chebyshev basis of the
hull with the leading coefficient pinned, so the LP stays O(1)-scaled at
every degree; t_n is recovered through the log of the monic rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, minimize_scalar

from .errors import ToleranceError
from .potential import EquilibriumMeasure, equilibrium_measure
from .realsets import Interval, RationalFunction, RealCompactSet, hausdorff_distance, sublevel_bands
from .weights import (
    AbsRationalWeight,
    ConstWeight,
    InfiniteProductWeight,
    JacobiWeight,
    MthRootRationalWeight,
    ProductWeight,
    SqrtRationalWeight,
    Weight,
    szego_factor,
    validate_product,
)

_LP_OPTIONS = {
    "presolve": True,
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


class ChebyshevBasisPoly:
    """Polynomial in the affine Chebyshev basis of a hull interval."""

    def __init__(self, hull: tuple[float, float], coeffs: np.ndarray):
        self.hull = hull
        self.coeffs = np.asarray(coeffs, dtype=float)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        a, b = self.hull
        lam = (2.0 * np.asarray(x, dtype=float) - a - b) / (b - a)
        return np.polynomial.chebyshev.chebval(lam, self.coeffs)


@dataclass(frozen=True)
class MinimaxResult:
    """Certified bracket [t_lower, t_upper] on t_n(K, w) and the polynomial."""

    n: int
    hull: tuple[float, float]
    coeffs: tuple[float, ...]      # Chebyshev-basis coefficients of monic T_{n,w}
    log_scale: float               # log of the monic rescaling d_n
    t_lower: float
    t_upper: float
    log_t_lower: float
    log_t_upper: float
    extremal_points: tuple[tuple[float, int], ...]
    iterations: int
    grid_size: int
    converged: bool

    @property
    def t_mid(self) -> float:
        return 0.5 * (self.t_lower + self.t_upper)

    def polynomial(self) -> ChebyshevBasisPoly:
        """The monic minimax polynomial, evaluable on the real line."""
        return ChebyshevBasisPoly(
            self.hull, math.exp(self.log_scale) * np.asarray(self.coeffs))


def _grid_counts(n: int, masses: np.ndarray, grid_factor: int) -> list[int]:
    total = max(grid_factor * n, 32)
    return [max(8, int(round(total * m))) for m in masses / masses.sum()]


def _band_grid(band: Interval, count: int) -> np.ndarray:
    theta = np.linspace(0.0, np.pi, count)
    return band.mid + band.rad * np.cos(theta)[::-1]


def _solve_lp(wv: np.ndarray, basis: np.ndarray, lead: np.ndarray):
    """minimize s subject to |w_i (lead_i + basis_i . e)| <= s."""
    npts, nfree = basis.shape
    wb = wv[:, None] * basis
    wl = wv * lead
    A = np.vstack([np.hstack([wb, -np.ones((npts, 1))]),
                   np.hstack([-wb, -np.ones((npts, 1))])])
    rhs = np.concatenate([-wl, wl])
    c = np.zeros(nfree + 1)
    c[-1] = 1.0
    bounds = [(None, None)] * nfree + [(0.0, None)]
    res = linprog(c, A_ub=A, b_ub=rhs, bounds=bounds, method="highs",
                  options=_LP_OPTIONS)
    if not res.success:
        raise RuntimeError(f"minimax LP failed: {res.message}")
    return res.x[:nfree], float(res.fun)


def _local_maxima(K: RealCompactSet, efun, n: int, mesh_per_band: int):
    """Polished local maxima of |E| per band, in (x, |E|, sign) triples."""
    out = []
    for band in K.bands:
        thetas = np.linspace(0.0, np.pi, mesh_per_band)
        xs = band.mid + band.rad * np.cos(thetas)
        vals = np.abs(efun(xs))
        for i in range(len(xs)):
            interior_max = 0 < i < len(xs) - 1 and vals[i] >= vals[i - 1] and vals[i] >= vals[i + 1]
            boundary = i == 0 or i == len(xs) - 1
            if not (interior_max or boundary):
                continue
            if interior_max:
                lo, hi = thetas[max(i - 1, 0)], thetas[min(i + 1, len(xs) - 1)]
                r = minimize_scalar(
                    lambda t: -abs(float(efun(band.mid + band.rad * math.cos(t)))),
                    bounds=(lo, hi), method="bounded",
                    options={"xatol": 1e-14})
                x = band.mid + band.rad * math.cos(float(r.x))
                v = -float(r.fun)
            else:
                x, v = xs[i], vals[i]
            s = 1 if float(efun(np.array([x]))[0]) >= 0 else -1
            out.append((float(x), float(v), s))
    out.sort(key=lambda t: t[0])
    # collapse near-duplicates, keeping the larger value
    dedup: list[tuple[float, float, int]] = []
    scale = K.hull.width
    for x, v, s in out:
        if dedup and abs(x - dedup[-1][0]) < 1e-13 * scale:
            if v > dedup[-1][1]:
                dedup[-1] = (x, v, s)
        else:
            dedup.append((x, v, s))
    return dedup


def _dlvp_lower_bound(extrema, n: int, wfun) -> float:
    """de la Vallee Poussin certificate: n+1 sign-alternating extrema of the
    weighted error, with positive weight, bound t_n from below by min |E|."""
    chain: list[tuple[float, float, int]] = []
    for x, v, s in extrema:
        if wfun(np.array([x]))[0] <= 0.0 or v <= 0.0:
            continue
        if chain and chain[-1][2] == s:
            if v > chain[-1][1]:
                chain[-1] = (x, v, s)
        else:
            chain.append((x, v, s))
    if len(chain) >= n + 1:
        return min(v for _, v, _ in chain)
    return 0.0


def weighted_chebyshev(K: RealCompactSet, w: Weight, n: int,
                       tol: float = 1e-8, *,
                       measure: EquilibriumMeasure | None = None,
                       band_masses: Sequence[float] | None = None,
                       grid_factor: int = 64, max_iter: int = 40,
                       strict: bool = False) -> MinimaxResult:
    """Weighted minimax polynomial T_{n,w} with a certified bracket on t_n.

    tol is the requested relative bracket width.  With strict=True a
    ToleranceError is raised when the bracket stalls above tol; otherwise the
    achieved bracket is returned with converged=False.
    """
    if n < 1:
        raise ValueError("degree must be >= 1")
    if n > 128:
        raise ValueError("degrees above 128 need an extended-precision path")
    hull = K.hull
    a, b = hull.lo, hull.hi
    if band_masses is not None:
        masses = np.asarray(band_masses, dtype=float)
    else:
        if measure is None and K.num_bands > 1:
            measure = equilibrium_measure(K)
        masses = (measure.band_masses if measure is not None
                  else np.array([1.0]))
    counts = _grid_counts(n, masses, grid_factor)
    grid = np.unique(np.concatenate(
        [_band_grid(band, c) for band, c in zip(K.bands, counts)]))

    log_dn = n * math.log((b - a) / 2.0) + (1 - n) * math.log(2.0)

    def vander(x):
        lam = (2.0 * np.asarray(x, dtype=float) - a - b) / (b - a)
        return np.polynomial.chebyshev.chebvander(lam, n)

    wfun = w

    mesh_per_band = max(64, 8 * n // max(1, K.num_bands), 4 * max(counts))
    t_low_grid = 0.0
    coeffs_full = None
    extrema: list[tuple[float, float, int]] = []
    s_up = math.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        V = vander(grid)
        wv = np.asarray(wfun(grid), dtype=float)
        if np.max(wv) <= 0.0 or np.count_nonzero(wv > 0) < n + 1:
            raise RuntimeError("degenerate weight: too few positive grid values")
        e, s_grid = _solve_lp(wv, V[:, :n], V[:, n])
        coeffs_full = np.append(e, 1.0)

        def efun(x):
            lam = (2.0 * np.asarray(x, dtype=float) - a - b) / (b - a)
            return (np.asarray(wfun(x), dtype=float)
                    * np.polynomial.chebyshev.chebval(lam, coeffs_full))

        extrema = _local_maxima(K, efun, n, mesh_per_band)
        s_up = max(v for _, v, _ in extrema)
        t_low_grid = max(t_low_grid, s_grid)
        gap = (s_up - s_grid) / max(s_up, 1e-300)
        if gap <= tol:
            converged = True
            break
        new_pts = np.array([x for x, v, _ in extrema
                            if v > s_grid * (1.0 + 1e-15)])
        if len(new_pts):
            merged = np.union1d(grid, new_pts)
            if len(merged) == len(grid):
                converged = gap <= tol
                break
            grid = merged
        else:
            converged = True
            break

    s_dlvp = _dlvp_lower_bound(extrema, n, wfun)
    s_low = max(t_low_grid, s_dlvp)
    if s_low > s_up:
        s_low = s_up  # rounding guard
    if strict and not converged:
        raise ToleranceError(
            f"minimax bracket stalled at rel width {(s_up - s_low) / s_up:.3g}",
            bracket=(s_low * math.exp(log_dn), s_up * math.exp(log_dn)))

    alternating = []
    thresh = s_up * (1.0 - min(0.1, 50 * tol))
    for x, v, s in extrema:
        if v >= thresh:
            alternating.append((x, s))
    return MinimaxResult(
        n=n, hull=(a, b), coeffs=tuple(coeffs_full), log_scale=log_dn,
        t_lower=s_low * math.exp(log_dn), t_upper=s_up * math.exp(log_dn),
        log_t_lower=math.log(s_low) + log_dn if s_low > 0 else -math.inf,
        log_t_upper=math.log(s_up) + log_dn,
        extremal_points=tuple(alternating), iterations=it,
        grid_size=len(grid), converged=converged)


def widom_infty(K: RealCompactSet, w: Weight, n: int, tol: float = 1e-8, *,
                measure: EquilibriumMeasure | None = None,
                log_cap: float | None = None,
                minimax: MinimaxResult | None = None) -> tuple[float, float]:
    """Certified bracket on the sup-norm Widom factor t_n(K,w) / cap(K)^n,
    computed in the log domain."""
    if log_cap is None:
        measure = measure or equilibrium_measure(K)
        log_cap = measure.log_capacity
    res = minimax or weighted_chebyshev(K, w, n, tol, measure=measure)
    return (math.exp(res.log_t_lower - n * log_cap),
            math.exp(res.log_t_upper - n * log_cap))


# -------------------------------------------------------------------------------
# bound audit


@dataclass(frozen=True)
class BoundReport:
    bound_id: str
    applicable: bool
    guaranteed: bool
    reason: str
    lhs: float | None = None       # certified upper end of the Widom bracket
    rhs: float | None = None
    margin: float | None = None
    lhs_lower: float | None = None  # lower end of the bracket, informational

    def to_json_dict(self) -> dict:
        return {
            "bound_id": self.bound_id,
            "applicable": self.applicable,
            "guaranteed": self.guaranteed,
            "reason": self.reason,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "lhs_lower": self.lhs_lower,
        }


def _green_sum(m: EquilibriumMeasure, points) -> float:
    from .weights import _green_at
    return float(sum(_green_at(m, complex(p)) for p in points))


@dataclass(frozen=True)
class WeightProfile:
    """Classification of a weight for bound applicability dispatch."""

    kind: str                       # const/sqrt/abs/mth/jacobi/product-pairs/rational-product/other
    rational: RationalFunction | None = None
    m_root: int | None = None
    pairs_weight: InfiniteProductWeight | None = None
    rational_weight: AbsRationalWeight | None = None


def classify_weight(w: Weight) -> WeightProfile:
    if isinstance(w, ConstWeight):
        return WeightProfile("const")
    if isinstance(w, SqrtRationalWeight):
        return WeightProfile("sqrt", rational=w.R)
    if isinstance(w, MthRootRationalWeight):
        return WeightProfile("mth", rational=w.R, m_root=w.m)
    if isinstance(w, AbsRationalWeight):
        return WeightProfile("abs", rational=w.R, rational_weight=w)
    if isinstance(w, JacobiWeight):
        return WeightProfile("jacobi")
    if isinstance(w, InfiniteProductWeight):
        return WeightProfile("product-pairs", pairs_weight=w)
    if isinstance(w, ProductWeight):
        rat = None
        pairs = None
        ok = True
        for f in w.factors:
            if isinstance(f, AbsRationalWeight) and rat is None:
                rat = f
            elif isinstance(f, InfiniteProductWeight) and pairs is None:
                pairs = f
            elif isinstance(f, ConstWeight):
                continue
            else:
                ok = False
        if ok and pairs is not None:
            return WeightProfile("rational-product",
                                 rational=rat.R if rat else None,
                                 rational_weight=rat, pairs_weight=pairs)
        return WeightProfile("other")
    return WeightProfile("other")


def bound_audit(K: RealCompactSet, w: Weight, n: int, tol: float = 1e-8, *,
                measure: EquilibriumMeasure | None = None,
                minimax: MinimaxResult | None = None) -> list[BoundReport]:
    """Evaluate every applicable sup-norm lower bound against the certified
    Widom bracket.  lhs is the upper end of the bracket, so margin < 0 means
    the bound is violated beyond numerical doubt."""
    m = measure or equilibrium_measure(K)
    W_lo, W_hi = widom_infty(K, w, n, tol, measure=m, minimax=minimax)
    S = szego_factor(m, w).value
    prof = classify_weight(w)
    reports: list[BoundReport] = []

    def rep(bound_id, applicable, guaranteed, reason, rhs=None):
        if applicable and rhs is not None:
            reports.append(BoundReport(bound_id, True, guaranteed, reason,
                                       lhs=W_hi, rhs=rhs, margin=W_hi - rhs,
                                       lhs_lower=W_lo))
        else:
            reports.append(BoundReport(bound_id, False, False, reason))

    rep("S-univ", True, True, "universal Szego lower bound", S)

    if prof.kind == "const":
        rep("Schief", True, True, "unweighted real compact set",
            2.0 * w.value)
    else:
        rep("Schief", False, False, "weight is not constant")

    # doubled bound: guaranteed only for families with a proven factor 2
    doubled_guaranteed = False
    doubled_reason = "informational only for this weight family"
    d = None
    if prof.kind == "const":
        doubled_guaranteed = True
        doubled_reason = "constant weight on a real set"
    if prof.kind == "sqrt":
        R = prof.rational
        d = R.d1 - R.d0
        zeros_in_K = all(abs(z.imag) < 1e-12 and K.contains(z.real, 1e-10)
                         for z in R.zeros())
        gsum_zeros = _green_sum(m, R.zeros())
        if n > d / 2:
            rep("LB1-Cheb", True, True, "sqrt-rational weight, n > d/2",
                2.0 * S * math.exp(-0.5 * gsum_zeros))
            if zeros_in_K:
                rep("LB2-Cheb", True, True,
                    "sqrt-rational weight with zeros regular in K",
                    2.0 * S)
                doubled_guaranteed = True
                doubled_reason = "LB2-Cheb applies"
            else:
                rep("LB2-Cheb", False, False, "zeros of R not all in K")
        else:
            rep("LB1-Cheb", False, False, f"needs n > d/2 = {d/2:g}")
            rep("LB2-Cheb", False, False, f"needs n > d/2 = {d/2:g}")
    else:
        rep("LB1-Cheb", False, False, "weight is not sqrt of a rational")
        rep("LB2-Cheb", False, False, "weight is not sqrt of a rational")

    if prof.kind == "abs":
        R = prof.rational
        d = R.d1 - R.d0
        if n > d:
            gsum_zeros = _green_sum(m, R.zeros())
            rep("LB3-Cheb", True, True, "|rational| weight, n > d",
                2.0 * S * math.exp(-gsum_zeros))
            if gsum_zeros == 0.0:
                doubled_guaranteed = True
                doubled_reason = "LB3-Cheb with zeros in K"
        else:
            rep("LB3-Cheb", False, False, f"needs n > d = {d}")
    else:
        rep("LB3-Cheb", False, False, "weight is not |rational|")

    if prof.kind == "mth":
        R = prof.rational
        d = R.d1 - R.d0
        if n > d / 2:
            A = 2.0 if prof.m_root % 2 == 1 else 4.0
            gsum_zeros = _green_sum(m, R.zeros())
            rep("LB4-Cheb", True, True, "m-th root of a rational weight",
                A ** (1.0 / prof.m_root) * S
                * math.exp(-gsum_zeros / prof.m_root))
        else:
            rep("LB4-Cheb", False, False, f"needs n > d/2 = {d/2:g}")
    else:
        rep("LB4-Cheb", False, False, "weight is not an m-th root of a rational")

    if prof.kind == "product-pairs":
        pw = prof.pairs_weight
        validation = validate_product(m, pw.pairs)
        if validation.passed:
            a_in_K = all(K.contains(av, 1e-12) for av in pw.pairs.a)
            if a_in_K:
                rep("LB5-Cheb", True, True,
                    "validated infinite product, zeros in K", 2.0 * S)
                doubled_guaranteed = True
                doubled_reason = "LB5-Cheb applies"
                rep("LB6-Cheb", True, True, "specializes LB5 here", 2.0 * S)
            else:
                gsum = _green_sum(
                    m, [complex(av) for av in pw.pairs.a
                        if not K.contains(av, 1e-12)])
                rep("LB5-Cheb", False, False, "zeros not all in K")
                rep("LB6-Cheb", True, True, "validated infinite product",
                    2.0 * S * math.exp(-gsum))
        else:
            rep("LB5-Cheb", False, False,
                f"product hypotheses fail: {validation.failures}")
            rep("LB6-Cheb", False, False,
                f"product hypotheses fail: {validation.failures}")
    else:
        rep("LB5-Cheb", False, False, "weight is not an infinite product")
        rep("LB6-Cheb", False, False, "weight is not an infinite product")

    if prof.kind in ("rational-product", "product-pairs", "abs"):
        d0 = prof.rational.d0 if prof.rational is not None else 0
        d1 = prof.rational.d1 if prof.rational is not None else 0
        pairs_ok = True
        zeros_ok = True
        if prof.pairs_weight is not None:
            validation = validate_product(m, prof.pairs_weight.pairs)
            pairs_ok = validation.passed and all(
                K.contains(av, 1e-12) for av in prof.pairs_weight.pairs.a)
        if prof.rational is not None:
            zeros_ok = all(abs(z.imag) < 1e-12 and K.contains(z.real, 1e-10)
                           for z in prof.rational.zeros())
        if pairs_ok and zeros_ok and n > d1 - d0:
            rep("LB7-Cheb", True, True,
                "rational product weight, n > d1 - d0", 2.0 * S)
            doubled_guaranteed = True
            doubled_reason = "LB7-Cheb applies"
        elif not (pairs_ok and zeros_ok):
            rep("LB7-Cheb", False, False,
                "rational-product hypotheses fail (zeros off K or invalid pairs)")
        else:
            rep("LB7-Cheb", False, False, f"needs n > d1 - d0 = {d1 - d0}")
    else:
        rep("LB7-Cheb", False, False, "weight is not a rational product weight")

    rep("2S", True, doubled_guaranteed, doubled_reason, 2.0 * S)
    rep("sqrt2S", True, False,
        "asymptotic liminf bound, informational at finite n",
        math.sqrt(2.0) * S)
    return reports


# -------------------------------------------------------------------------------
# equality case and sweeps


@dataclass(frozen=True)
class EqualityCaseReport:
    distance: float
    sublevel: RealCompactSet
    zeros_clear_of_poles: bool
    min_zero_pole_distance: float


def equality_case_check(K: RealCompactSet, R: RationalFunction,
                        result: MinimaxResult) -> EqualityCaseReport:
    """Check K = (R Q_n^2)^{-1}([0,1]) for Q_n = T_{n,w}/t_n (w = sqrt R)."""
    t = result.t_mid
    poly = result.polynomial()

    class _ScaledPoly:
        degree = result.n

        def __call__(self, x):
            return poly(x) / t

    Ln = sublevel_bands(R, _ScaledPoly(), Interval(0.0, 1.0))
    dist = hausdorff_distance(K, Ln)

    poles = R.poles()
    min_dist = math.inf
    if poles:
        xs = K.sample_grid(4096)
        vals = np.abs(np.asarray(poly(xs), dtype=float))
        # polynomial zeros sit where |T| dips to ~0; compare pole distance
        # against sign changes of T on the grid
        sign = np.sign(poly(xs))
        zero_xs = [0.5 * (xs[i] + xs[i + 1])
                   for i in range(len(xs) - 1) if sign[i] * sign[i + 1] < 0]
        for p in poles:
            for z in zero_xs:
                min_dist = min(min_dist, abs(complex(p) - z))
    return EqualityCaseReport(
        distance=dist, sublevel=Ln,
        zeros_clear_of_poles=(not poles) or min_dist > 1e-8,
        min_zero_pole_distance=min_dist)


@dataclass(frozen=True)
class SweepRow:
    n: int
    t_lower: float
    t_upper: float
    cap: float
    W_lower: float
    W_upper: float
    S: float
    rhs_id: str
    margin: float


@dataclass(frozen=True)
class SweepTable:
    rows: tuple[SweepRow, ...]

    def gaps(self) -> list[float]:
        """|W - 2S| per row (bracket midpoint)."""
        return [abs(0.5 * (r.W_lower + r.W_upper) - 2.0 * r.S)
                for r in self.rows]

    def dyadic_decreasing(self) -> bool:
        g = self.gaps()
        return all(g[i + 1] <= g[i] * (1.0 + 1e-9) for i in range(len(g) - 1))


def asymptotic_sweep(K: RealCompactSet, w: Weight, n_list: Sequence[int],
                     tol: float = 1e-8, *,
                     measure: EquilibriumMeasure | None = None) -> SweepTable:
    """Widom factors along increasing degrees with the 2S reference column."""
    if list(n_list) != sorted(n_list):
        raise ValueError("n_list must be increasing")
    m = measure or equilibrium_measure(K)
    S = szego_factor(m, w).value
    cap = m.capacity
    rows = []
    for n in n_list:
        res = weighted_chebyshev(K, w, n, tol, measure=m)
        W_lo = math.exp(res.log_t_lower - n * m.log_capacity)
        W_hi = math.exp(res.log_t_upper - n * m.log_capacity)
        rows.append(SweepRow(n=n, t_lower=res.t_lower, t_upper=res.t_upper,
                             cap=cap, W_lower=W_lo, W_upper=W_hi, S=S,
                             rhs_id="2S", margin=W_hi - 2.0 * S))
    return SweepTable(tuple(rows))
