"""Monic orthogonal polynomials for measures w d(mu_K), recurrence
coefficients via discretized Stieltjes with full reorthogonalization, and the
L2 Widom factor bound audit.

The discretization splits every band at the kinks/zeros of the weight and
places Gauss-Legendre nodes in the cosine-substituted variable per segment:
the substitution absorbs the density singularity at band endpoints, and the
splits keep the weight one-sided analytic per segment, so node doubling
converges the moments quickly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .potential import EquilibriumMeasure, equilibrium_measure
from .realsets import (
    Interval,
    RationalFunction,
    RealCompactSet,
    RealPolynomial,
    hausdorff_distance,
    sublevel_bands,
)
from .weights import (
    AbsRationalWeight,
    ConstWeight,
    InfiniteProductWeight,
    ProductWeight,
    SqrtRationalWeight,
    Weight,
    szego_factor,
    validate_product,
)
from .chebyshev import BoundReport, MinimaxResult, weighted_chebyshev


@dataclass(frozen=True)
class L2WeightProfile:
    """Classification for the L2 bound dispatch: the non-asymptotic bounds
    need the weight itself (not its square root) to be rational and bounded,
    or a validated rational product weight."""

    kind: str                   # "unit" / "rational" / "rational-product" / "other"
    rational: RationalFunction | None = None
    zeros_in_K: bool = False
    pole_excess: int = 0


def classify_weight_l2(w: Weight, K: RealCompactSet) -> L2WeightProfile:
    if isinstance(w, ConstWeight):
        if w.value == 1.0:
            return L2WeightProfile("unit")
        return L2WeightProfile(
            "rational",
            rational=RationalFunction(RealPolynomial(coefficients=[w.value])),
            zeros_in_K=True)
    if isinstance(w, AbsRationalWeight):
        xs = K.sample_grid(2048)
        vals = np.asarray(w.R(xs), dtype=float)
        if np.min(vals) < -1e-10 * max(1.0, float(np.max(np.abs(vals)))):
            return L2WeightProfile("other")
        zeros = w.R.zeros()
        zk = all(abs(z.imag) < 1e-12 and K.contains(z.real, 1e-10)
                 for z in zeros)
        return L2WeightProfile("rational", rational=w.R, zeros_in_K=zk)
    if isinstance(w, InfiniteProductWeight):
        try:
            v = validate_product(K, w.pairs)
        except Exception:
            return L2WeightProfile("other")
        if v.passed and all(K.contains(a, 1e-12) for a in w.pairs.a):
            return L2WeightProfile("rational-product", pole_excess=0)
        return L2WeightProfile("other")
    if isinstance(w, ProductWeight):
        rat = None
        pairs = None
        for f in w.factors:
            if isinstance(f, AbsRationalWeight) and rat is None:
                rat = f
            elif isinstance(f, InfiniteProductWeight) and pairs is None:
                pairs = f
            elif isinstance(f, ConstWeight):
                continue
            else:
                return L2WeightProfile("other")
        if pairs is None:
            return L2WeightProfile("other")
        try:
            v = validate_product(K, pairs.pairs)
        except Exception:
            return L2WeightProfile("other")
        if not (v.passed and all(K.contains(a, 1e-12) for a in pairs.pairs.a)):
            return L2WeightProfile("other")
        excess = 0
        if rat is not None:
            zk = all(abs(z.imag) < 1e-12 and K.contains(z.real, 1e-10)
                     for z in rat.R.zeros())
            if not zk:
                return L2WeightProfile("other")
            excess = rat.R.d1 - rat.R.d0
        return L2WeightProfile("rational-product", rational=rat.R if rat else None,
                               pole_excess=excess)
    return L2WeightProfile("other")


@dataclass(frozen=True)
class SpectralMeasure:
    """Discretization of w d(mu_K) by nodes and positive weights."""

    K: RealCompactSet
    w: Weight
    nodes: np.ndarray
    weights: np.ndarray
    total_mass: float

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.sum(self.weights * f * g))


def _segment_nodes(m: EquilibriumMeasure, band: Interval, th_a: float,
                   th_b: float, count: int):
    """Gauss-Legendre nodes in theta on [th_a, th_b] against the measure."""
    glx, glw = np.polynomial.legendre.leggauss(count)
    mid = 0.5 * (th_a + th_b)
    rad = 0.5 * (th_b - th_a)
    theta = mid + rad * glx
    x = band.mid + band.rad * np.cos(theta)
    dens = (np.abs(m.gap_poly(x))
            / (np.pi * np.sqrt(m._w_ext(x, (band.lo, band.hi)))))
    v = rad * glw * dens
    return x, v


def _discretize_once(m: EquilibriumMeasure, w: Weight,
                     nodes_per_band: int) -> tuple[np.ndarray, np.ndarray]:
    K = m.set
    cut_xs = sorted({p.x for p in w.singular_points()})
    xs_all, vs_all = [], []
    for band in K.bands:
        cuts_in = [c for c in cut_xs if band.lo < c < band.hi]
        thetas = [math.pi, *sorted(
            (math.acos(max(-1.0, min(1.0, (c - band.mid) / band.rad)))
             for c in cuts_in), reverse=True), 0.0]
        total_len = math.pi
        for th_a, th_b in zip(thetas[1:], thetas[:-1]):
            count = max(24, int(round(nodes_per_band * (th_b - th_a) / total_len)))
            x, v = _segment_nodes(m, band, th_a, th_b, count)
            xs_all.append(x)
            vs_all.append(v * np.asarray(w(x), dtype=float))
    x = np.concatenate(xs_all)
    v = np.concatenate(vs_all)
    order = np.argsort(x)
    return x[order], v[order]


def discretize(K: RealCompactSet | EquilibriumMeasure, w: Weight,
               nodes_per_band: int = 512, moment_tol: float = 1e-12,
               max_nodes_per_band: int = 16384) -> SpectralMeasure:
    """Nodes and weights for w d(mu_K), refined by doubling until the first 8
    moments stabilize to moment_tol relative."""
    m = K if isinstance(K, EquilibriumMeasure) else equilibrium_measure(K)
    hull = m.set.hull

    def moments(x, v):
        lam = (2.0 * x - hull.lo - hull.hi) / (hull.hi - hull.lo)
        return np.array([np.sum(v * lam ** j) for j in range(8)])

    n = nodes_per_band
    x, v = _discretize_once(m, w, n)
    mom = moments(x, v)
    while n < max_nodes_per_band:
        n *= 2
        x2, v2 = _discretize_once(m, w, n)
        mom2 = moments(x2, v2)
        scale = max(float(np.max(np.abs(mom2))), 1e-300)
        if np.max(np.abs(mom2 - mom)) <= moment_tol * scale:
            x, v = x2, v2
            break
        x, v, mom = x2, v2, mom2
    else:
        raise RuntimeError(
            "moments did not stabilize; weight too singular for node budget")
    mass = float(np.sum(v))
    if mass <= 0:
        raise ValueError("discretized measure has no mass")
    return SpectralMeasure(K=m.set, w=w, nodes=x, weights=v, total_mass=mass)


@dataclass(frozen=True)
class RecurrenceTable:
    """Three-term recurrence p_{k+1} = (x - alpha_k) p_k - beta_k p_{k-1}
    for monic orthogonal polynomials; beta[0] is the total mass and
    ||P_n||^2 = beta[0] * ... * beta[n]."""

    alpha: tuple[float, ...]
    beta: tuple[float, ...]

    def log_norm_sq(self, n: int) -> float:
        return float(np.sum(np.log(np.asarray(self.beta[: n + 1]))))

    def norm_sq(self, n: int) -> float:
        return math.exp(self.log_norm_sq(n))

    def eval_poly(self, n: int, x):
        """Values of the monic orthogonal polynomial P_n."""
        x = np.asarray(x, dtype=float)
        p_prev = np.zeros_like(x)
        p = np.ones_like(x)
        for k in range(n):
            p, p_prev = (x - self.alpha[k]) * p - self.beta[k] * p_prev, p
        return p


def stieltjes(meas: SpectralMeasure, N: int) -> RecurrenceTable:
    """Discretized Stieltjes procedure with full (twofold) reorthogonalization.

    Requires N <= node count / 4 so the discrete measure can resolve the
    degree-2N integrands the recurrence touches.
    """
    x = meas.nodes
    v = meas.weights
    if N > len(x) // 4:
        raise ValueError(f"N={N} too large for {len(x)} nodes (need N <= nodes/4)")
    alphas: list[float] = []
    betas: list[float] = [meas.total_mass]
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    h_prev = 0.0
    h = meas.total_mass
    Q = [p / math.sqrt(h)]
    for k in range(N):
        a_k = float(np.sum(v * x * p * p) / h)
        alphas.append(a_k)
        p_next = (x - a_k) * p - (betas[k] * p_prev if k > 0 else 0.0)
        for _ in range(2):
            for q in Q:
                p_next = p_next - np.sum(v * q * p_next) * q
        h_next = float(np.sum(v * p_next * p_next))
        if not h_next > 0:
            raise RuntimeError(
                f"recurrence lost positivity at k={k + 1}; discretization too coarse")
        betas.append(h_next / h)
        p_prev, p = p, p_next
        h_prev, h = h, h_next
        Q.append(p / math.sqrt(h))
    return RecurrenceTable(alpha=tuple(alphas), beta=tuple(betas))


def widom_2_squared(K: RealCompactSet | EquilibriumMeasure, w: Weight, n: int,
                    *, table: RecurrenceTable | None = None,
                    meas: SpectralMeasure | None = None,
                    nodes_per_band: int | None = None) -> float:
    """Squared L2 Widom factor ||P_n||^2 / cap(K)^(2n), log-domain."""
    m = K if isinstance(K, EquilibriumMeasure) else equilibrium_measure(K)
    if table is None:
        if meas is None:
            npb = nodes_per_band or max(512, 8 * n)
            meas = discretize(m, w, nodes_per_band=npb)
        table = stieltjes(meas, n)
    return math.exp(table.log_norm_sq(n) - 2 * n * m.log_capacity)


# -------------------------------------------------------------------------------
# bound audit


def l2_bound_audit(K: RealCompactSet, w: Weight, n: int, *,
                   measure: EquilibriumMeasure | None = None,
                   table: RecurrenceTable | None = None) -> list[BoundReport]:
    """Audit the L2 lower bounds against the computed Widom factor."""
    m = measure or equilibrium_measure(K)
    W2 = widom_2_squared(m, w, n, table=table)
    S = szego_factor(m, w).value
    prof = classify_weight_l2(w, m.set)
    reports: list[BoundReport] = []

    def rep(bound_id, applicable, guaranteed, reason, rhs=None):
        if applicable and rhs is not None:
            reports.append(BoundReport(bound_id, True, guaranteed, reason,
                                       lhs=W2, rhs=rhs, margin=W2 - rhs,
                                       lhs_lower=W2))
        else:
            reports.append(BoundReport(bound_id, False, False, reason))

    rep("good-old-uni", True, True, "universal L2 Szego lower bound", S)

    doubled_guaranteed = False
    doubled_reason = "informational only for this weight family"
    if prof.kind == "unit":
        doubled_guaranteed = True
        doubled_reason = "unweighted case on a real set"

    if prof.kind == "rational":
        R = prof.rational
        d = R.d1 - R.d0
        if n > d / 2:
            from .chebyshev import _green_sum
            gsum = _green_sum(m, R.zeros())
            denom = 1.0 + math.sqrt(max(0.0, 1.0 - math.exp(-2.0 * gsum)))
            rep("LB1-OP", True, True, "rational weight, n > d/2",
                2.0 * S / denom)
            if prof.zeros_in_K:
                rep("LB2-OP", True, True, "rational weight with zeros in K",
                    2.0 * S)
                doubled_guaranteed = True
                doubled_reason = "LB2-OP applies"
            else:
                rep("LB2-OP", False, False, "zeros not all in K")
        else:
            rep("LB1-OP", False, False, f"needs n > d/2 = {d/2:g}")
            rep("LB2-OP", False, False, f"needs n > d/2 = {d/2:g}")
    else:
        rep("LB1-OP", False, False, "weight is not rational")
        rep("LB2-OP", False, False, "weight is not rational")

    if prof.kind == "rational-product":
        if n > prof.pole_excess:
            rep("LB-OP-rpw", True, True,
                "rational product weight, n > d1 - d0", 2.0 * S)
            doubled_guaranteed = True
            doubled_reason = "rational-product L2 bound applies"
        else:
            rep("LB-OP-rpw", False, False,
                f"needs n > d1 - d0 = {prof.pole_excess}")
    else:
        rep("LB-OP-rpw", False, False, "weight is not a rational product weight")

    rep("2S", True, doubled_guaranteed, doubled_reason, 2.0 * S)
    return reports


@dataclass(frozen=True)
class L2SweepRow:
    n: int
    W2_squared: float
    two_S: float
    gap: float


@dataclass(frozen=True)
class L2SweepTable:
    rows: tuple[L2SweepRow, ...]

    def dyadic_decreasing(self) -> bool:
        g = [r.gap for r in self.rows]
        return all(g[i + 1] <= g[i] * (1.0 + 1e-9) for i in range(len(g) - 1))


def szego_limit_check(K: RealCompactSet, w: Weight,
                      n_list: Sequence[int]) -> L2SweepTable:
    """Rows (n, [W_2,n]^2, 2S) along increasing degrees."""
    if list(n_list) != sorted(n_list):
        raise ValueError("n_list must be increasing")
    m = equilibrium_measure(K)
    S = szego_factor(m, w).value
    nmax = max(n_list)
    meas = discretize(m, w, nodes_per_band=max(512, 8 * nmax))
    table = stieltjes(meas, nmax)
    rows = []
    for n in n_list:
        W2 = widom_2_squared(m, w, n, table=table)
        rows.append(L2SweepRow(n=n, W2_squared=W2, two_S=2.0 * S,
                               gap=abs(W2 - 2.0 * S)))
    return L2SweepTable(tuple(rows))


@dataclass(frozen=True)
class L2EqualityReport:
    distance: float
    integral_deviation: float   # | int w Q_n^2 dmu - 1/2 | by independent quadrature
    poly_relative_gap: float    # sup |P_n - T_{n,sqrt w}| / sup |P_n| on K
    sublevel: RealCompactSet


def l2_equality_case_check(K: RealCompactSet, R: RationalFunction, n: int, *,
                           measure: EquilibriumMeasure | None = None) -> L2EqualityReport:
    """Equality tests for the doubled L2 bound with rational weight w = R:
    K should equal (w Q_n^2)^{-1}([0,1]) for Q_n = P_n / sqrt(2 ||P_n||^2),
    and P_n should coincide with the weighted Chebyshev polynomial T_{n,sqrt w}.
    """
    m = measure or equilibrium_measure(K)
    w = AbsRationalWeight(R)
    meas = discretize(m, w, nodes_per_band=max(512, 8 * n))
    table = stieltjes(meas, n)
    norm_sq = table.norm_sq(n)

    scale = math.sqrt(2.0 * norm_sq)

    class _Q:
        degree = n

        def __call__(self, x):
            return table.eval_poly(n, x) / scale

    # independent quadrature for the half-mass identity
    sings = w.singular_points()
    integral = m.integrate(
        lambda x: np.asarray(w(x), dtype=float) * _Q()(x) ** 2,
        singularities=sings, tol=1e-11)

    Ln = sublevel_bands(R, _Q(), Interval(0.0, 1.0))
    dist = hausdorff_distance(K, Ln)

    cheb = weighted_chebyshev(K, SqrtRationalWeight(R), n, tol=1e-9, measure=m)
    poly = cheb.polynomial()
    xs = K.sample_grid(4096)
    pvals = table.eval_poly(n, xs)
    tvals = np.asarray(poly(xs), dtype=float)
    gap = float(np.max(np.abs(pvals - tvals)) / max(np.max(np.abs(pvals)), 1e-300))

    return L2EqualityReport(distance=dist,
                            integral_deviation=abs(integral - 0.5),
                            poly_relative_gap=gap,
                            sublevel=Ln)
