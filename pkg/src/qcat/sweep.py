"""Parameter-plane sweeps, composite-parameter collapse, and fits.

A sweep runs the paired evolution over a grid of (N, D) points and records
the extremal measures per point.  The analysis side builds the composite
parameter zeta = hbar^alpha lambda^beta D^gamma, quantifies how well a
measure collapses onto a single curve of zeta (binned variance ratio),
searches the damping exponent gamma, fits a logistic transition in ln zeta,
and fits the small-zeta expansion of the quantum/classical chi^2 ratio
against the basis (sqrt(zeta), zeta, zeta^(3/2)).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .dynamics import DEFAULT_MAP, CatMapSpec, RunConfig, evolve
from .measures import measure_lambda2, track_extrema

__all__ = [
    "AnalysisError",
    "ExponentTriple",
    "SweepPoint",
    "TransitionFit",
    "ChiExpansionFit",
    "DEFAULT_N_GRID",
    "DEFAULT_D_GRID",
    "default_grid",
    "composite_parameter",
    "run_sweep",
    "collapse_spread",
    "binned_medians",
    "search_exponents",
    "fit_transition",
    "fit_chi_expansion",
]


class AnalysisError(RuntimeError):
    """A sweep analysis could not be carried out on the given table."""


# half-decade ladder in hbar (N doubles every two entries) x log-spaced D
DEFAULT_N_GRID: tuple[int, ...] = (16, 23, 32, 45, 64, 91, 128)
DEFAULT_D_GRID: tuple[float, ...] = tuple(np.logspace(-5, -1, 9))


def default_grid() -> list[tuple[int, float]]:
    return [(n, d) for n in DEFAULT_N_GRID for d in DEFAULT_D_GRID]


@dataclass(frozen=True)
class ExponentTriple:
    """Exponents of zeta = hbar^alpha lambda^beta D^gamma.

    alpha is pinned to 2 by default: zeta and any power zeta^c collapse
    identically, so only exponent ratios are identifiable.
    """

    alpha: float = 2.0
    beta: float = 1.0
    gamma: float = -1.0
    alpha_pinned: bool = True

    def __post_init__(self):
        if self.alpha_pinned and self.alpha != 2.0:
            raise ValueError("pinned triples fix alpha = 2")


DEFAULT_EXPONENTS = ExponentTriple()


def composite_parameter(hbar: float, lam: float, d: float,
                        exponents: ExponentTriple = DEFAULT_EXPONENTS) -> float:
    """zeta = hbar^alpha lam^beta D^gamma for positive inputs."""
    if hbar <= 0 or lam <= 0 or d <= 0:
        raise ValueError("composite parameter needs positive inputs")
    return float(hbar**exponents.alpha * lam**exponents.beta * d**exponents.gamma)


@dataclass(frozen=True)
class SweepPoint:
    """One row of a sweep table."""

    n_dim: int
    hbar: float
    d: float
    lam2: float
    zeta: float
    k1_max: float
    d_chi2_max: float
    chi2_ratio: float
    flag: str = ""

    @property
    def ok(self) -> bool:
        return self.flag == ""


def _point_from_run(n_dim: int, d: float, cat_key, t_m: int, t_burn: int,
                    center, k_max, lam2: float,
                    exponents: ExponentTriple) -> SweepPoint:
    cat = CatMapSpec(*cat_key)
    hbar = 1.0 / (2.0 * math.pi * n_dim)
    try:
        cfg = RunConfig(n_dim=n_dim, d=d, cat=cat, k_max=k_max, t_m=t_m,
                        t_burn=t_burn, center=tuple(center), lam2=lam2)
        trace = evolve(cfg)
        ext = track_extrema(trace, t_burn)
        chi_c = trace.chi2_classical[ext.t_d_chi2_max]
        chi_q = trace.chi2_quantum[ext.t_d_chi2_max]
        # ratio undefined once the classical structure has fully died
        ratio = chi_q / chi_c if chi_c > 1e-12 else float("nan")
        flag = "inf_k1_skipped" if ext.skipped_infinite else ""
        return SweepPoint(
            n_dim=n_dim, hbar=hbar, d=d, lam2=lam2,
            zeta=composite_parameter(hbar, lam2, d, exponents),
            k1_max=ext.k1_max, d_chi2_max=ext.d_chi2_max,
            chi2_ratio=float(ratio), flag=flag)
    except Exception as exc:  # per-point failures become flagged rows
        return SweepPoint(n_dim=n_dim, hbar=hbar, d=d, lam2=lam2,
                          zeta=float("nan"), k1_max=float("nan"),
                          d_chi2_max=float("nan"), chi2_ratio=float("nan"),
                          flag=f"error: {exc}")


def run_sweep(grid: list[tuple[int, float]],
              cat: CatMapSpec = DEFAULT_MAP,
              t_m: int = 40,
              t_burn: int = 2,
              center: tuple[float, float] = (0.5, 0.5),
              k_max: int | None = None,
              exponents: ExponentTriple = DEFAULT_EXPONENTS,
              use_measured_lambda: bool = True,
              workers: int = 1) -> list[SweepPoint]:
    """One SweepPoint per (N, D) grid entry, in grid order.

    Points are computed independently and deterministically; per-point
    failures are recorded as flagged rows rather than aborting the sweep.
    lam2 is measured once per map (or taken as the bare 2*lambda when
    use_measured_lambda is false) and reused for zeta throughout.
    """
    for n_dim, d in grid:
        if d <= 0:
            raise ValueError("all sweep D values must be positive")
        if n_dim < 2:
            raise ValueError("all sweep N values must be >= 2")
    lam2 = measure_lambda2(cat) if use_measured_lambda else 2.0 * cat.lam
    args = [(n, d, cat.key(), t_m, t_burn, center, k_max, lam2, exponents)
            for n, d in grid]
    if workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_point_star, args))
    else:
        points = [_point_from_run(*a) for a in args]
    return points


def _point_star(args) -> SweepPoint:
    return _point_from_run(*args)


_MEASURES = {"k1": "k1_max", "dchi2": "d_chi2_max"}


def _table_columns(points: list[SweepPoint], measure: str):
    attr = _MEASURES.get(measure)
    if attr is None:
        raise ValueError(f"unknown measure {measure!r}; use one of {sorted(_MEASURES)}")
    rows = [p for p in points if p.ok and np.isfinite(getattr(p, attr))]
    if not rows:
        raise AnalysisError("no usable rows in sweep table")
    hbar = np.array([p.hbar for p in rows])
    lam = np.array([p.lam2 for p in rows])
    d = np.array([p.d for p in rows])
    y = np.array([getattr(p, attr) for p in rows])
    return hbar, lam, d, y


def _log_zeta(hbar, lam, d, exponents: ExponentTriple) -> np.ndarray:
    return (exponents.alpha * np.log(hbar) + exponents.beta * np.log(lam)
            + exponents.gamma * np.log(d))


def collapse_spread(points: list[SweepPoint], measure: str = "k1",
                    exponents: ExponentTriple = DEFAULT_EXPONENTS,
                    n_bins: int = 8) -> float:
    """Fraction of measure variance left unexplained by zeta alone.

    Rows are binned by ln zeta into n_bins equal-width bins; the count-
    weighted mean of the within-bin variances is divided by the total
    variance.  0 means perfect collapse, 1 means zeta explains nothing.
    Bins with fewer than two rows are excluded.
    """
    if n_bins < 4:
        raise ValueError("need n_bins >= 4")
    hbar, lam, d, y = _table_columns(points, measure)
    if len(np.unique(hbar)) < 2 or len(np.unique(d)) < 2:
        raise AnalysisError("collapse needs >= 2 distinct hbar and D values")
    total_var = float(np.var(y))
    if total_var == 0.0:
        warnings.warn("degenerate sweep table: all measure values equal")
        return 0.0
    x = _log_zeta(hbar, lam, d, exponents)
    edges = np.linspace(x.min(), x.max(), n_bins + 1)
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, n_bins - 1)
    num = 0.0
    cnt = 0
    for b in range(n_bins):
        sel = idx == b
        n_b = int(np.sum(sel))
        if n_b < 2:
            continue
        num += n_b * float(np.var(y[sel]))
        cnt += n_b
    if cnt == 0:
        raise AnalysisError("all ln-zeta bins have fewer than two rows")
    return (num / cnt) / total_var


def binned_medians(points: list[SweepPoint], measure: str = "dchi2",
                   exponents: ExponentTriple = DEFAULT_EXPONENTS,
                   n_bins: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Median measure per ln-zeta bin; returns (bin centres in ln zeta, medians)."""
    hbar, lam, d, y = _table_columns(points, measure)
    x = _log_zeta(hbar, lam, d, exponents)
    edges = np.linspace(x.min(), x.max(), n_bins + 1)
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, n_bins - 1)
    centers, meds = [], []
    for b in range(n_bins):
        sel = idx == b
        if np.sum(sel) < 2:
            continue
        centers.append(0.5 * (edges[b] + edges[b + 1]))
        meds.append(float(np.median(y[sel])))
    return np.array(centers), np.array(meds)


def search_exponents(points: list[SweepPoint], measure: str = "k1",
                     alpha: float = 2.0, beta: float = 1.0,
                     gamma_range: tuple[float, float] = (-3.0, 1.0),
                     n_scan: int = 41, gamma_tol: float = 1e-3,
                     n_bins: int = 8) -> tuple[ExponentTriple, float]:
    """Best damping exponent gamma with alpha pinned (beta fixed: lambda is constant).

    Minimises collapse_spread over a 41-point coarse scan of gamma refined by
    golden-section search.  The table must span at least two decades in D and
    a factor of a few in hbar, and the objective must actually vary, else the
    exponent is declared unidentifiable.
    """
    hbar, lam, d, _ = _table_columns(points, measure)
    if hbar.max() / hbar.min() < 4.0 or d.max() / d.min() < 99.0:
        raise AnalysisError(
            "exponent unidentifiable; widen parameter ranges "
            "(need >= 2 decades in D and a factor >= 4 in hbar)")

    def spread_at(g: float) -> float:
        e = ExponentTriple(alpha=alpha, beta=beta, gamma=g, alpha_pinned=(alpha == 2.0))
        return collapse_spread(points, measure, e, n_bins=n_bins)

    gammas = np.linspace(gamma_range[0], gamma_range[1], n_scan)
    spreads = np.array([spread_at(g) for g in gammas])
    if spreads.max() - spreads.min() < 1e-3:
        raise AnalysisError("exponent unidentifiable; widen parameter ranges")
    i = int(np.argmin(spreads))
    lo = gammas[max(i - 1, 0)]
    hi = gammas[min(i + 1, n_scan - 1)]

    # golden-section refinement on [lo, hi]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    u = b - invphi * (b - a)
    v = a + invphi * (b - a)
    fu, fv = spread_at(u), spread_at(v)
    while abs(b - a) > gamma_tol:
        if fu < fv:
            b, v, fv = v, u, fu
            u = b - invphi * (b - a)
            fu = spread_at(u)
        else:
            a, u, fu = u, v, fv
            v = a + invphi * (b - a)
            fv = spread_at(v)
    g_best = 0.5 * (a + b)
    best = ExponentTriple(alpha=alpha, beta=beta, gamma=float(g_best),
                          alpha_pinned=(alpha == 2.0))
    return best, spread_at(g_best)


@dataclass(frozen=True)
class TransitionFit:
    """Logistic fit y = c0 + c1 / (1 + exp(-(x - x0)/w)) in x = ln zeta."""

    ln_zeta_star: float
    width: float
    residual: float
    c0: float
    c1: float


def fit_transition(points: list[SweepPoint], measure: str = "k1",
                   exponents: ExponentTriple = DEFAULT_EXPONENTS,
                   max_iter: int = 500) -> TransitionFit:
    """Least-squares logistic fit of the measure against ln zeta.

    Initialisation: x0 = median x, w = 1, plateau levels from the data range.
    Fit quality is the caller's concern: poorly logistic data yields a large
    residual, not an error.
    """
    hbar, lam, d, y = _table_columns(points, measure)
    x = _log_zeta(hbar, lam, d, exponents)

    def model(p, xv):
        c0, c1, x0, w = p
        return c0 + c1 / (1.0 + np.exp(-(xv - x0) / max(abs(w), 1e-9)))

    p0 = np.array([y.min(), y.max() - y.min(), np.median(x), 1.0])
    res = scipy.optimize.least_squares(
        lambda p: model(p, x) - y, p0, xtol=1e-12, ftol=1e-12, gtol=1e-12,
        max_nfev=max_iter * 4)
    if not res.success and res.status == 0:
        raise AnalysisError("transition fit did not converge")
    c0, c1, x0, w = res.x
    resid = float(np.sqrt(np.mean(res.fun**2)))
    return TransitionFit(ln_zeta_star=float(x0), width=float(abs(w)),
                         residual=resid, c0=float(c0), c1=float(c1))


@dataclass(frozen=True)
class ChiExpansionFit:
    """chi_q^2/chi_c^2 - 1 ~ a' sqrt(zeta) + b zeta + c zeta^(3/2) at small zeta."""

    a_prime: float
    b: float
    c: float
    residual: float


def fit_chi_expansion(points: list[SweepPoint],
                      zeta_cut: float = 4.0) -> ChiExpansionFit:
    """Linear least squares of (chi2_ratio - 1) on (sqrt(z), z, z^1.5), z <= zeta_cut."""
    rows = [p for p in points
            if p.ok and np.isfinite(p.chi2_ratio) and np.isfinite(p.zeta)
            and p.zeta <= zeta_cut]
    if len(rows) < 8:
        raise AnalysisError(
            f"need >= 8 rows with zeta <= {zeta_cut} and a valid chi2 ratio")
    z = np.array([p.zeta for p in rows])
    y = np.array([p.chi2_ratio for p in rows]) - 1.0
    design = np.column_stack([np.sqrt(z), z, z**1.5])
    if np.linalg.matrix_rank(design) < 3:
        raise AnalysisError("rank-deficient design matrix (degenerate zeta values)")
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    return ChiExpansionFit(a_prime=float(coef[0]), b=float(coef[1]),
                           c=float(coef[2]), residual=resid)
