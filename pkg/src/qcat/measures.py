"""Quantum-classical distance and structure measures.

All fields live on the unit torus, so the trace of a product of two densities
is a plain mode sum by Parseval: Tr[A B] = sum_k A_k conj(B_k), which equals
the grid average of the product of the synthesised functions.  The working
distance is

    K1(P, Q) = ln[ Tr(P^2) Tr(Q^2) / Tr(PQ)^2 ]  >= 0,

zero exactly when P and Q are proportional; it is the epsilon = 1 member of
the generalised Kullback-Leibler family K_eps, reported with the opposite
sign so that "maximal distance" is a maximum.  chi^2 is the mean-square
Fourier radius 4 pi^2 <|k|^2> of a field, the standard structure measure.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .phase_space import make_coherent_classical

__all__ = [
    "RunTrace",
    "ExtremaResult",
    "overlap",
    "k1_distance",
    "k_epsilon",
    "chi_squared",
    "track_extrema",
    "measure_lambda2",
]


def _window_values(field) -> tuple[np.ndarray, int] | None:
    k_max = getattr(field, "k_max", None)
    values = getattr(field, "values", None)
    if k_max is None or values is None:
        return None
    return values, int(k_max)


def overlap(a, b) -> float:
    """Torus trace Tr[AB] of two real densities.

    Mode fields (anything with .values/.k_max) use the Parseval sum
    sum_k A_k conj(B_k); real-space grids use the grid mean of the product.
    The imaginary residue must be negligible (hermitian-symmetric inputs),
    otherwise an upstream invariant is broken and this raises.
    """
    fa, fb = _window_values(a), _window_values(b)
    if (fa is None) != (fb is None):
        raise ValueError("cannot mix mode fields and grids in overlap")
    if fa is not None:
        va, ka = fa
        vb, kb = fb
        if ka != kb:
            raise ValueError(f"window mismatch: k_max {ka} vs {kb}")
        val = np.sum(va * np.conj(vb))
        scale = np.linalg.norm(va) * np.linalg.norm(vb)
    else:
        va = np.asarray(a)
        vb = np.asarray(b)
        if va.shape != vb.shape:
            raise ValueError("grid shape mismatch")
        val = np.mean(va * np.conj(vb))
        scale = float(np.sqrt(np.mean(np.abs(va) ** 2) * np.mean(np.abs(vb) ** 2)))
    if abs(val.imag) > 1e-8 * max(scale, 1e-300):
        raise ValueError(f"overlap has non-negligible imaginary part {val.imag:.3e}")
    return float(val.real)


def k1_distance(p, q) -> float:
    """Distance ln[Tr(P^2) Tr(Q^2) / Tr(PQ)^2]; +inf for orthogonal fields.

    Nonnegative by Cauchy-Schwarz, zero iff P = c Q, invariant under scaling
    of either argument.
    """
    pp = overlap(p, p)
    qq = overlap(q, q)
    if pp <= 0 or qq <= 0:
        raise ValueError("k1_distance needs positive self-overlaps")
    pq = overlap(p, q)
    if pq <= 0:
        return float("inf")
    val = float(np.log(pp * qq) - 2.0 * np.log(pq))
    # Cauchy-Schwarz guarantees val >= 0; clip roundoff-level negatives only.
    return max(val, 0.0) if val > -1e-12 else val


def k_epsilon(p: np.ndarray, q: np.ndarray, eps: float) -> float:
    """Generalised K-L distance of order eps between positive grid densities.

    (1/eps)[ln Tr(P Q^eps) - ln Tr(P^{1+eps}) + ln Tr(P^eps Q) - ln Tr(Q^{1+eps})]
    with Tr the grid mean.  At eps = 1 this equals -k1_distance; as eps -> 0
    it tends to the symmetrised Kullback-Leibler distance.  Only defined for
    strictly positive fields (fractional powers), so Wigner functions with
    negative regions are rejected.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must be in (0, 1]")
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("grid shape mismatch")
    if np.any(p <= 0) or np.any(q <= 0):
        raise ValueError("k_epsilon needs strictly positive densities")
    return float((np.log(np.mean(p * q**eps)) - np.log(np.mean(p ** (1.0 + eps)))
                  + np.log(np.mean(p**eps * q)) - np.log(np.mean(q ** (1.0 + eps))))
                 / eps)


def chi_squared(field) -> float:
    """Mean-square Fourier radius sum_k 4 pi^2 |k|^2 |F_k|^2 / sum_k |F_k|^2."""
    fv = _window_values(field)
    if fv is None:
        raise ValueError("chi_squared needs a mode field")
    values, k_max = fv
    k = np.arange(-k_max, k_max + 1)
    kq, kp = np.meshgrid(k, k, indexing="ij")
    power = np.abs(values) ** 2
    total = float(np.sum(power))
    if total <= 0:
        raise ValueError("empty field")
    return float(4.0 * np.pi**2 * np.sum((kq**2 + kp**2) * power) / total)


@dataclass(frozen=True)
class RunTrace:
    """Per-step series of one paired run; index 0 is the initial state."""

    n_dim: int
    hbar: float
    d: float
    k_max: int
    k1_distance: np.ndarray
    chi2_classical: np.ndarray
    chi2_quantum: np.ndarray
    d_chi2_quantum: np.ndarray

    def __post_init__(self):
        n = len(self.k1_distance)
        for name in ("chi2_classical", "chi2_quantum", "d_chi2_quantum"):
            if len(getattr(self, name)) != n:
                raise ValueError("trace series must all have equal length")

    @property
    def steps(self) -> int:
        return len(self.k1_distance) - 1


@dataclass(frozen=True)
class ExtremaResult:
    k1_max: float
    d_chi2_max: float
    t_k1_max: int
    t_d_chi2_max: int
    skipped_infinite: bool = False


def track_extrema(trace: RunTrace, t_burn: int) -> ExtremaResult:
    """Maxima of K1 and D chi^2_quantum over t in (t_burn, t_m].

    Infinite K1 samples (orthogonal fields) are excluded with a warning flag;
    if every sample is infinite there is nothing to report and this raises.
    """
    if t_burn >= trace.steps:
        raise ValueError("t_burn must be smaller than the number of steps")
    sl = slice(t_burn + 1, None)
    k1 = trace.k1_distance[sl]
    finite = np.isfinite(k1)
    skipped = bool(np.any(~finite))
    if not np.any(finite):
        raise ValueError("all K1 samples are infinite after the burn-in")
    if skipped:
        warnings.warn("infinite K1 samples excluded from extremum tracking")
    k1_masked = np.where(finite, k1, -np.inf)
    i_k1 = int(np.argmax(k1_masked))
    dchi = trace.d_chi2_quantum[sl]
    i_dc = int(np.argmax(dchi))
    return ExtremaResult(
        k1_max=float(k1_masked[i_k1]),
        d_chi2_max=float(dchi[i_dc]),
        t_k1_max=t_burn + 1 + i_k1,
        t_d_chi2_max=t_burn + 1 + i_dc,
        skipped_infinite=skipped,
    )


def measure_lambda2(cat, k_max: int = 512, steps: int = 6,
                    hbar_eff: float = 1.0 / (64.0 * np.pi)) -> float:
    """Growth rate of ln chi^2 under noiseless classical evolution.

    Runs the map without noise from the default Gaussian, then fits the
    least-squares slope of ln chi^2(t) over the longest run of finite
    differences that agree with their mean to 10% (the early transient and
    the window-saturated tail fall outside it).  The window must be large
    enough that at least two consecutive clean differences exist.
    """
    from .dynamics import classical_step  # local import to avoid a cycle

    dens = make_coherent_classical((0.5, 0.5), hbar_eff, k_max)
    log_chi = [np.log(chi_squared(dens))]
    for _ in range(steps):
        dens = classical_step(dens, cat)
        log_chi.append(np.log(chi_squared(dens)))
    diffs = np.diff(log_chi)

    # longest run of mutually consistent differences; ties go to the fastest
    # growth (the transient approach and the window-saturated tail are slower
    # than the asymptotic rate)
    best = None  # (length, mean, start, end)
    n = len(diffs)
    for i in range(n):
        for j in range(i + 1, n):
            seg = diffs[i:j + 1]
            m = seg.mean()
            if m <= 0:
                continue
            if np.all(np.abs(seg - m) <= 0.10 * m):
                cand = (j - i + 1, m, i, j)
                if best is None or cand[:2] > best[:2]:
                    best = cand
    if best is None:
        raise ValueError("no linear-growth segment found; increase k_max")
    _, _, i, j = best
    ts = np.arange(i, j + 2)
    slope = np.polyfit(ts, np.asarray(log_chi)[i:j + 2], 1)[0]
    return float(slope)
