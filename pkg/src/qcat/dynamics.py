"""One-step propagators and the paired classical/quantum evolution loop.

Classical side: the cat map acts on Fourier modes by relabeling,
rho'(k) = rho(M^T k), and one period of isotropic diffusion damps mode k by
eta(k) = exp(-4 pi^2 D |k|^2) (exact heat kernel on the torus).

Quantum side: the quantised cat map U conjugates the state, and the same
diffusion acts as a random-displacement channel.  On the discrete torus that
channel multiplies chord coefficients by the lattice-periodised Gaussian

    mu(k) = g(kq) g(kp) / g(0)^2,   g(x) = sum_n exp(-4 pi^2 D (x + nN)^2),

which is exactly trace preserving and completely positive, and agrees with
the bare eta(k) whenever D N^2 is large enough that the displacement lattice
resolves the noise.  Both sides are stepped map-first, then noise.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .phase_space import (
    ChordField,
    DensityMatrix,
    SpectralDensity,
    chord_transform,
    make_coherent_classical,
    make_coherent_quantum,
    mode_grids,
)
from . import measures

__all__ = [
    "CatMapSpec",
    "NoiseSpec",
    "RunConfig",
    "QuantizationError",
    "DEFAULT_MAP",
    "classical_step",
    "classical_diffusion",
    "quantized_unitary",
    "quantum_step",
    "decoherence_step",
    "default_k_max",
    "evolve",
]


class QuantizationError(ValueError):
    """The requested (map, N) pair does not yield a unitary propagator."""


@dataclass(frozen=True)
class CatMapSpec:
    """Integer, unit-determinant, hyperbolic torus map (a b; c d).

    Quantizability needs a*b and c*d even.  lam is the positive Lyapunov
    exponent ln((|tr| + sqrt(tr^2 - 4))/2).
    """

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for x in (self.a, self.b, self.c, self.d):
            if x != int(x):
                raise ValueError("map entries must be integers")
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError("map must have determinant 1")
        if abs(self.a + self.d) <= 2:
            raise ValueError("map must be hyperbolic: |trace| > 2")
        if (self.a * self.b) % 2 != 0 or (self.c * self.d) % 2 != 0:
            raise ValueError("quantizability needs a*b and c*d even")

    @classmethod
    def from_matrix(cls, m) -> "CatMapSpec":
        m = np.asarray(m)
        if m.shape != (2, 2):
            raise ValueError("map matrix must be 2x2")
        return cls(int(m[0, 0]), int(m[0, 1]), int(m[1, 0]), int(m[1, 1]))

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=int)

    @property
    def lam(self) -> float:
        tr = abs(self.a + self.d)
        return float(np.log((tr + np.sqrt(tr * tr - 4.0)) / 2.0))

    def key(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)


DEFAULT_MAP = CatMapSpec(2, 1, 3, 2)


@dataclass(frozen=True)
class NoiseSpec:
    """Phase-space diffusion with coefficient D per map period."""

    d: float

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("D must be >= 0")

    def eta_window(self, k_max: int) -> np.ndarray:
        """Classical per-step damping exp(-4 pi^2 D |k|^2) on the window."""
        kq, kp = mode_grids(k_max)
        return np.exp(-4.0 * np.pi**2 * self.d * (kq**2 + kp**2))


@functools.lru_cache(maxsize=64)
def _chord_multiplier_axis(n_dim: int, d: float) -> np.ndarray:
    """Periodised, normalised single-axis damping g(k)/g(0) on labels 0..N-1."""
    if d == 0.0:
        return np.ones(n_dim)
    k = np.arange(n_dim, dtype=float)
    # image count so that exp(-4 pi^2 D (n N)^2) < 1e-18 at the cutoff
    n_img = max(3, int(np.ceil(np.sqrt(42.0 / (4.0 * np.pi**2 * d)) / n_dim)) + 1)
    g = np.zeros(n_dim)
    for n in range(-n_img, n_img + 1):
        g += np.exp(-4.0 * np.pi**2 * d * (k + n * n_dim) ** 2)
    return g / g[0]


@functools.lru_cache(maxsize=256)
def _classical_gather(k_max: int, map_key: tuple[int, int, int, int]):
    """Index arrays realising rho'(k) = rho(M^T k) with out-of-window zeroing."""
    a, b, c, d = map_key
    kq, kp = mode_grids(k_max)
    mq = a * kq + c * kp
    mp = b * kq + d * kp
    inside = (np.abs(mq) <= k_max) & (np.abs(mp) <= k_max)
    iq = np.where(inside, mq + k_max, 0)
    ip = np.where(inside, mp + k_max, 0)
    iq.flags.writeable = False
    ip.flags.writeable = False
    inside.flags.writeable = False
    return iq, ip, inside


def classical_step(density: SpectralDensity, cat: CatMapSpec) -> SpectralDensity:
    """Cat-map transport of Fourier modes; modes mapped outside the window vanish."""
    iq, ip, inside = _classical_gather(density.k_max, cat.key())
    vals = np.where(inside, density.values[iq, ip], 0.0)
    return SpectralDensity(k_max=density.k_max, values=vals)


def classical_diffusion(density: SpectralDensity, noise: NoiseSpec) -> SpectralDensity:
    """One map period of torus diffusion: multiply each mode by eta(k)."""
    if noise.d == 0.0:
        return density
    return SpectralDensity(k_max=density.k_max,
                           values=density.values * noise.eta_window(density.k_max))


def quantized_unitary(cat: CatMapSpec, n_dim: int) -> np.ndarray:
    """Quantised cat map U_{j'j} = (i b N)^{-1/2} exp[(i pi/(bN))(a j^2 - 2 j j' + d j'^2)].

    The raw quadratic-phase matrix is checked for unitarity; deviations beyond
    1e-8 (e.g. gcd(b, N) != 1, or |b| > 1) raise QuantizationError telling the
    caller to pick a compatible N.  Smaller deviations are polished away by
    polar projection so the result is unitary to machine precision.
    """
    if n_dim < 2:
        raise ValueError("need N >= 2")
    if cat.b == 0:
        raise QuantizationError("map has b = 0; no quadratic generating function")
    j = np.arange(n_dim)
    jj = j[None, :]
    jp = j[:, None]
    phase = (np.pi / (cat.b * n_dim)) * (cat.a * jj**2 - 2.0 * jj * jp + cat.d * jp**2)
    U = (1j * cat.b * n_dim) ** (-0.5) * np.exp(1j * phase)
    dev = np.abs(U @ U.conj().T - np.eye(n_dim)).max()
    if dev > 1e-8:
        raise QuantizationError(
            f"construction is not unitary (deviation {dev:.2e}) for map "
            f"{cat.key()} at N={n_dim}; choose N with gcd(b, N) = 1 "
            f"(and |b| = 1 for this quadratic form)")
    if dev > 1e-13:
        v, _, wh = np.linalg.svd(U)
        U = v @ wh
    return U


def quantum_step(rho: DensityMatrix, unitary: np.ndarray) -> DensityMatrix:
    """Unitary conjugation rho -> U rho U^dag."""
    return DensityMatrix(mat=unitary @ rho.mat @ unitary.conj().T)


def decoherence_step(rho: DensityMatrix, noise: NoiseSpec) -> DensityMatrix:
    """Random-displacement decoherence channel for one map period.

    Every chord coefficient W(k) is multiplied by the periodised damping
    mu(k) = g(kq) g(kp)/g(0)^2; equivalent to the Kraus sum over lattice
    displacements with Gaussian weights of variance 2D per axis.  Trace is
    preserved exactly and the channel is completely positive.
    """
    if noise.d == 0.0:
        return rho
    n = rho.n_dim
    mu = _chord_multiplier_axis(n, noise.d)
    j = np.arange(n)
    kp = np.arange(n)
    diags = rho.mat[j[None, :], (j[None, :] + kp[:, None]) % n]
    F = np.fft.fft(diags, axis=1)              # rows kp, cols kq
    F *= mu[None, :] * mu[:, None]
    diags = np.fft.ifft(F, axis=1)
    out = np.zeros_like(rho.mat)
    out[j[None, :], (j[None, :] + kp[:, None]) % n] = diags
    out = 0.5 * (out + out.conj().T)           # keep hermiticity drift at bay
    return DensityMatrix(mat=out)


def default_k_max(n_dim: int, d: float, lam2: float) -> int:
    """Default mode window: 4x the noisy structure radius, capped at the zone.

    The metastable structure scale chi^2 ~ lam2/(2 D) occupies modes out to
    |k| ~ sqrt(lam2/(2D))/(2 pi); a 4x margin keeps truncation error small.
    The window never exceeds (N-1)//2 so chord labels stay inside one
    Brillouin zone.
    """
    zone = (n_dim - 1) // 2
    if d <= 0:
        return zone
    radius = int(np.ceil(4.0 * np.sqrt(lam2 / (2.0 * d)) / (2.0 * np.pi)))
    return max(1, min(zone, max(32, radius)))


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one paired evolution run."""

    n_dim: int
    d: float
    cat: CatMapSpec = DEFAULT_MAP
    k_max: int | None = None
    t_m: int = 40
    t_burn: int = 2
    center: tuple[float, float] = (0.5, 0.5)
    lam2: float | None = None    # measured structure growth rate, for k_max

    def __post_init__(self):
        if self.n_dim < 2:
            raise ValueError("need N >= 2")
        if self.d < 0:
            raise ValueError("D must be >= 0")
        if not self.t_m > self.t_burn >= 0:
            raise ValueError("need t_m > t_burn >= 0")

    def resolved_k_max(self) -> int:
        if self.k_max is not None:
            if self.k_max > (self.n_dim - 1) // 2:
                raise ValueError("k_max exceeds the Brillouin zone (N-1)//2")
            return self.k_max
        lam2 = self.lam2 if self.lam2 is not None else 2.0 * self.cat.lam
        return default_k_max(self.n_dim, self.d, lam2)


def evolve(config: RunConfig) -> "measures.RunTrace":
    """Propagate matched classical and quantum states for t_m map periods.

    Both sides start from the same coherent Gaussian, are stepped map-first
    then noise, and after every full step the K1 distance between the chord
    field and the classical modes, both chi^2 values, and D chi^2_quantum are
    recorded (index 0 holds the initial state).
    """
    n = config.n_dim
    k_max = config.resolved_k_max()
    noise = NoiseSpec(config.d)
    hbar = 1.0 / (2.0 * np.pi * n)

    dens = make_coherent_classical(config.center, hbar, k_max)
    rho = make_coherent_quantum(config.center, n)
    unitary = quantized_unitary(config.cat, n)

    steps = config.t_m
    k1 = np.empty(steps + 1)
    chi2_c = np.empty(steps + 1)
    chi2_q = np.empty(steps + 1)

    chord = chord_transform(rho, k_max)
    k1[0] = measures.k1_distance(dens, chord)
    chi2_c[0] = measures.chi_squared(dens)
    chi2_q[0] = measures.chi_squared(chord)

    for t in range(1, steps + 1):
        dens = classical_diffusion(classical_step(dens, config.cat), noise)
        rho = decoherence_step(quantum_step(rho, unitary), noise)
        chord = chord_transform(rho, k_max)
        k1[t] = measures.k1_distance(dens, chord)
        chi2_c[t] = measures.chi_squared(dens)
        chi2_q[t] = measures.chi_squared(chord)

    return measures.RunTrace(
        n_dim=n,
        hbar=hbar,
        d=config.d,
        k_max=k_max,
        k1_distance=k1,
        chi2_classical=chi2_c,
        chi2_quantum=chi2_q,
        d_chi2_quantum=config.d * chi2_q,
    )
